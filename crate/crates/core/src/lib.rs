//! Reputation-weighted consortium consensus for threat-intelligence sharing,
//! with a deterministic discrete-event simulator, fault injection, two
//! baseline protocols and an experiment pipeline built on top.
//!
//! Layering, bottom to top:
//!
//! * [`rng`], [`domain`]: deterministic randomness and shared value types.
//! * [`reputation`]: the Bayesian scoring engine that drives supervision.
//! * [`cti`], [`ledger`]: synthetic workload records and the on-disk log.
//! * [`messages`], [`faults`]: wire types and Byzantine behavior wrappers.
//! * [`protocol`], [`baseline`]: the reputation protocol plus crash-tolerant
//!   and vote-based Byzantine-tolerant reference implementations.
//! * [`sim`], [`trace`], [`verify`]: event loop, structured traces, safety
//!   invariant checking.
//! * [`metrics`], [`scenario`], [`runner`]: measurement, experiment configs
//!   and the batch runner behind the CLI.

pub mod baseline;
pub mod cti;
pub mod domain;
pub mod faults;
pub mod ledger;
pub mod messages;
pub mod metrics;
pub mod protocol;
pub mod reputation;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod sim;
pub mod trace;
pub mod verify;
