//! Core value types shared by the consensus protocols, the simulator and the
//! metrics pipeline.

use std::fmt;

/// Dense node identifier, `0..cluster_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[must_use]
    pub const fn new(raw: u32) -> Self {
        NodeId(raw)
    }

    #[must_use]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Election term. Starts at 0 before any election and only ever increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Term(pub u64);

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Position in the replicated ledger. Index 0 means "no entries yet";
/// the first committed entry has index 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LogIndex(pub u64);

impl LogIndex {
    #[must_use]
    pub const fn next(self) -> LogIndex {
        LogIndex(self.0 + 1)
    }
}

impl fmt::Display for LogIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.0)
    }
}

/// Simulated clock value in abstract integer time units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    #[must_use]
    pub const fn plus(self, delta: u64) -> SimTime {
        SimTime(self.0 + delta)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Opaque token tying a generated threat record to the proposals derived from
/// it. Used only by the harness for correctness scoring, never stored in a
/// ledger entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundTruthId(pub u64);

/// Role a node currently plays. Supervisor is a part-time role taken by a
/// follower, so a Supervisor still counts as a follower for quorum purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeState {
    Follower,
    Candidate,
    Leader,
    Supervisor,
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeState::Follower => "follower",
            NodeState::Candidate => "candidate",
            NodeState::Leader => "leader",
            NodeState::Supervisor => "supervisor",
        };
        f.write_str(s)
    }
}

/// Closed set of shareable attack attribute keys. Only these six ever appear
/// in a proposal; anything privacy-sensitive stays in the private half of a
/// threat record and is stripped before proposal creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttributeKey {
    AttackerIp,
    AttackMethod,
    AttackTool,
    Characteristics,
    Ttps,
    Hash,
}

impl AttributeKey {
    pub const ALL: [AttributeKey; 6] = [
        AttributeKey::AttackerIp,
        AttributeKey::AttackMethod,
        AttributeKey::AttackTool,
        AttributeKey::Characteristics,
        AttributeKey::Ttps,
        AttributeKey::Hash,
    ];

    #[must_use]
    pub const fn name(self) -> &'static str {
        match self {
            AttributeKey::AttackerIp => "attacker_ip",
            AttributeKey::AttackMethod => "attack_method",
            AttributeKey::AttackTool => "attack_tool",
            AttributeKey::Characteristics => "characteristics",
            AttributeKey::Ttps => "ttps",
            AttributeKey::Hash => "hash",
        }
    }

    #[must_use]
    pub const fn tag(self) -> u8 {
        match self {
            AttributeKey::AttackerIp => 0,
            AttributeKey::AttackMethod => 1,
            AttributeKey::AttackTool => 2,
            AttributeKey::Characteristics => 3,
            AttributeKey::Ttps => 4,
            AttributeKey::Hash => 5,
        }
    }

    #[must_use]
    pub const fn from_tag(tag: u8) -> Option<AttributeKey> {
        match tag {
            0 => Some(AttributeKey::AttackerIp),
            1 => Some(AttributeKey::AttackMethod),
            2 => Some(AttributeKey::AttackTool),
            3 => Some(AttributeKey::Characteristics),
            4 => Some(AttributeKey::Ttps),
            5 => Some(AttributeKey::Hash),
            _ => None,
        }
    }
}

/// One shareable key/value observation about an attack.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttackAttribute {
    pub key: AttributeKey,
    pub value: String,
}

impl AttackAttribute {
    pub fn new(key: AttributeKey, value: impl Into<String>) -> Self {
        AttackAttribute { key, value: value.into() }
    }
}

/// Consensus proposal: the privacy-reduced projection of a threat record,
/// positioned in the ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub term: Term,
    pub index: LogIndex,
    pub prev_index: LogIndex,
    pub entries: Vec<AttackAttribute>,
    pub origin: NodeId,
}

impl Proposal {
    /// Builds a proposal, enforcing that the index is the exact successor of
    /// `prev_index` and that the entry list is non-empty.
    pub fn new(
        term: Term,
        prev_index: LogIndex,
        entries: Vec<AttackAttribute>,
        origin: NodeId,
    ) -> Result<Proposal, DomainError> {
        if entries.is_empty() {
            return Err(DomainError::EmptyEntries);
        }
        Ok(Proposal {
            term,
            index: prev_index.next(),
            prev_index,
            entries,
            origin,
        })
    }

    /// The attribute keys in order, used to align a detection report against
    /// the proposal it answers.
    pub fn key_sequence(&self) -> Vec<AttributeKey> {
        self.entries.iter().map(|a| a.key).collect()
    }
}

/// What one follower claims to have detected for a proposal slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionReport {
    pub reporter: NodeId,
    pub term: Term,
    pub prev_index: LogIndex,
    pub entries: Vec<AttackAttribute>,
}

/// A committed proposal plus the commit timestamp at the node that holds it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub proposal: Proposal,
    pub committed_at: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("proposal entry list must not be empty")]
    EmptyEntries,
    #[error("proposal index {index} does not follow previous index {prev}")]
    IndexGap { prev: LogIndex, index: LogIndex },
    #[error("invalid parameters: {}", violations.join("; "))]
    InvalidParams { violations: Vec<String> },
}

/// Reputation model and timing knobs shared by the whole cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    /// Score every node starts with.
    pub r_init: f64,
    /// Faithfulness threshold; a node with score below this loses leader,
    /// candidate and supervisor eligibility.
    pub r_thld: f64,
    /// Reputation weight applied to each score update.
    pub reputation_weight: f64,
    /// Posterior threshold separating a correct detection from an incorrect
    /// one. The boundary itself classifies as correct.
    pub posterior_threshold: f64,
    /// Randomized election timeout range, inclusive, in sim-time units.
    pub election_timeout: (u64, u64),
    /// Leader heartbeat period in sim-time units.
    pub heartbeat_interval: u64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            r_init: 50.0,
            r_thld: 10.0,
            reputation_weight: 5.0,
            posterior_threshold: 0.5,
            election_timeout: (150, 300),
            heartbeat_interval: 50,
        }
    }
}

impl ProtocolParams {
    /// Checks every parameter constraint and returns the full list of
    /// violations, empty when the parameters are usable.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if !(1.0..=100.0).contains(&self.r_init) {
            violations.push(format!("r_init {} outside [1, 100]", self.r_init));
        }
        if !(1.0..=100.0).contains(&self.r_thld) {
            violations.push(format!("r_thld {} outside [1, 100]", self.r_thld));
        }
        if self.r_thld > self.r_init {
            violations.push(format!(
                "r_thld {} exceeds r_init {}",
                self.r_thld, self.r_init
            ));
        }
        if !(self.reputation_weight > 0.0) {
            violations.push(format!(
                "reputation_weight {} must be positive",
                self.reputation_weight
            ));
        }
        if !(self.posterior_threshold > 0.0 && self.posterior_threshold < 1.0) {
            violations.push(format!(
                "posterior_threshold {} outside (0, 1)",
                self.posterior_threshold
            ));
        }
        if self.election_timeout.0 == 0 {
            violations.push("election_timeout minimum must be positive".to_string());
        }
        if self.election_timeout.0 >= self.election_timeout.1 {
            violations.push(format!(
                "election_timeout range ({}, {}) must satisfy min < max",
                self.election_timeout.0, self.election_timeout.1
            ));
        }
        if self.heartbeat_interval == 0 {
            violations.push("heartbeat_interval must be positive".to_string());
        }
        if self.heartbeat_interval >= self.election_timeout.0 {
            violations.push(format!(
                "heartbeat_interval {} must be below election_timeout minimum {}",
                self.heartbeat_interval, self.election_timeout.0
            ));
        }
        violations
    }

    pub fn validated(self) -> Result<ProtocolParams, DomainError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(DomainError::InvalidParams { violations })
        }
    }

    /// Faithfulness test. The boundary is inclusive: a node sitting exactly
    /// at the threshold is still faithful.
    #[must_use]
    pub fn is_faithful(&self, score: f64) -> bool {
        score >= self.r_thld
    }
}

/// Clamps a reputation score into its legal `[1, 100]` band.
#[must_use]
pub fn clamp_score(score: f64) -> f64 {
    score.clamp(1.0, 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_are_valid() {
        assert!(ProtocolParams::default().validate().is_empty());
    }

    #[test]
    fn threshold_above_init_is_rejected() {
        let params = ProtocolParams {
            r_init: 20.0,
            r_thld: 30.0,
            ..ProtocolParams::default()
        };
        let violations = params.validate();
        assert!(violations.iter().any(|v| v.contains("r_thld")));
    }

    #[test]
    fn heartbeat_slower_than_election_floor_is_rejected() {
        let params = ProtocolParams {
            heartbeat_interval: 200,
            election_timeout: (150, 300),
            ..ProtocolParams::default()
        };
        let violations = params.validate();
        assert!(violations.iter().any(|v| v.contains("heartbeat_interval")));
    }

    #[test]
    fn multiple_violations_all_reported() {
        let params = ProtocolParams {
            r_init: 0.0,
            r_thld: 150.0,
            reputation_weight: -1.0,
            posterior_threshold: 1.5,
            election_timeout: (300, 150),
            heartbeat_interval: 0,
            ..ProtocolParams::default()
        };
        let violations = params.validate();
        assert!(violations.len() >= 5, "got {violations:?}");
    }

    #[test]
    fn faithfulness_boundary_is_inclusive() {
        let params = ProtocolParams::default();
        assert!(params.is_faithful(10.0));
        assert!(!params.is_faithful(9.999));
    }

    #[test]
    fn score_clamps_to_band() {
        assert_eq!(clamp_score(99.5 + 5.0), 100.0);
        assert_eq!(clamp_score(-3.0), 1.0);
        assert_eq!(clamp_score(55.5), 55.5);
    }

    #[test]
    fn proposal_index_is_exact_successor() {
        let p = Proposal::new(
            Term(1),
            LogIndex(4),
            vec![AttackAttribute::new(AttributeKey::Hash, "ab")],
            NodeId::new(0),
        )
        .unwrap();
        assert_eq!(p.index, LogIndex(5));
    }

    #[test]
    fn empty_proposal_rejected() {
        let err = Proposal::new(Term(1), LogIndex(0), vec![], NodeId::new(0)).unwrap_err();
        assert_eq!(err, DomainError::EmptyEntries);
    }
}
