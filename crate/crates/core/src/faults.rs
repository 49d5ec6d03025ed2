//! Byzantine and crash behavior wrappers. The simulator passes every
//! outbound message through the sender's harness; honest nodes are wrapped
//! in a strict identity.

use crate::domain::{NodeState, SimTime};
use crate::messages::WireMsg;
use crate::rng::DetRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorKind {
    Honest,
    /// Corrupts outgoing detection reports (and observation echoes in the
    /// all-pairs baseline) with the configured probability.
    FalseReporter,
    /// Drops all inbound and outbound traffic from `activation_time` on.
    CrashStop,
    /// Corrupts every outgoing proposal-bearing message while holding the
    /// proposer role.
    TamperingLeader,
}

impl BehaviorKind {
    #[must_use]
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorKind::Honest => "honest",
            BehaviorKind::FalseReporter => "false_reporter",
            BehaviorKind::CrashStop => "crash_stop",
            BehaviorKind::TamperingLeader => "tampering_leader",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "honest" => Some(BehaviorKind::Honest),
            "false_reporter" => Some(BehaviorKind::FalseReporter),
            "crash_stop" => Some(BehaviorKind::CrashStop),
            "tampering_leader" => Some(BehaviorKind::TamperingLeader),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorSpec {
    pub kind: BehaviorKind,
    pub activation_time: SimTime,
    /// Per-message corruption probability. FalseReporter only.
    pub false_report_probability: f64,
    /// Attribute values replaced per corrupted message.
    pub attribute_corruption_count: usize,
}

impl BehaviorSpec {
    #[must_use]
    pub fn honest() -> Self {
        BehaviorSpec {
            kind: BehaviorKind::Honest,
            activation_time: SimTime(0),
            false_report_probability: 0.0,
            attribute_corruption_count: 0,
        }
    }

    pub fn validate(&self, attribute_set_size: usize) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.false_report_probability) {
            return Err(format!(
                "false_report_probability {} outside [0, 1]",
                self.false_report_probability
            ));
        }
        if self.attribute_corruption_count > attribute_set_size {
            return Err(format!(
                "attribute_corruption_count {} exceeds attribute set size {}",
                self.attribute_corruption_count, attribute_set_size
            ));
        }
        Ok(())
    }

    #[must_use]
    pub fn is_byzantine(&self) -> bool {
        matches!(self.kind, BehaviorKind::FalseReporter | BehaviorKind::TamperingLeader)
    }
}

/// Per-node behavior state. Owns its own rng stream so adding or removing a
/// Byzantine node never perturbs any other node's draws.
#[derive(Debug)]
pub struct BehaviorHarness {
    spec: BehaviorSpec,
    rng: DetRng,
}

impl BehaviorHarness {
    pub fn new(spec: BehaviorSpec, rng: DetRng) -> Self {
        BehaviorHarness { spec, rng }
    }

    #[must_use]
    pub fn spec(&self) -> &BehaviorSpec {
        &self.spec
    }

    /// Crash-stop nodes go silent at activation; the simulator also refuses
    /// to deliver anything to them from that point.
    #[must_use]
    pub fn is_crashed(&self, now: SimTime) -> bool {
        self.spec.kind == BehaviorKind::CrashStop && now >= self.spec.activation_time
    }

    /// Filters one outbound message. Returns the message to actually send.
    pub fn apply(&mut self, sender_state: NodeState, msg: WireMsg, now: SimTime) -> WireMsg {
        if now < self.spec.activation_time {
            return msg;
        }
        match self.spec.kind {
            BehaviorKind::Honest | BehaviorKind::CrashStop => msg,
            BehaviorKind::FalseReporter => self.corrupt_reports(msg),
            BehaviorKind::TamperingLeader => self.tamper_proposals(sender_state, msg),
        }
    }

    fn corrupt_reports(&mut self, msg: WireMsg) -> WireMsg {
        match msg {
            WireMsg::ReputationCompute { mut report } => {
                if self.rng.chance(self.spec.false_report_probability) {
                    corrupt_values(
                        &mut report.entries,
                        self.spec.attribute_corruption_count,
                        &mut self.rng,
                    );
                }
                WireMsg::ReputationCompute { report }
            }
            WireMsg::BftVerify { round, from, mut entries } => {
                if self.rng.chance(self.spec.false_report_probability) {
                    corrupt_values(&mut entries, self.spec.attribute_corruption_count, &mut self.rng);
                }
                WireMsg::BftVerify { round, from, entries }
            }
            other => other,
        }
    }

    fn tamper_proposals(&mut self, sender_state: NodeState, msg: WireMsg) -> WireMsg {
        if sender_state != NodeState::Leader {
            return msg;
        }
        match msg {
            WireMsg::ProposalBroadcast { mut proposal, truth_key, supervisor, leader } => {
                corrupt_values(
                    &mut proposal.entries,
                    self.spec.attribute_corruption_count,
                    &mut self.rng,
                );
                WireMsg::ProposalBroadcast { proposal, truth_key, supervisor, leader }
            }
            WireMsg::AppendEntries {
                term,
                leader,
                prev_index,
                proposal: Some(mut p),
                leader_commit,
                supervisor,
                snapshot,
            } => {
                corrupt_values(&mut p.entries, self.spec.attribute_corruption_count, &mut self.rng);
                WireMsg::AppendEntries {
                    term,
                    leader,
                    prev_index,
                    proposal: Some(p),
                    leader_commit,
                    supervisor,
                    snapshot,
                }
            }
            WireMsg::BftProposal { round, mut proposal, truth_key } => {
                corrupt_values(
                    &mut proposal.entries,
                    self.spec.attribute_corruption_count,
                    &mut self.rng,
                );
                WireMsg::BftProposal { round, proposal, truth_key }
            }
            other => other,
        }
    }
}

/// Replaces `count` distinct attribute values with rng-drawn garbage.
fn corrupt_values(entries: &mut [crate::domain::AttackAttribute], count: usize, rng: &mut DetRng) {
    let n = entries.len();
    if n == 0 || count == 0 {
        return;
    }
    let count = count.min(n);
    // Partial Fisher-Yates over the index space picks distinct positions.
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + rng.next_below((n - i) as u64) as usize;
        order.swap(i, j);
        entries[order[i]].value = format!("corrupt_{:016x}", rng.next_u64());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AttackAttribute, AttributeKey, DetectionReport, LogIndex, NodeId, Term};

    fn report_msg() -> WireMsg {
        let entries = AttributeKey::ALL
            .iter()
            .map(|k| AttackAttribute::new(*k, format!("v_{}", k.name())))
            .collect();
        WireMsg::ReputationCompute {
            report: DetectionReport {
                reporter: NodeId::new(3),
                term: Term(1),
                prev_index: LogIndex(0),
                entries,
            },
        }
    }

    fn harness(kind: BehaviorKind, p: f64, count: usize) -> BehaviorHarness {
        let spec = BehaviorSpec {
            kind,
            activation_time: SimTime(0),
            false_report_probability: p,
            attribute_corruption_count: count,
        };
        BehaviorHarness::new(spec, DetRng::new(42))
    }

    #[test]
    fn honest_is_identity() {
        let mut h = harness(BehaviorKind::Honest, 0.0, 0);
        let msg = report_msg();
        assert_eq!(h.apply(NodeState::Follower, msg.clone(), SimTime(10)), msg);
    }

    #[test]
    fn full_corruption_mismatches_every_attribute() {
        let mut h = harness(BehaviorKind::FalseReporter, 1.0, 6);
        let original = report_msg();
        let out = h.apply(NodeState::Follower, original.clone(), SimTime(10));
        let (WireMsg::ReputationCompute { report: orig }, WireMsg::ReputationCompute { report: got }) =
            (original, out)
        else {
            panic!("variant changed");
        };
        for (a, b) in orig.entries.iter().zip(got.entries.iter()) {
            assert_eq!(a.key, b.key);
            assert_ne!(a.value, b.value);
            assert!(b.value.starts_with("corrupt_"));
        }
    }

    #[test]
    fn probability_zero_never_corrupts() {
        let mut h = harness(BehaviorKind::FalseReporter, 0.0, 6);
        for _ in 0..50 {
            let msg = report_msg();
            assert_eq!(h.apply(NodeState::Follower, msg.clone(), SimTime(5)), msg);
        }
    }

    #[test]
    fn partial_corruption_touches_exact_count() {
        let mut h = harness(BehaviorKind::FalseReporter, 1.0, 2);
        for _ in 0..30 {
            let original = report_msg();
            let out = h.apply(NodeState::Follower, original.clone(), SimTime(5));
            let (WireMsg::ReputationCompute { report: orig },
                 WireMsg::ReputationCompute { report: got }) = (original, out)
            else {
                panic!("variant changed");
            };
            let changed = orig
                .entries
                .iter()
                .zip(got.entries.iter())
                .filter(|(a, b)| a.value != b.value)
                .count();
            assert_eq!(changed, 2);
        }
    }

    #[test]
    fn inactive_before_activation_time() {
        let spec = BehaviorSpec {
            kind: BehaviorKind::FalseReporter,
            activation_time: SimTime(100),
            false_report_probability: 1.0,
            attribute_corruption_count: 6,
        };
        let mut h = BehaviorHarness::new(spec, DetRng::new(7));
        let msg = report_msg();
        assert_eq!(h.apply(NodeState::Follower, msg.clone(), SimTime(99)), msg);
        assert_ne!(h.apply(NodeState::Follower, msg.clone(), SimTime(100)), msg);
    }

    #[test]
    fn tampering_only_applies_while_leader() {
        let entries = vec![AttackAttribute::new(AttributeKey::Hash, "aa")];
        let p = crate::domain::Proposal::new(Term(2), LogIndex(0), entries, NodeId::new(0)).unwrap();
        let msg = WireMsg::ProposalBroadcast {
            proposal: p,
            truth_key: 5,
            supervisor: NodeId::new(1),
            leader: NodeId::new(0),
        };
        let mut h = harness(BehaviorKind::TamperingLeader, 0.0, 6);
        assert_eq!(h.apply(NodeState::Follower, msg.clone(), SimTime(5)), msg);
        assert_ne!(h.apply(NodeState::Leader, msg.clone(), SimTime(5)), msg);
    }

    #[test]
    fn tampering_leaves_heartbeats_alone() {
        let hb = WireMsg::AppendEntries {
            term: Term(2),
            leader: NodeId::new(0),
            prev_index: LogIndex(0),
            proposal: None,
            leader_commit: LogIndex(0),
            supervisor: None,
            snapshot: None,
        };
        let mut h = harness(BehaviorKind::TamperingLeader, 0.0, 6);
        assert_eq!(h.apply(NodeState::Leader, hb.clone(), SimTime(5)), hb);
    }

    #[test]
    fn crash_flag_tracks_activation() {
        let spec = BehaviorSpec {
            kind: BehaviorKind::CrashStop,
            activation_time: SimTime(500),
            false_report_probability: 0.0,
            attribute_corruption_count: 0,
        };
        let h = BehaviorHarness::new(spec, DetRng::new(1));
        assert!(!h.is_crashed(SimTime(499)));
        assert!(h.is_crashed(SimTime(500)));
    }

    #[test]
    fn corruption_count_validation() {
        let mut spec = BehaviorSpec::honest();
        spec.attribute_corruption_count = 7;
        assert!(spec.validate(6).is_err());
        spec.attribute_corruption_count = 6;
        assert!(spec.validate(6).is_ok());
        spec.false_report_probability = 1.5;
        assert!(spec.validate(6).is_err());
    }
}
