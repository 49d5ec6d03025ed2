//! Wire messages and timer kinds shared by all three protocol
//! implementations. Every message is a plain value; the simulator clones and
//! possibly mutates them (fault injection) in transit.

use crate::domain::{AttackAttribute, DetectionReport, LogIndex, NodeId, Proposal, Term};
use crate::reputation::ReputationTable;

#[derive(Debug, Clone, PartialEq)]
pub enum WireMsg {
    /// Candidate solicits a vote. Carries the candidate's log position so
    /// voters can refuse candidates with stale logs.
    RequestVote {
        term: Term,
        candidate: NodeId,
        last_log_term: Term,
        last_log_index: LogIndex,
    },
    RequestVoteReply {
        term: Term,
        voter: NodeId,
        granted: bool,
    },
    /// Voter asks the supervisor whether a candidate is faithful.
    ReputationValue {
        term: Term,
        candidate: NodeId,
    },
    ReputationValueReply {
        term: Term,
        candidate: NodeId,
        trusted: bool,
    },
    /// Leader opens a round: every peer learns the proposal, the acting
    /// supervisor, and the correlation key for its own cached observation.
    ProposalBroadcast {
        proposal: Proposal,
        truth_key: u64,
        supervisor: NodeId,
        leader: NodeId,
    },
    /// Follower's detection report for the pending proposal slot.
    ReputationCompute {
        report: DetectionReport,
    },
    /// Supervisor's classification verdict, broadcast to the whole cluster
    /// with a copy of the judged entries and the updated reputation table.
    ReputationComputeReply {
        term: Term,
        index: LogIndex,
        success: bool,
        entries: Vec<AttackAttribute>,
        leader_revoked: bool,
        snapshot: ReputationTable,
    },
    /// Replication carrier and heartbeat. `proposal: None` is a heartbeat.
    /// `snapshot` rides along when the leader appoints a supervisor so the
    /// appointee starts from the leader's freshest reputation view.
    AppendEntries {
        term: Term,
        leader: NodeId,
        prev_index: LogIndex,
        proposal: Option<Proposal>,
        leader_commit: LogIndex,
        supervisor: Option<NodeId>,
        snapshot: Option<ReputationTable>,
    },
    AppendEntriesReply {
        term: Term,
        from: NodeId,
        success: bool,
        last_index: LogIndex,
    },
    /// All-pairs baseline: proposer opens a numbered round.
    BftProposal {
        round: u64,
        proposal: Proposal,
        truth_key: u64,
    },
    /// All-pairs baseline: one node's observation echo for a round.
    BftVerify {
        round: u64,
        from: NodeId,
        entries: Vec<AttackAttribute>,
    },
}

impl WireMsg {
    /// Short stable name used in traces and message-count telemetry.
    #[must_use]
    pub fn kind(&self) -> &'static str {
        match self {
            WireMsg::RequestVote { .. } => "request_vote",
            WireMsg::RequestVoteReply { .. } => "request_vote_reply",
            WireMsg::ReputationValue { .. } => "reputation_value",
            WireMsg::ReputationValueReply { .. } => "reputation_value_reply",
            WireMsg::ProposalBroadcast { .. } => "proposal_broadcast",
            WireMsg::ReputationCompute { .. } => "reputation_compute",
            WireMsg::ReputationComputeReply { .. } => "reputation_compute_reply",
            WireMsg::AppendEntries { proposal: Some(_), .. } => "append_entries",
            WireMsg::AppendEntries { proposal: None, .. } => "heartbeat",
            WireMsg::AppendEntriesReply { .. } => "append_entries_reply",
            WireMsg::BftProposal { .. } => "bft_proposal",
            WireMsg::BftVerify { .. } => "bft_verify",
        }
    }

    /// The term stamped on the message, where one exists.
    #[must_use]
    pub fn term(&self) -> Option<Term> {
        match self {
            WireMsg::RequestVote { term, .. }
            | WireMsg::RequestVoteReply { term, .. }
            | WireMsg::ReputationValue { term, .. }
            | WireMsg::ReputationValueReply { term, .. }
            | WireMsg::ReputationComputeReply { term, .. }
            | WireMsg::AppendEntries { term, .. }
            | WireMsg::AppendEntriesReply { term, .. } => Some(*term),
            WireMsg::ProposalBroadcast { proposal, .. } => Some(proposal.term),
            WireMsg::ReputationCompute { report } => Some(report.term),
            WireMsg::BftProposal { .. } | WireMsg::BftVerify { .. } => None,
        }
    }
}

/// Self-addressed deadline events. Timers cannot be cancelled, so every
/// variant carries enough identity for stale firings to be ignored: a nonce
/// bumped on each re-arm, or an exact match against live state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerKind {
    Election { nonce: u64 },
    Heartbeat { nonce: u64 },
    /// Supervisor's report-collection window for one proposal slot.
    CollectDeadline { nonce: u64 },
    /// Leader's patience for the supervisor verdict before re-selection.
    VerdictDeadline { nonce: u64 },
    /// Voter's bound on a deferred certification request.
    VoteCertExpiry { term: Term, candidate: NodeId },
    /// Proposer-side abort for an all-pairs baseline round.
    BftRound { round: u64 },
}

impl TimerKind {
    #[must_use]
    pub fn name(&self) -> &'static str {
        match self {
            TimerKind::Election { .. } => "election",
            TimerKind::Heartbeat { .. } => "heartbeat",
            TimerKind::CollectDeadline { .. } => "collect_deadline",
            TimerKind::VerdictDeadline { .. } => "verdict_deadline",
            TimerKind::VoteCertExpiry { .. } => "vote_cert_expiry",
            TimerKind::BftRound { .. } => "bft_round",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AttributeKey;

    #[test]
    fn heartbeat_and_append_have_distinct_kinds() {
        let hb = WireMsg::AppendEntries {
            term: Term(1),
            leader: NodeId::new(0),
            prev_index: LogIndex(0),
            proposal: None,
            leader_commit: LogIndex(0),
            supervisor: None,
            snapshot: None,
        };
        assert_eq!(hb.kind(), "heartbeat");
        let entries = vec![AttackAttribute::new(AttributeKey::AttackerIp, "203.0.113.9")];
        let p = Proposal::new(Term(1), LogIndex(0), entries, NodeId::new(0)).unwrap();
        let ae = WireMsg::AppendEntries {
            term: Term(1),
            leader: NodeId::new(0),
            prev_index: LogIndex(0),
            proposal: Some(p),
            leader_commit: LogIndex(0),
            supervisor: None,
            snapshot: None,
        };
        assert_eq!(ae.kind(), "append_entries");
    }

    #[test]
    fn term_extraction_covers_proposal_carriers() {
        let entries = vec![AttackAttribute::new(AttributeKey::Hash, "ab")];
        let p = Proposal::new(Term(7), LogIndex(3), entries, NodeId::new(2)).unwrap();
        let msg = WireMsg::ProposalBroadcast {
            proposal: p,
            truth_key: 1,
            supervisor: NodeId::new(1),
            leader: NodeId::new(2),
        };
        assert_eq!(msg.term(), Some(Term(7)));
        let bft = WireMsg::BftVerify { round: 3, from: NodeId::new(1), entries: vec![] };
        assert_eq!(bft.term(), None);
    }
}
