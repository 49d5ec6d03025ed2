//! Structured run traces. Every simulator event produces one record; metrics
//! and the safety checker consume the typed form, and the line export exists
//! for debugging and golden-file comparison.

use std::fmt::Write as _;

use crate::domain::{LogIndex, NodeId, NodeState, SimTime, Term};

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    MsgSend { kind: &'static str, to: NodeId },
    MsgDeliver { kind: &'static str, from: NodeId },
    MsgDrop { kind: &'static str, to: NodeId },
    TimerFired { kind: &'static str },
    RoleChange { from: NodeState, to: NodeState },
    VoteGranted { candidate: NodeId },
    Propose { index: LogIndex, truth_key: u64 },
    Verdict { index: LogIndex, success: bool, posterior: f64 },
    Commit { index: LogIndex, origin: NodeId },
    /// Reputation score after a classified round, one record per change.
    Score { node: NodeId, score: f64 },
    /// A node's score crossed below the faithfulness threshold.
    Flagged { node: NodeId },
    SupervisorChange { supervisor: NodeId },
    LeaderRevoked { leader: NodeId },
    Reject { index: LogIndex, reason: &'static str },
    Quiescent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub at: SimTime,
    pub node: NodeId,
    pub term: Term,
    pub index: LogIndex,
    pub event: TraceEvent,
}

impl TraceEvent {
    #[must_use]
    pub fn kind(&self) -> &'static str {
        match self {
            TraceEvent::MsgSend { .. } => "send",
            TraceEvent::MsgDeliver { .. } => "deliver",
            TraceEvent::MsgDrop { .. } => "drop",
            TraceEvent::TimerFired { .. } => "timer",
            TraceEvent::RoleChange { .. } => "role",
            TraceEvent::VoteGranted { .. } => "vote",
            TraceEvent::Propose { .. } => "propose",
            TraceEvent::Verdict { .. } => "verdict",
            TraceEvent::Commit { .. } => "commit",
            TraceEvent::Score { .. } => "score",
            TraceEvent::Flagged { .. } => "flagged",
            TraceEvent::SupervisorChange { .. } => "supervisor",
            TraceEvent::LeaderRevoked { .. } => "revoked",
            TraceEvent::Reject { .. } => "reject",
            TraceEvent::Quiescent => "quiescent",
        }
    }

    fn detail(&self) -> String {
        match self {
            TraceEvent::MsgSend { kind, to } => format!("{kind} to={to}"),
            TraceEvent::MsgDeliver { kind, from } => format!("{kind} from={from}"),
            TraceEvent::MsgDrop { kind, to } => format!("{kind} to={to}"),
            TraceEvent::TimerFired { kind } => (*kind).to_string(),
            TraceEvent::RoleChange { from, to } => format!("{from}->{to}"),
            TraceEvent::VoteGranted { candidate } => format!("for={candidate}"),
            TraceEvent::Propose { index, truth_key } => {
                format!("index={index} key={truth_key:016x}")
            }
            TraceEvent::Verdict { index, success, posterior } => {
                format!("index={index} success={success} posterior={posterior:.6}")
            }
            TraceEvent::Commit { index, origin } => format!("index={index} origin={origin}"),
            TraceEvent::Score { node, score } => format!("node={node} score={score:.3}"),
            TraceEvent::Flagged { node } => format!("node={node}"),
            TraceEvent::SupervisorChange { supervisor } => format!("new={supervisor}"),
            TraceEvent::LeaderRevoked { leader } => format!("leader={leader}"),
            TraceEvent::Reject { index, reason } => format!("index={index} reason={reason}"),
            TraceEvent::Quiescent => String::new(),
        }
    }
}

/// Renders records as tab-separated lines:
/// `sim_time<TAB>node<TAB>event_kind<TAB>term<TAB>index<TAB>detail`.
#[must_use]
pub fn render_lines(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 48);
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.at,
            r.node,
            r.event.kind(),
            r.term,
            r.index,
            r.event.detail()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_is_tab_separated() {
        let records = vec![
            TraceRecord {
                at: SimTime(120),
                node: NodeId::new(2),
                term: Term(1),
                index: LogIndex(0),
                event: TraceEvent::RoleChange { from: NodeState::Follower, to: NodeState::Candidate },
            },
            TraceRecord {
                at: SimTime(300),
                node: NodeId::new(0),
                term: Term(1),
                index: LogIndex(4),
                event: TraceEvent::Commit { index: LogIndex(4), origin: NodeId::new(0) },
            },
        ];
        let text = render_lines(&records);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "120\tn2\trole\tt1\ti0\tfollower->candidate");
        assert_eq!(lines[1], "300\tn0\tcommit\tt1\ti4\tindex=i4 origin=n0");
    }

    #[test]
    fn every_event_kind_renders() {
        let events = [
            TraceEvent::MsgSend { kind: "heartbeat", to: NodeId::new(1) },
            TraceEvent::MsgDeliver { kind: "heartbeat", from: NodeId::new(0) },
            TraceEvent::MsgDrop { kind: "request_vote", to: NodeId::new(3) },
            TraceEvent::TimerFired { kind: "election" },
            TraceEvent::VoteGranted { candidate: NodeId::new(2) },
            TraceEvent::Propose { index: LogIndex(1), truth_key: 9 },
            TraceEvent::Verdict { index: LogIndex(1), success: true, posterior: 0.91 },
            TraceEvent::Score { node: NodeId::new(4), score: 55.0 },
            TraceEvent::Flagged { node: NodeId::new(4) },
            TraceEvent::SupervisorChange { supervisor: NodeId::new(3) },
            TraceEvent::LeaderRevoked { leader: NodeId::new(0) },
            TraceEvent::Reject { index: LogIndex(2), reason: "verdict_mismatch" },
            TraceEvent::Quiescent,
        ];
        let mut kinds = std::collections::BTreeSet::new();
        for e in events {
            assert!(kinds.insert(e.kind()), "duplicate kind {}", e.kind());
        }
    }
}
