//! Post-run invariant checks.
//!
//! A finished run carries enough evidence (typed traces plus the final
//! committed logs) to audit the properties the protocols promise. The
//! checker never consults protocol internals; everything is judged from
//! the outside, so a bug that forges its own bookkeeping still gets
//! caught when the observable record contradicts itself.
//!
//! Trace-based checks are skipped when the run was executed without
//! trace collection; log-based checks always apply.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{LogIndex, NodeId, NodeState, SimTime, Term};
use crate::sim::{ProtocolKind, RunOutcome};
use crate::trace::TraceEvent;

/// One broken invariant, with enough context to chase it down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

/// Audits every hard invariant a finished run must uphold. An empty
/// result means the run is clean.
#[must_use]
pub fn check_run(out: &RunOutcome) -> Vec<Violation> {
    let mut v = Vec::new();
    logs_are_gap_free(out, &mut v);
    logs_agree(out, &mut v);
    commits_match_some_log(out, &mut v);
    if !out.traces.is_empty() {
        at_most_one_leader_per_term(out, &mut v);
        one_candidate_per_voter_per_term(out, &mut v);
        commits_are_sequential_per_node(out, &mut v);
        if out.protocol == ProtocolKind::Por {
            verdict_precedes_commit(out, &mut v);
        }
    }
    v
}

/// Every committed log must be dense: entry k sits at index k+1 with no
/// holes and no reordering.
fn logs_are_gap_free(out: &RunOutcome, v: &mut Vec<Violation>) {
    for (node, log) in out.logs.iter().enumerate() {
        for (pos, entry) in log.iter().enumerate() {
            let want = LogIndex(pos as u64 + 1);
            if entry.proposal.index != want {
                v.push(Violation {
                    rule: "log_gap_free",
                    detail: format!(
                        "node {node}: position {pos} holds index {}, expected {want}",
                        entry.proposal.index
                    ),
                });
            }
        }
    }
}

/// Two nodes that both committed an index must hold the same proposal
/// there. Commit timestamps differ per node and are not compared.
fn logs_agree(out: &RunOutcome, v: &mut Vec<Violation>) {
    let longest = out.logs.iter().map(Vec::len).max().unwrap_or(0);
    for pos in 0..longest {
        let mut seen: Option<(usize, &crate::domain::Proposal)> = None;
        for (node, log) in out.logs.iter().enumerate() {
            let Some(entry) = log.get(pos) else { continue };
            match seen {
                None => seen = Some((node, &entry.proposal)),
                Some((first, p)) if *p != entry.proposal => {
                    v.push(Violation {
                        rule: "log_agreement",
                        detail: format!(
                            "index {}: node {first} and node {node} committed different proposals",
                            pos + 1
                        ),
                    });
                }
                Some(_) => {}
            }
        }
    }
}

/// Every cluster-level commit observation must correspond to an entry
/// that survived in at least one final log.
fn commits_match_some_log(out: &RunOutcome, v: &mut Vec<Violation>) {
    for c in &out.commits {
        let held = out
            .logs
            .iter()
            .any(|log| log.get(c.index.0 as usize - 1).is_some_and(|e| e.proposal.index == c.index));
        if !held {
            v.push(Violation {
                rule: "commit_durable",
                detail: format!("index {} was reported committed but no log holds it", c.index),
            });
        }
    }
}

/// No term may crown two different leaders.
fn at_most_one_leader_per_term(out: &RunOutcome, v: &mut Vec<Violation>) {
    let mut winners: BTreeMap<Term, BTreeSet<NodeId>> = BTreeMap::new();
    for r in &out.traces {
        if let TraceEvent::RoleChange { to: NodeState::Leader, .. } = r.event {
            winners.entry(r.term).or_default().insert(r.node);
        }
    }
    for (term, nodes) in winners {
        if nodes.len() > 1 {
            v.push(Violation {
                rule: "election_safety",
                detail: format!("term {term} elected {} leaders: {nodes:?}", nodes.len()),
            });
        }
    }
}

/// A voter endorses at most one candidate per term. Repeat grants to the
/// same candidate are harmless retransmissions; grants to two rivals in
/// one term would let both assemble a quorum.
fn one_candidate_per_voter_per_term(out: &RunOutcome, v: &mut Vec<Violation>) {
    let mut granted: BTreeMap<(NodeId, Term), NodeId> = BTreeMap::new();
    for r in &out.traces {
        let TraceEvent::VoteGranted { candidate } = r.event else { continue };
        match granted.get(&(r.node, r.term)) {
            None => {
                granted.insert((r.node, r.term), candidate);
            }
            Some(prior) if *prior != candidate => {
                v.push(Violation {
                    rule: "vote_uniqueness",
                    detail: format!(
                        "voter {} endorsed both {prior} and {candidate} in term {}",
                        r.node, r.term
                    ),
                });
            }
            Some(_) => {}
        }
    }
}

/// Each node commits indexes in order, exactly once. Traces arrive in
/// global time order, so the per-node subsequence must be 1, 2, 3, ...
fn commits_are_sequential_per_node(out: &RunOutcome, v: &mut Vec<Violation>) {
    let mut next: BTreeMap<NodeId, u64> = BTreeMap::new();
    for r in &out.traces {
        let TraceEvent::Commit { index, .. } = r.event else { continue };
        let want = next.entry(r.node).or_insert(1);
        if index.0 != *want {
            v.push(Violation {
                rule: "commit_order",
                detail: format!("node {} committed {index} while expecting i{want}", r.node),
            });
        }
        *want = index.0 + 1;
    }
}

/// Replication alone cannot commit an entry: a passing verdict for that
/// index must exist somewhere in the record no later than the first
/// commit of the index.
fn verdict_precedes_commit(out: &RunOutcome, v: &mut Vec<Violation>) {
    let mut passed: BTreeMap<LogIndex, SimTime> = BTreeMap::new();
    for r in &out.traces {
        if let TraceEvent::Verdict { index, success: true, .. } = r.event {
            passed.entry(index).or_insert(r.at);
        }
    }
    let mut first_commit: BTreeMap<LogIndex, SimTime> = BTreeMap::new();
    for r in &out.traces {
        if let TraceEvent::Commit { index, .. } = r.event {
            first_commit.entry(index).or_insert(r.at);
        }
    }
    for (index, at) in first_commit {
        match passed.get(&index) {
            Some(t) if *t <= at => {}
            Some(t) => v.push(Violation {
                rule: "verdict_first",
                detail: format!("index {index} committed at {at} before its verdict at {t}"),
            }),
            None => v.push(Violation {
                rule: "verdict_first",
                detail: format!("index {index} committed with no passing verdict on record"),
            }),
        }
    }
}

/// Checks that no node led the cluster while the record shows it below
/// the faithfulness threshold. `grace` covers propagation: a score drop
/// takes a broadcast plus possibly one in-flight election to bite, so
/// only leaderships assumed at least `grace` after the drop count.
#[must_use]
pub fn check_flag_exclusion(out: &RunOutcome, grace: u64) -> Vec<Violation> {
    let mut v = Vec::new();
    if out.traces.is_empty() {
        return v;
    }
    for r in &out.traces {
        let TraceEvent::RoleChange { to: NodeState::Leader, .. } = r.event else { continue };
        // Authoritative score of this node as of the grace horizon.
        let horizon = SimTime(r.at.0.saturating_sub(grace));
        let mut score = None;
        for (t, n, s) in &out.score_timeline {
            if *t > horizon {
                break;
            }
            if *n == r.node {
                score = Some(*s);
            }
        }
        if let Some(s) = score {
            if s < out.params.r_thld {
                v.push(Violation {
                    rule: "flagged_excluded",
                    detail: format!(
                        "node {} took leadership at {} with settled score {s:.3} below {}",
                        r.node, r.at, out.params.r_thld
                    ),
                });
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AttributeKey, ProtocolParams, SimTime};
    use crate::faults::{BehaviorKind, BehaviorSpec};
    use crate::sim::{run, NetworkSpec, RunSpec, StopRule, WorkloadSpec};

    fn traced_spec(protocol: ProtocolKind, seed: u64) -> RunSpec {
        RunSpec {
            protocol,
            nodes: 5,
            seed,
            params: ProtocolParams::default(),
            network: NetworkSpec::default(),
            workload: WorkloadSpec { proposals: 12, inter_arrival: 400 },
            behaviors: vec![BehaviorSpec::honest(); 5],
            profile: crate::cti::GenerationProfile::default(),
            stop: StopRule { max_time: 60_000, target_commits: None },
            collect_traces: true,
        }
    }

    #[test]
    fn honest_runs_are_clean_for_all_protocols() {
        for protocol in [ProtocolKind::Por, ProtocolKind::Cft, ProtocolKind::Bft] {
            let out = run(&traced_spec(protocol, 7)).unwrap();
            assert!(!out.commits.is_empty());
            let violations = check_run(&out);
            assert!(violations.is_empty(), "{protocol:?}: {violations:?}");
        }
    }

    #[test]
    fn byzantine_runs_keep_the_invariants() {
        let mut spec = traced_spec(ProtocolKind::Por, 11);
        spec.behaviors[3] = BehaviorSpec {
            kind: BehaviorKind::FalseReporter,
            activation_time: SimTime(0),
            false_report_probability: 1.0,
            attribute_corruption_count: AttributeKey::ALL.len(),
        };
        spec.behaviors[4] = BehaviorSpec {
            kind: BehaviorKind::CrashStop,
            activation_time: SimTime(2_500),
            false_report_probability: 0.0,
            attribute_corruption_count: 0,
        };
        let out = run(&spec).unwrap();
        let violations = check_run(&out);
        assert!(violations.is_empty(), "{violations:?}");
        let flags = check_flag_exclusion(&out, 1_000);
        assert!(flags.is_empty(), "{flags:?}");
    }

    #[test]
    fn checker_flags_a_forged_log() {
        let mut out = run(&traced_spec(ProtocolKind::Por, 7)).unwrap();
        // Forge node 2's view of index 1 after the fact.
        out.logs[2][0].proposal.origin = crate::domain::NodeId::new(3);
        let violations = check_run(&out);
        assert!(violations.iter().any(|v| v.rule == "log_agreement"), "{violations:?}");
    }

    #[test]
    fn checker_flags_a_log_gap() {
        let mut out = run(&traced_spec(ProtocolKind::Cft, 7)).unwrap();
        out.logs[1].remove(0);
        let violations = check_run(&out);
        assert!(violations.iter().any(|v| v.rule == "log_gap_free"), "{violations:?}");
    }

    #[test]
    fn checker_flags_a_fabricated_commit() {
        let mut out = run(&traced_spec(ProtocolKind::Por, 7)).unwrap();
        let last = out.commits.last().unwrap().index;
        out.commits.push(crate::sim::CommitView {
            index: LogIndex(last.0 + 40),
            truth_key: None,
            first_at: SimTime(1),
        });
        let violations = check_run(&out);
        assert!(violations.iter().any(|v| v.rule == "commit_durable"), "{violations:?}");
    }

    #[test]
    fn checker_flags_double_leadership() {
        let mut out = run(&traced_spec(ProtocolKind::Por, 7)).unwrap();
        // Clone a leadership record onto another node in the same term.
        let won = out
            .traces
            .iter()
            .find(|r| matches!(r.event, TraceEvent::RoleChange { to: NodeState::Leader, .. }))
            .unwrap()
            .clone();
        let mut forged = won;
        forged.node = NodeId::new((forged.node.index() as u32 + 1) % 5);
        out.traces.push(forged);
        let violations = check_run(&out);
        assert!(violations.iter().any(|v| v.rule == "election_safety"), "{violations:?}");
    }

    #[test]
    fn checker_flags_a_commit_without_verdict() {
        let mut out = run(&traced_spec(ProtocolKind::Por, 7)).unwrap();
        out.traces.retain(|r| !matches!(r.event, TraceEvent::Verdict { .. }));
        let violations = check_run(&out);
        assert!(violations.iter().any(|v| v.rule == "verdict_first"), "{violations:?}");
    }
}
