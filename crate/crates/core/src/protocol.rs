//! The reputation-gated consensus node: leader election with supervisor
//! certification of candidates, detection-report aggregation and Bayesian
//! classification of each proposal, and commit once a follower quorum
//! confirms a supervisor-approved entry.
//!
//! A node is a pure state machine: the simulator feeds it delivered
//! messages, timer firings and workload stimuli, and it returns the messages
//! to send, timers to arm and local effects (commits, trace events).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::domain::{
    AttackAttribute, DetectionReport, LedgerEntry, LogIndex, NodeId, NodeState, Proposal,
    ProtocolParams, SimTime, Term,
};
use crate::messages::{TimerKind, WireMsg};
use crate::reputation::{
    apply_reputation_updates, classify_proposal, node_likelihoods, node_verdict, posterior_valid,
    prior_valid, select_supervisor, Evidence, EvidenceItem, ProposalOutcome, ReputationTable,
    Verdict,
};
use crate::rng::DetRng;
use crate::trace::TraceEvent;

/// The leader hands the supervisor role to a fresh node after this many
/// rounds classified under the incumbent, so detection duty (and the
/// associated exemption from reporting) circulates through the cluster.
pub const SUPERVISOR_ROTATION_ROUNDS: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeInput {
    Deliver { from: NodeId, msg: WireMsg },
    Timer(TimerKind),
    /// Local sensor feed: this node independently observed the attack that
    /// `truth_key` identifies. Arrives at workload-injection time.
    Observe { truth_key: u64, entries: Vec<AttackAttribute> },
    /// Client hands a detected attack to the node for consensus.
    Submit { truth_key: u64, entries: Vec<AttackAttribute> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeOutput {
    Send { to: NodeId, msg: WireMsg },
    SetTimer { after: u64, kind: TimerKind },
    /// An entry became durable at this node.
    Committed { entry: LedgerEntry, truth_key: Option<u64> },
    Event(TraceEvent),
}

/// Uniform surface the simulator drives. Implemented by the reputation
/// protocol here and by both baselines.
pub trait ProtocolNode {
    fn id(&self) -> NodeId;
    fn cluster_size(&self) -> u32;
    fn state(&self) -> NodeState;
    fn current_term(&self) -> Term;
    fn committed(&self) -> &[LedgerEntry];
    /// Freshest reputation view this node holds, if the protocol has one.
    fn reputation_view(&self) -> Option<&ReputationTable>;
    fn on_start(&mut self, now: SimTime) -> Vec<NodeOutput>;
    fn handle(&mut self, input: NodeInput, now: SimTime) -> Vec<NodeOutput>;
}

#[derive(Debug, Clone, PartialEq)]
struct VerdictRecord {
    term: Term,
    success: bool,
    entries: Vec<AttackAttribute>,
}

#[derive(Debug)]
struct PendingCert {
    term: Term,
    candidate: NodeId,
}

#[derive(Debug)]
struct CollectState {
    nonce: u64,
    term: Term,
    index: LogIndex,
    proposal: Proposal,
    leader: NodeId,
    expected: BTreeSet<NodeId>,
    reports: BTreeMap<NodeId, Verdict>,
}

#[derive(Debug)]
struct RoundState {
    nonce: u64,
    proposal: Proposal,
    truth_key: u64,
    verdict: Option<bool>,
    appended: bool,
    acks: BTreeSet<NodeId>,
}

#[derive(Debug)]
struct LeaderState {
    supervisor: Option<NodeId>,
    failed_supervisors: BTreeSet<NodeId>,
    rounds_with_supervisor: u64,
    round: Option<RoundState>,
    round_nonce: u64,
    queue: VecDeque<(u64, Vec<AttackAttribute>)>,
    /// Consecutive heartbeat waves each peer has left unanswered. A peer
    /// silent long enough drops out of the replication quorum denominator
    /// until it speaks again.
    silent_waves: BTreeMap<NodeId, u32>,
}

/// Waves of total silence before the leader stops counting a follower
/// toward the replication denominator. Four waves is well past one
/// round trip even with retries, yet short enough that a dead minority
/// cannot stall commits for long.
const SUSPECT_WAVES: u32 = 4;

pub struct PorNode {
    id: NodeId,
    n: u32,
    params: ProtocolParams,
    rng: DetRng,
    state: NodeState,
    term: Term,
    voted_for: Option<(Term, NodeId)>,
    votes: BTreeSet<NodeId>,
    election_nonce: u64,
    election_attempts: u32,
    heartbeat_nonce: u64,
    leader: Option<(Term, NodeId)>,
    revoked_leaders: BTreeSet<(Term, NodeId)>,
    known_supervisor: Option<NodeId>,
    ///entries committed here, gap-free from index 1.
    committed: Vec<LedgerEntry>,
    /// Follower-side verdict-approved entry awaiting the leader's commit.
    provisional: Option<Proposal>,
    observations: BTreeMap<u64, Vec<AttackAttribute>>,
    round_truth: BTreeMap<LogIndex, u64>,
    verdicts: BTreeMap<LogIndex, VerdictRecord>,
    deferred_appends: BTreeMap<LogIndex, (NodeId, WireMsg)>,
    pending_cert: Option<PendingCert>,
    cert_cache: BTreeMap<(Term, NodeId), bool>,
    /// Freshest reputation table seen in any verdict broadcast or
    /// appointment; bootstrap table before the first classified round.
    latest_snapshot: ReputationTable,
    /// Authoritative table while acting as supervisor.
    supervisor_table: Option<ReputationTable>,
    collecting: Option<CollectState>,
    collect_nonce: u64,
    /// Reports that arrived before the proposal broadcast that opens their
    /// collection. Both legs cross the network independently, so a fast
    /// reporter can beat the supervisor's own copy of the proposal.
    early_reports: VecDeque<DetectionReport>,
    lead: Option<LeaderState>,
}

impl PorNode {
    pub fn new(id: NodeId, cluster_size: u32, params: ProtocolParams, rng: DetRng) -> Self {
        let latest_snapshot = ReputationTable::bootstrap(cluster_size, params.r_init);
        PorNode {
            id,
            n: cluster_size,
            params,
            rng,
            state: NodeState::Follower,
            term: Term(0),
            voted_for: None,
            votes: BTreeSet::new(),
            election_nonce: 0,
            election_attempts: 0,
            heartbeat_nonce: 0,
            leader: None,
            revoked_leaders: BTreeSet::new(),
            known_supervisor: None,
            committed: Vec::new(),
            provisional: None,
            observations: BTreeMap::new(),
            round_truth: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            deferred_appends: BTreeMap::new(),
            pending_cert: None,
            cert_cache: BTreeMap::new(),
            latest_snapshot,
            supervisor_table: None,
            collecting: None,
            collect_nonce: 0,
            early_reports: VecDeque::new(),
            lead: None,
        }
    }

    fn peers(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n).map(NodeId::new).filter(move |p| *p != self.id)
    }

    fn broadcast(&self, out: &mut Vec<NodeOutput>, msg: &WireMsg) {
        for to in self.peers() {
            out.push(NodeOutput::Send { to, msg: msg.clone() });
        }
    }

    fn last_committed_index(&self) -> LogIndex {
        self.committed
            .last()
            .map(|e| e.proposal.index)
            .unwrap_or(LogIndex(0))
    }

    /// Followers the leader still counts as reachable.
    fn present_followers(&self) -> u32 {
        let suspected = self
            .lead
            .as_ref()
            .map(|l| l.silent_waves.values().filter(|w| **w >= SUSPECT_WAVES).count() as u32)
            .unwrap_or(0);
        (self.n - 1).saturating_sub(suspected)
    }

    /// Log position for vote comparisons: the provisional entry counts,
    /// because a committed-elsewhere entry may still be provisional here.
    fn last_log_pos(&self) -> (Term, LogIndex) {
        if let Some(p) = &self.provisional {
            return (p.term, p.index);
        }
        self.committed
            .last()
            .map(|e| (e.proposal.term, e.proposal.index))
            .unwrap_or((Term(0), LogIndex(0)))
    }

    fn draw_election_timeout(&mut self) -> u64 {
        let (lo, hi) = self.params.election_timeout;
        self.rng.range_inclusive(lo, hi)
    }

    fn arm_election_timer(&mut self, out: &mut Vec<NodeOutput>) {
        self.election_nonce += 1;
        // Contested elections back off: each failed candidacy widens the
        // next wait so one candidate's term can survive the certification
        // round trip instead of being trampled by a rival timeout.
        let factor = 1 + u64::from(self.election_attempts.min(4));
        let after = self.draw_election_timeout() * factor;
        out.push(NodeOutput::SetTimer {
            after,
            kind: TimerKind::Election { nonce: self.election_nonce },
        });
    }

    fn set_role(&mut self, to: NodeState, out: &mut Vec<NodeOutput>) {
        if self.state != to {
            out.push(NodeOutput::Event(TraceEvent::RoleChange { from: self.state, to }));
            self.state = to;
        }
    }

    /// Adopts a newer term. Leaders and candidates fall back to follower;
    /// a supervisor keeps its duty through term changes until replaced.
    fn adopt_term(&mut self, term: Term, out: &mut Vec<NodeOutput>) {
        debug_assert!(term > self.term);
        self.term = term;
        self.votes.clear();
        self.pending_cert = None;
        match self.state {
            NodeState::Leader => {
                self.drop_leader_state(out);
                self.set_role(NodeState::Follower, out);
                self.arm_election_timer(out);
            }
            NodeState::Candidate => {
                self.set_role(NodeState::Follower, out);
            }
            NodeState::Follower | NodeState::Supervisor => {}
        }
    }

    fn drop_leader_state(&mut self, out: &mut Vec<NodeOutput>) {
        if let Some(lead) = self.lead.take() {
            for (_, entries) in lead.queue {
                let _ = entries;
                out.push(NodeOutput::Event(TraceEvent::Reject {
                    index: self.last_committed_index().next(),
                    reason: "queued_submission_dropped",
                }));
            }
        }
        self.heartbeat_nonce += 1;
    }

    /// Candidate or supervisor yields to a live leader in the current term.
    fn yield_to_leader(&mut self, out: &mut Vec<NodeOutput>) {
        if self.state == NodeState::Candidate {
            self.votes.clear();
            self.set_role(NodeState::Follower, out);
        }
    }

    fn note_snapshot(&mut self, snapshot: &ReputationTable) {
        if snapshot.classified_rounds > self.latest_snapshot.classified_rounds {
            self.latest_snapshot = snapshot.clone();
        }
    }

    /// The freshest table available to this node right now.
    fn best_table(&self) -> &ReputationTable {
        match &self.supervisor_table {
            Some(t) if t.classified_rounds >= self.latest_snapshot.classified_rounds => t,
            _ => &self.latest_snapshot,
        }
    }

    fn locally_faithful(&self, node: NodeId) -> bool {
        self.best_table()
            .score(node)
            .map(|s| self.params.is_faithful(s))
            .unwrap_or(false)
    }

    /// Processes a supervisor announcement from the current leader,
    /// promoting or demoting this node as needed.
    fn learn_supervisor(
        &mut self,
        supervisor: NodeId,
        snapshot: Option<&ReputationTable>,
        out: &mut Vec<NodeOutput>,
    ) {
        if let Some(snap) = snapshot {
            self.note_snapshot(snap);
        }
        let changed = self.known_supervisor != Some(supervisor);
        self.known_supervisor = Some(supervisor);
        if changed {
            out.push(NodeOutput::Event(TraceEvent::SupervisorChange { supervisor }));
        }
        if supervisor == self.id {
            if self.state == NodeState::Follower {
                self.set_role(NodeState::Supervisor, out);
            }
            if self.state == NodeState::Supervisor && self.supervisor_table.is_none() {
                self.supervisor_table = Some(self.latest_snapshot.clone());
            }
        } else if self.state == NodeState::Supervisor {
            // Replaced: fold the authoritative table into the local view and
            // stand down to plain follower.
            if let Some(table) = self.supervisor_table.take() {
                self.note_snapshot(&table);
            }
            self.collecting = None;
            self.early_reports.clear();
            self.set_role(NodeState::Follower, out);
        }
    }

    // ------------------------------------------------------------------
    // Elections

    fn on_election_timeout(&mut self, nonce: u64, out: &mut Vec<NodeOutput>) {
        if nonce != self.election_nonce || self.state == NodeState::Leader {
            return;
        }
        // A node that knows itself unfaithful never stands for election.
        if !self.locally_faithful(self.id) {
            out.push(NodeOutput::Event(TraceEvent::Reject {
                index: LogIndex(0),
                reason: "candidacy_suppressed_unfaithful",
            }));
            self.arm_election_timer(out);
            return;
        }
        // The supervisor sits elections out: voters direct certification
        // queries here, and a campaigning certifier would answer none of
        // them, denying every candidate and wedging the election.
        if self.state == NodeState::Supervisor {
            self.arm_election_timer(out);
            return;
        }
        self.term = Term(self.term.0 + 1);
        self.election_attempts = self.election_attempts.saturating_add(1);
        self.set_role(NodeState::Candidate, out);
        self.voted_for = Some((self.term, self.id));
        self.votes.clear();
        self.votes.insert(self.id);
        self.pending_cert = None;
        let (last_log_term, last_log_index) = self.last_log_pos();
        let msg = WireMsg::RequestVote {
            term: self.term,
            candidate: self.id,
            last_log_term,
            last_log_index,
        };
        self.broadcast(out, &msg);
        self.arm_election_timer(out);
        self.maybe_win(out);
    }

    fn handle_request_vote(
        &mut self,
        term: Term,
        candidate: NodeId,
        last_log_term: Term,
        last_log_index: LogIndex,
        out: &mut Vec<NodeOutput>,
    ) {
        if term < self.term {
            out.push(NodeOutput::Send {
                to: candidate,
                msg: WireMsg::RequestVoteReply { term: self.term, voter: self.id, granted: false },
            });
            return;
        }
        let vote_free = match self.voted_for {
            Some((t, c)) => t != self.term || c == candidate,
            None => true,
        };
        let my_pos = self.last_log_pos();
        let up_to_date = (last_log_term, last_log_index) >= my_pos;
        if !vote_free || !up_to_date {
            out.push(NodeOutput::Send {
                to: candidate,
                msg: WireMsg::RequestVoteReply { term: self.term, voter: self.id, granted: false },
            });
            return;
        }
        match self.known_supervisor {
            None => {
                // Bootstrap: no supervisor exists yet, certification is
                // skipped, every node presumed faithful at the initial score.
                self.grant_vote(candidate, out);
            }
            Some(sup) if sup == self.id && self.state == NodeState::Supervisor => {
                let trusted = self
                    .supervisor_table
                    .as_ref()
                    .and_then(|t| t.score(candidate))
                    .map(|s| self.params.is_faithful(s))
                    .unwrap_or(false);
                self.cert_cache.insert((self.term, candidate), trusted);
                if trusted {
                    self.grant_vote(candidate, out);
                } else {
                    self.deny_vote(candidate, out);
                }
            }
            Some(sup) => {
                if let Some(&trusted) = self.cert_cache.get(&(self.term, candidate)) {
                    if trusted {
                        self.grant_vote(candidate, out);
                    } else {
                        self.deny_vote(candidate, out);
                    }
                    return;
                }
                // Reserve the vote and defer the reply until the supervisor
                // certifies the candidate (or the request expires).
                self.voted_for = Some((self.term, candidate));
                self.pending_cert = Some(PendingCert { term: self.term, candidate });
                out.push(NodeOutput::Send {
                    to: sup,
                    msg: WireMsg::ReputationValue { term: self.term, candidate },
                });
                let after = self.draw_election_timeout();
                out.push(NodeOutput::SetTimer {
                    after,
                    kind: TimerKind::VoteCertExpiry { term: self.term, candidate },
                });
                // While certification is pending this node is a voter, not
                // a rival; standing now would only split the election.
                self.arm_election_timer(out);
            }
        }
    }

    fn grant_vote(&mut self, candidate: NodeId, out: &mut Vec<NodeOutput>) {
        // Certification can fail open when the supervisor is unreachable,
        // but a voter never endorses a candidate it knows is unfaithful.
        if !self.locally_faithful(candidate) {
            self.release_reservation(candidate);
            self.deny_vote(candidate, out);
            return;
        }
        self.voted_for = Some((self.term, candidate));
        out.push(NodeOutput::Event(TraceEvent::VoteGranted { candidate }));
        out.push(NodeOutput::Send {
            to: candidate,
            msg: WireMsg::RequestVoteReply { term: self.term, voter: self.id, granted: true },
        });
        self.arm_election_timer(out);
    }

    fn deny_vote(&mut self, candidate: NodeId, out: &mut Vec<NodeOutput>) {
        out.push(NodeOutput::Send {
            to: candidate,
            msg: WireMsg::RequestVoteReply { term: self.term, voter: self.id, granted: false },
        });
    }

    /// A reservation made while certifying `candidate` is void once the
    /// vote is denied; the ballot goes back in the box for this term.
    fn release_reservation(&mut self, candidate: NodeId) {
        if self.voted_for == Some((self.term, candidate)) {
            self.voted_for = None;
        }
    }

    fn handle_reputation_value_reply(
        &mut self,
        candidate: NodeId,
        trusted: bool,
        out: &mut Vec<NodeOutput>,
    ) {
        let Some(pending) = &self.pending_cert else { return };
        if pending.term != self.term || pending.candidate != candidate {
            return;
        }
        self.pending_cert = None;
        self.cert_cache.insert((self.term, candidate), trusted);
        if trusted {
            self.grant_vote(candidate, out);
        } else {
            self.release_reservation(candidate);
            self.deny_vote(candidate, out);
        }
    }

    fn on_vote_cert_expiry(&mut self, term: Term, candidate: NodeId, out: &mut Vec<NodeOutput>) {
        let Some(pending) = &self.pending_cert else { return };
        if term != self.term || pending.term != term || pending.candidate != candidate {
            return;
        }
        // Supervisor unreachable: fail open so elections stay live, guarded
        // by the voter's own faithfulness knowledge inside grant_vote.
        self.pending_cert = None;
        self.grant_vote(candidate, out);
    }

    fn handle_request_vote_reply(&mut self, voter: NodeId, granted: bool, term: Term, out: &mut Vec<NodeOutput>) {
        if self.state != NodeState::Candidate || term != self.term || !granted {
            return;
        }
        self.votes.insert(voter);
        self.maybe_win(out);
    }

    fn maybe_win(&mut self, out: &mut Vec<NodeOutput>) {
        if self.state != NodeState::Candidate || (self.votes.len() as u64) * 2 <= self.n as u64 {
            return;
        }
        self.set_role(NodeState::Leader, out);
        self.leader = Some((self.term, self.id));
        self.votes.clear();
        self.election_attempts = 0;
        let mut lead = LeaderState {
            supervisor: None,
            failed_supervisors: BTreeSet::new(),
            rounds_with_supervisor: 0,
            round: None,
            round_nonce: 0,
            queue: VecDeque::new(),
            silent_waves: BTreeMap::new(),
        };
        // A sitting supervisor that is still in good standing keeps its
        // post across the leadership change; drawing a replacement here
        // discards its working table and may well name an unreachable
        // node mid-crisis. Rotation and verdict deadlines replace it.
        let retained = self
            .known_supervisor
            .filter(|s| *s != self.id && self.locally_faithful(*s));
        if let Some(sup) = retained {
            lead.supervisor = Some(sup);
        } else {
            let eligible: BTreeSet<NodeId> = self
                .latest_snapshot
                .faithful_nodes(&self.params)
                .into_iter()
                .filter(|nd| *nd != self.id)
                .collect();
            if let Ok(sup) = select_supervisor(&self.latest_snapshot, &eligible, &mut self.rng) {
                lead.supervisor = Some(sup);
                out.push(NodeOutput::Event(TraceEvent::SupervisorChange { supervisor: sup }));
            }
        }
        self.known_supervisor = lead.supervisor;
        // A verdict-approved entry still provisional from this node's
        // follower days may already be committed elsewhere. Re-carry it as
        // the opening round; proposing fresh content at that index could
        // contradict a commit this node never saw.
        if let Some(p) = self.provisional.clone() {
            let truth_key = self.round_truth.get(&p.index).copied().unwrap_or(0);
            lead.round_nonce += 1;
            lead.round = Some(RoundState {
                nonce: lead.round_nonce,
                proposal: p,
                truth_key,
                verdict: Some(true),
                appended: true,
                acks: BTreeSet::new(),
            });
        }
        self.lead = Some(lead);
        self.heartbeat_nonce += 1;
        self.send_heartbeat(true, out);
        out.push(NodeOutput::SetTimer {
            after: self.params.heartbeat_interval,
            kind: TimerKind::Heartbeat { nonce: self.heartbeat_nonce },
        });
    }

    // ------------------------------------------------------------------
    // Leader-side round management

    /// `appointment` attaches the reputation snapshot so a newly named
    /// supervisor starts from the leader's freshest view.
    fn send_heartbeat(&mut self, appointment: bool, out: &mut Vec<NodeOutput>) {
        let Some(lead) = &self.lead else { return };
        // Re-carry an approved but uncommitted proposal so droppy links
        // cannot stall a round forever.
        let (proposal, prev_index) = match &lead.round {
            Some(r) if r.appended => (Some(r.proposal.clone()), r.proposal.prev_index),
            _ => (None, self.last_committed_index()),
        };
        let msg = WireMsg::AppendEntries {
            term: self.term,
            leader: self.id,
            prev_index,
            proposal,
            leader_commit: self.last_committed_index(),
            supervisor: lead.supervisor,
            snapshot: if appointment { Some(self.best_table().clone()) } else { None },
        };
        self.broadcast(out, &msg);
    }

    fn on_heartbeat_timer(&mut self, nonce: u64, out: &mut Vec<NodeOutput>) {
        if self.state != NodeState::Leader || nonce != self.heartbeat_nonce {
            return;
        }
        let (n, id) = (self.n, self.id);
        if let Some(lead) = &mut self.lead {
            for i in 0..n {
                let p = NodeId::new(i);
                if p != id {
                    *lead.silent_waves.entry(p).or_insert(0) += 1;
                }
            }
        }
        self.send_heartbeat(false, out);
        out.push(NodeOutput::SetTimer {
            after: self.params.heartbeat_interval,
            kind: TimerKind::Heartbeat { nonce: self.heartbeat_nonce },
        });
    }

    fn handle_submit(
        &mut self,
        truth_key: u64,
        entries: Vec<AttackAttribute>,
        now: SimTime,
        out: &mut Vec<NodeOutput>,
    ) {
        self.observations.entry(truth_key).or_insert_with(|| entries.clone());
        if self.state != NodeState::Leader {
            out.push(NodeOutput::Event(TraceEvent::Reject {
                index: LogIndex(0),
                reason: "submit_to_non_leader",
            }));
            return;
        }
        if let Some(lead) = &mut self.lead {
            lead.queue.push_back((truth_key, entries));
        }
        self.try_start_round(now, out);
    }

    fn rotate_supervisor_if_due(&mut self, out: &mut Vec<NodeOutput>) {
        let Some(lead) = &self.lead else { return };
        if lead.rounds_with_supervisor < SUPERVISOR_ROTATION_ROUNDS {
            return;
        }
        let incumbent = lead.supervisor;
        let eligible: BTreeSet<NodeId> = self
            .best_table()
            .faithful_nodes(&self.params)
            .into_iter()
            .filter(|nd| *nd != self.id && Some(*nd) != incumbent)
            .collect();
        let table = self.best_table().clone();
        let choice = select_supervisor(&table, &eligible, &mut self.rng).ok();
        let Some(new_sup) = choice else { return };
        let lead = self.lead.as_mut().expect("leader state");
        lead.supervisor = Some(new_sup);
        lead.rounds_with_supervisor = 0;
        lead.failed_supervisors.clear();
        self.known_supervisor = Some(new_sup);
        out.push(NodeOutput::Event(TraceEvent::SupervisorChange { supervisor: new_sup }));
        // Appointment heartbeat carries the snapshot to the new supervisor.
        self.send_heartbeat(true, out);
    }

    fn try_start_round(&mut self, _now: SimTime, out: &mut Vec<NodeOutput>) {
        let Some(lead) = &self.lead else { return };
        if lead.round.is_some() || lead.queue.is_empty() {
            return;
        }
        self.rotate_supervisor_if_due(out);
        let lead = self.lead.as_mut().expect("leader state");
        let Some(supervisor) = lead.supervisor else {
            out.push(NodeOutput::Event(TraceEvent::Reject {
                index: LogIndex(0),
                reason: "no_supervisor_available",
            }));
            return;
        };
        let (truth_key, entries) = lead.queue.pop_front().expect("non-empty queue");
        let prev_index = self.committed.last().map(|e| e.proposal.index).unwrap_or(LogIndex(0));
        let proposal = match Proposal::new(self.term, prev_index, entries, self.id) {
            Ok(p) => p,
            Err(_) => {
                out.push(NodeOutput::Event(TraceEvent::Reject {
                    index: prev_index.next(),
                    reason: "empty_submission",
                }));
                return;
            }
        };
        lead.round_nonce += 1;
        lead.round = Some(RoundState {
            nonce: lead.round_nonce,
            proposal: proposal.clone(),
            truth_key,
            verdict: None,
            appended: false,
            acks: BTreeSet::new(),
        });
        self.round_truth.insert(proposal.index, truth_key);
        out.push(NodeOutput::Event(TraceEvent::Propose {
            index: proposal.index,
            truth_key,
        }));
        let msg = WireMsg::ProposalBroadcast {
            proposal,
            truth_key,
            supervisor,
            leader: self.id,
        };
        self.broadcast(out, &msg);
        let nonce = self.lead.as_ref().expect("leader state").round_nonce;
        // Patience must outlast the supervisor's full collection window plus
        // the broadcast and reply legs, or a slow-but-alive supervisor gets
        // replaced while its verdict is in flight.
        out.push(NodeOutput::SetTimer {
            after: self.params.election_timeout.0 + self.params.heartbeat_interval,
            kind: TimerKind::VerdictDeadline { nonce },
        });
    }

    fn on_verdict_deadline(&mut self, nonce: u64, out: &mut Vec<NodeOutput>) {
        if self.state != NodeState::Leader {
            return;
        }
        let Some(lead) = &mut self.lead else { return };
        let Some(round) = &lead.round else { return };
        if round.nonce != nonce || round.verdict.is_some() {
            return;
        }
        // The supervisor went quiet on this round: pick a replacement,
        // excluding everyone who already failed us this round.
        if let Some(old) = lead.supervisor {
            lead.failed_supervisors.insert(old);
        }
        let failed = lead.failed_supervisors.clone();
        let mut eligible: BTreeSet<NodeId> = self
            .best_table()
            .faithful_nodes(&self.params)
            .into_iter()
            .filter(|nd| *nd != self.id && !failed.contains(nd))
            .collect();
        if eligible.is_empty() {
            let lead = self.lead.as_mut().expect("leader state");
            lead.failed_supervisors.clear();
            eligible = self
                .best_table()
                .faithful_nodes(&self.params)
                .into_iter()
                .filter(|nd| *nd != self.id)
                .collect();
        }
        let table = self.best_table().clone();
        let choice = select_supervisor(&table, &eligible, &mut self.rng).ok();
        let lead = self.lead.as_mut().expect("leader state");
        let Some(new_sup) = choice else {
            // Nobody to supervise: abandon the round.
            let round = lead.round.take().expect("round");
            out.push(NodeOutput::Event(TraceEvent::Reject {
                index: round.proposal.index,
                reason: "no_supervisor_available",
            }));
            return;
        };
        lead.supervisor = Some(new_sup);
        lead.rounds_with_supervisor = 0;
        self.known_supervisor = Some(new_sup);
        out.push(NodeOutput::Event(TraceEvent::SupervisorChange { supervisor: new_sup }));
        self.send_heartbeat(true, out);
        // Re-open the same round under the new supervisor.
        let lead = self.lead.as_ref().expect("leader state");
        let round = lead.round.as_ref().expect("round");
        let msg = WireMsg::ProposalBroadcast {
            proposal: round.proposal.clone(),
            truth_key: round.truth_key,
            supervisor: new_sup,
            leader: self.id,
        };
        self.broadcast(out, &msg);
        out.push(NodeOutput::SetTimer {
            after: self.params.election_timeout.0 + self.params.heartbeat_interval,
            kind: TimerKind::VerdictDeadline { nonce },
        });
    }

    fn finish_round(&mut self, now: SimTime, out: &mut Vec<NodeOutput>) {
        if let Some(lead) = &mut self.lead {
            lead.round = None;
            lead.rounds_with_supervisor += 1;
        }
        self.try_start_round(now, out);
    }

    fn handle_append_reply(
        &mut self,
        from: NodeId,
        success: bool,
        last_index: LogIndex,
        now: SimTime,
        out: &mut Vec<NodeOutput>,
    ) {
        if self.state != NodeState::Leader {
            return;
        }
        if last_index < self.last_committed_index() {
            // Follower is behind on committed entries: feed it the next one.
            // Its log cannot contain the in-flight round entry, so the ack
            // bookkeeping below does not apply.
            let next = &self.committed[last_index.0 as usize];
            out.push(NodeOutput::Send {
                to: from,
                msg: WireMsg::AppendEntries {
                    term: self.term,
                    leader: self.id,
                    prev_index: last_index,
                    proposal: Some(next.proposal.clone()),
                    leader_commit: self.last_committed_index(),
                    supervisor: self.lead.as_ref().and_then(|l| l.supervisor),
                    snapshot: None,
                },
            });
            return;
        }
        if !success {
            return;
        }
        let present = self.present_followers();
        let n = u64::from(self.n);
        let commit_ready = {
            let Some(lead) = &mut self.lead else { return };
            let Some(round) = &mut lead.round else { return };
            if !round.appended || round.verdict != Some(true) || last_index < round.proposal.index
            {
                return;
            }
            round.acks.insert(from);
            // Over half the followers still in the network must confirm,
            // and the group formed by those acks plus the leader must be
            // a majority of the full cluster. The second clause is the
            // safety floor: a leader cut off with a minority can shrink
            // its denominator but can never assemble a commit.
            let acks = round.acks.len() as u64;
            acks as f64 > 0.51 * f64::from(present) && (acks + 1) * 2 > n
        };
        if commit_ready {
            let round = self
                .lead
                .as_mut()
                .and_then(|l| l.round.take())
                .expect("round present");
            let entry = LedgerEntry {
                proposal: round.proposal.clone(),
                committed_at: now,
            };
            self.committed.push(entry.clone());
            if self.provisional.as_ref().map(|p| p.index) == Some(entry.proposal.index) {
                self.provisional = None;
            }
            out.push(NodeOutput::Event(TraceEvent::Commit {
                index: entry.proposal.index,
                origin: entry.proposal.origin,
            }));
            out.push(NodeOutput::Committed { entry, truth_key: Some(round.truth_key) });
            if let Some(lead) = &mut self.lead {
                lead.rounds_with_supervisor += 1;
            }
            // Propagate the new commit index right away so followers do
            // not wait a full heartbeat to make the entry durable.
            self.send_heartbeat(false, out);
            self.try_start_round(now, out);
        }
    }

    // ------------------------------------------------------------------
    // Follower-side round participation

    fn handle_proposal_broadcast(
        &mut self,
        proposal: Proposal,
        truth_key: u64,
        supervisor: NodeId,
        leader: NodeId,
        now: SimTime,
        out: &mut Vec<NodeOutput>,
    ) {
        if proposal.term < self.term {
            return;
        }
        if self.revoked_leaders.contains(&(proposal.term, leader)) {
            return;
        }
        self.yield_to_leader(out);
        self.leader = Some((proposal.term, leader));
        self.election_attempts = 0;
        self.arm_election_timer(out);
        self.learn_supervisor(supervisor, None, out);
        self.round_truth.insert(proposal.index, truth_key);
        if supervisor == self.id {
            self.begin_collection(proposal, leader, now, out);
        } else {
            // Report my own independent detection of this attack. An attack
            // never observed here yields an empty report, which classifies
            // as structural disagreement rather than blind agreement.
            let entries = self.observations.get(&truth_key).cloned().unwrap_or_default();
            let report = DetectionReport {
                reporter: self.id,
                term: proposal.term,
                prev_index: proposal.prev_index,
                entries,
            };
            out.push(NodeOutput::Send {
                to: supervisor,
                msg: WireMsg::ReputationCompute { report },
            });
        }
    }

    fn begin_collection(
        &mut self,
        proposal: Proposal,
        leader: NodeId,
        now: SimTime,
        out: &mut Vec<NodeOutput>,
    ) {
        if self.state != NodeState::Supervisor {
            return;
        }
        let (term, index) = (proposal.term, proposal.index);
        let expected: BTreeSet<NodeId> = (0..self.n)
            .map(NodeId::new)
            .filter(|nd| *nd != self.id && *nd != leader)
            .collect();
        self.collect_nonce += 1;
        self.collecting = Some(CollectState {
            nonce: self.collect_nonce,
            term,
            index,
            proposal,
            leader,
            expected,
            reports: BTreeMap::new(),
        });
        // A report travels two legs (broadcast to the reporter, report back
        // here) while this deadline starts after one, so one extra interval
        // of slack keeps ordinarily-slow deliveries out of the verdict math.
        // Dead reporters still bound the wait at two beats.
        out.push(NodeOutput::SetTimer {
            after: 2 * self.params.heartbeat_interval,
            kind: TimerKind::CollectDeadline { nonce: self.collect_nonce },
        });
        // Claim any reports that outran the proposal broadcast.
        let mut full = false;
        let held = std::mem::take(&mut self.early_reports);
        for report in held {
            if report.term == term && report.prev_index.next() == index {
                full = self.file_report(report) || full;
            } else {
                self.early_reports.push_back(report);
            }
        }
        if full {
            self.classify_round(now, out);
        }
    }

    fn handle_report(&mut self, report: DetectionReport, now: SimTime, out: &mut Vec<NodeOutput>) {
        if self.state != NodeState::Supervisor {
            return;
        }
        let matches_open = self
            .collecting
            .as_ref()
            .is_some_and(|c| report.term == c.term && report.prev_index.next() == c.index);
        if !matches_open {
            self.hold_or_reject_report(report, out);
            return;
        }
        if self.file_report(report) {
            self.classify_round(now, out);
        }
    }

    /// Files one report into the open collection; true when the collection
    /// just became complete.
    fn file_report(&mut self, report: DetectionReport) -> bool {
        let Some(collect) = &mut self.collecting else { return false };
        if !collect.expected.contains(&report.reporter)
            || collect.reports.contains_key(&report.reporter)
        {
            return false;
        }
        // Structurally malformed reports count as disagreement: the node
        // failed to echo even the attribute key set.
        let verdict = node_verdict(&report, &collect.proposal).unwrap_or(Verdict::Disagree);
        collect.reports.insert(report.reporter, verdict);
        collect.reports.len() == collect.expected.len()
    }

    /// A report with no matching open collection is either early (its
    /// proposal broadcast is still in flight, or the slot is being retried)
    /// or stale. Early ones wait in a bounded buffer until the collection
    /// opens; discarding them would judge the round on partial evidence and
    /// penalize reporters for the network's delivery order.
    fn hold_or_reject_report(&mut self, report: DetectionReport, out: &mut Vec<NodeOutput>) {
        let slot = report.prev_index.next();
        let settled = self
            .verdicts
            .get(&slot)
            .is_some_and(|v| v.term >= report.term && v.success);
        if report.term < self.term || settled {
            out.push(NodeOutput::Event(TraceEvent::Reject {
                index: slot,
                reason: "stale_report",
            }));
            return;
        }
        self.early_reports.push_back(report);
        let cap = 2 * self.n as usize;
        while self.early_reports.len() > cap {
            self.early_reports.pop_front();
        }
    }

    fn on_collect_deadline(&mut self, nonce: u64, now: SimTime, out: &mut Vec<NodeOutput>) {
        if self.state != NodeState::Supervisor {
            return;
        }
        if self.collecting.as_ref().map(|c| c.nonce) != Some(nonce) {
            return;
        }
        self.classify_round(now, out);
    }

    fn classify_round(&mut self, now: SimTime, out: &mut Vec<NodeOutput>) {
        let Some(collect) = self.collecting.take() else { return };
        let Some(table) = &mut self.supervisor_table else { return };
        let prior = match prior_valid(collect.reports.len(), self.n as usize) {
            Ok(p) => p,
            Err(_) => return,
        };
        let items: Vec<EvidenceItem> = collect
            .reports
            .iter()
            .filter_map(|(reporter, verdict)| {
                table.stats(*reporter).map(|stats| {
                    let (pv, pi) = node_likelihoods(stats);
                    EvidenceItem {
                        reporter: *reporter,
                        verdict: *verdict,
                        p_agree_valid: pv,
                        p_agree_invalid: pi,
                    }
                })
            })
            .collect();
        let evidence = Evidence { prior, items };
        let posterior = posterior_valid(&evidence).unwrap_or(0.0);
        let outcome = classify_proposal(posterior, &self.params);
        let success = outcome == ProposalOutcome::CorrectDetection;
        out.push(NodeOutput::Event(TraceEvent::Verdict {
            index: collect.index,
            success,
            posterior,
        }));
        let r_thld = self.params.r_thld;
        let changes = match apply_reputation_updates(
            table,
            self.params.reputation_weight,
            outcome,
            &collect.reports,
            &collect.expected,
            collect.leader,
        ) {
            Ok(c) => c,
            Err(_) => return,
        };
        for change in &changes {
            out.push(NodeOutput::Event(TraceEvent::Score {
                node: change.node,
                score: change.new_score,
            }));
            if change.old_score >= r_thld && change.new_score < r_thld {
                out.push(NodeOutput::Event(TraceEvent::Flagged { node: change.node }));
            }
        }
        let leader_revoked = !table
            .score(collect.leader)
            .map(|s| self.params.is_faithful(s))
            .unwrap_or(false);
        if leader_revoked {
            self.revoked_leaders.insert((collect.term, collect.leader));
            out.push(NodeOutput::Event(TraceEvent::LeaderRevoked { leader: collect.leader }));
        }
        let snapshot = table.clone();
        self.latest_snapshot = snapshot.clone();
        self.verdicts.insert(
            collect.index,
            VerdictRecord {
                term: collect.term,
                success,
                entries: collect.proposal.entries.clone(),
            },
        );
        let msg = WireMsg::ReputationComputeReply {
            term: collect.term,
            index: collect.index,
            success,
            entries: collect.proposal.entries.clone(),
            leader_revoked,
            snapshot,
        };
        self.broadcast(out, &msg);
        // The supervisor is itself a follower for replication: a deferred
        // append for this slot can be answered now.
        self.replay_deferred(collect.index, now, out);
    }

    fn handle_verdict_broadcast(
        &mut self,
        from: NodeId,
        term: Term,
        index: LogIndex,
        success: bool,
        entries: Vec<AttackAttribute>,
        leader_revoked: bool,
        snapshot: ReputationTable,
        out: &mut Vec<NodeOutput>,
        now: SimTime,
    ) {
        let _ = from;
        if term < self.term {
            return;
        }
        self.note_snapshot(&snapshot);
        self.verdicts.insert(index, VerdictRecord { term, success, entries });
        if leader_revoked {
            if let Some((lt, leader)) = self.leader {
                if lt == term {
                    self.revoked_leaders.insert((term, leader));
                    out.push(NodeOutput::Event(TraceEvent::LeaderRevoked { leader }));
                }
            }
            if self.state == NodeState::Leader && term == self.term {
                // The cluster no longer honors this leadership; step down.
                self.drop_leader_state(out);
                self.set_role(NodeState::Follower, out);
                self.arm_election_timer(out);
                return;
            }
        }
        if self.state == NodeState::Leader {
            let my_id = self.id;
            let commit_base = self.last_committed_index();
            let append_msg = {
                let Some(lead) = &mut self.lead else { return };
                let Some(round) = &mut lead.round else { return };
                if round.proposal.term != term
                    || round.proposal.index != index
                    || round.verdict.is_some()
                {
                    return;
                }
                round.verdict = Some(success);
                if success {
                    round.appended = true;
                    Some(WireMsg::AppendEntries {
                        term,
                        leader: my_id,
                        prev_index: round.proposal.prev_index,
                        proposal: Some(round.proposal.clone()),
                        leader_commit: commit_base,
                        supervisor: lead.supervisor,
                        snapshot: None,
                    })
                } else {
                    None
                }
            };
            match append_msg {
                Some(msg) => self.broadcast(out, &msg),
                None => {
                    out.push(NodeOutput::Event(TraceEvent::Reject {
                        index,
                        reason: "verdict_rejected",
                    }));
                    self.finish_round(now, out);
                }
            }
        } else {
            self.replay_deferred(index, now, out);
        }
    }

    fn replay_deferred(&mut self, index: LogIndex, now: SimTime, out: &mut Vec<NodeOutput>) {
        if let Some((from, msg)) = self.deferred_appends.remove(&index) {
            let mut replayed = self.handle_input(NodeInput::Deliver { from, msg }, now);
            out.append(&mut replayed);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn handle_append_entries(
        &mut self,
        from: NodeId,
        term: Term,
        leader: NodeId,
        _prev_index: LogIndex,
        proposal: Option<Proposal>,
        leader_commit: LogIndex,
        supervisor: Option<NodeId>,
        snapshot: Option<ReputationTable>,
        now: SimTime,
        out: &mut Vec<NodeOutput>,
    ) {
        if term < self.term {
            out.push(NodeOutput::Send {
                to: from,
                msg: WireMsg::AppendEntriesReply {
                    term: self.term,
                    from: self.id,
                    success: false,
                    last_index: self.last_log_pos().1,
                },
            });
            return;
        }
        if self.state == NodeState::Leader {
            // Same-term append from another leader would break election
            // safety; it can only be this node's own delayed traffic.
            return;
        }
        if self.revoked_leaders.contains(&(term, leader)) {
            // A revoked leader cannot suppress elections or replicate.
            out.push(NodeOutput::Send {
                to: from,
                msg: WireMsg::AppendEntriesReply {
                    term: self.term,
                    from: self.id,
                    success: false,
                    last_index: self.last_log_pos().1,
                },
            });
            return;
        }
        self.yield_to_leader(out);
        self.leader = Some((term, leader));
        self.election_attempts = 0;
        self.arm_election_timer(out);
        if let Some(sup) = supervisor {
            self.learn_supervisor(sup, snapshot.as_ref(), out);
        }
        let mut success = true;
        if let Some(p) = proposal {
            success = self.try_append(p, leader_commit, out);
        }
        // A deferred append whose verdict broadcast was lost can be healed
        // once the leader has committed that slot: commitment itself proves
        // supervisor approval.
        if self.provisional.is_none() {
            let next = self.last_committed_index().next();
            if leader_commit >= next {
                if let Some((_, WireMsg::AppendEntries { proposal: Some(p), .. })) =
                    self.deferred_appends.remove(&next)
                {
                    self.try_append(p, leader_commit, out);
                }
            }
        }
        self.advance_commit(leader_commit, now, out);
        out.push(NodeOutput::Send {
            to: from,
            msg: WireMsg::AppendEntriesReply {
                term: self.term,
                from: self.id,
                success,
                last_index: self.last_log_pos().1,
            },
        });
    }

    /// Follower-side append decision. Returns whether the entry is (now or
    /// already) present at `p.index`.
    fn try_append(&mut self, p: Proposal, leader_commit: LogIndex, out: &mut Vec<NodeOutput>) -> bool {
        let committed_last = self.last_committed_index();
        if p.index <= committed_last {
            // Duplicate delivery of an entry this node already holds.
            return true;
        }
        if let Some(prov) = &self.provisional {
            if prov.index == p.index {
                if prov.term == p.term {
                    return true;
                }
                // Conflicting uncommitted entry from an older leadership:
                // the newer term wins, re-evaluate below.
                self.provisional = None;
            }
        }
        if p.prev_index != self.last_committed_index() {
            return false;
        }
        // Entries the leader already committed were supervisor-approved by
        // definition; re-checking would need a verdict this node may never
        // have seen (e.g. it was down or partitioned).
        if p.index > leader_commit {
            match self.verdicts.get(&p.index) {
                None => {
                    // Verdict still in flight: park the append and answer
                    // when the verdict broadcast lands.
                    self.deferred_appends.insert(
                        p.index,
                        (
                            p.origin,
                            WireMsg::AppendEntries {
                                term: p.term,
                                leader: p.origin,
                                prev_index: p.prev_index,
                                proposal: Some(p),
                                leader_commit,
                                supervisor: None,
                                snapshot: None,
                            },
                        ),
                    );
                    return false;
                }
                Some(v) => {
                    if !v.success || v.entries != p.entries {
                        out.push(NodeOutput::Event(TraceEvent::Reject {
                            index: p.index,
                            reason: "verdict_mismatch",
                        }));
                        return false;
                    }
                }
            }
        }
        self.provisional = Some(p);
        true
    }

    fn advance_commit(&mut self, leader_commit: LogIndex, now: SimTime, out: &mut Vec<NodeOutput>) {
        if let Some(prov) = &self.provisional {
            if prov.index <= leader_commit {
                let p = self.provisional.take().expect("provisional");
                let truth_key = self.round_truth.get(&p.index).copied();
                let entry = LedgerEntry { proposal: p, committed_at: now };
                out.push(NodeOutput::Event(TraceEvent::Commit {
                    index: entry.proposal.index,
                    origin: entry.proposal.origin,
                }));
                self.committed.push(entry.clone());
                out.push(NodeOutput::Committed { entry, truth_key });
            }
        }
    }

    fn handle_input(&mut self, input: NodeInput, now: SimTime) -> Vec<NodeOutput> {
        let mut out = Vec::new();
        match input {
            NodeInput::Observe { truth_key, entries } => {
                self.observations.insert(truth_key, entries);
            }
            NodeInput::Submit { truth_key, entries } => {
                self.handle_submit(truth_key, entries, now, &mut out);
            }
            NodeInput::Timer(kind) => match kind {
                TimerKind::Election { nonce } => self.on_election_timeout(nonce, &mut out),
                TimerKind::Heartbeat { nonce } => self.on_heartbeat_timer(nonce, &mut out),
                TimerKind::CollectDeadline { nonce } => {
                    self.on_collect_deadline(nonce, now, &mut out)
                }
                TimerKind::VerdictDeadline { nonce } => self.on_verdict_deadline(nonce, &mut out),
                TimerKind::VoteCertExpiry { term, candidate } => {
                    self.on_vote_cert_expiry(term, candidate, &mut out)
                }
                TimerKind::BftRound { .. } => {}
            },
            NodeInput::Deliver { from, msg } => {
                // Any traffic proves the sender is reachable.
                if let Some(lead) = &mut self.lead {
                    lead.silent_waves.insert(from, 0);
                }
                if let Some(t) = msg.term() {
                    if t > self.term {
                        self.adopt_term(t, &mut out);
                    }
                }
                match msg {
                    WireMsg::RequestVote { term, candidate, last_log_term, last_log_index } => {
                        self.handle_request_vote(term, candidate, last_log_term, last_log_index, &mut out);
                    }
                    WireMsg::RequestVoteReply { term, voter, granted } => {
                        self.handle_request_vote_reply(voter, granted, term, &mut out);
                    }
                    WireMsg::ReputationValue { term: _, candidate } => {
                        let trusted = match (&self.state, &self.supervisor_table) {
                            (NodeState::Supervisor, Some(table)) => table
                                .score(candidate)
                                .map(|s| self.params.is_faithful(s))
                                .unwrap_or(false),
                            _ => false,
                        };
                        out.push(NodeOutput::Send {
                            to: from,
                            msg: WireMsg::ReputationValueReply {
                                term: self.term,
                                candidate,
                                trusted,
                            },
                        });
                    }
                    WireMsg::ReputationValueReply { term: _, candidate, trusted } => {
                        self.handle_reputation_value_reply(candidate, trusted, &mut out);
                    }
                    WireMsg::ProposalBroadcast { proposal, truth_key, supervisor, leader } => {
                        self.handle_proposal_broadcast(
                            proposal, truth_key, supervisor, leader, now, &mut out,
                        );
                    }
                    WireMsg::ReputationCompute { report } => {
                        self.handle_report(report, now, &mut out);
                    }
                    WireMsg::ReputationComputeReply {
                        term,
                        index,
                        success,
                        entries,
                        leader_revoked,
                        snapshot,
                    } => {
                        self.handle_verdict_broadcast(
                            from, term, index, success, entries, leader_revoked, snapshot, &mut out, now,
                        );
                    }
                    WireMsg::AppendEntries {
                        term,
                        leader,
                        prev_index,
                        proposal,
                        leader_commit,
                        supervisor,
                        snapshot,
                    } => {
                        self.handle_append_entries(
                            from, term, leader, prev_index, proposal, leader_commit, supervisor,
                            snapshot, now, &mut out,
                        );
                    }
                    WireMsg::AppendEntriesReply { term, from: replier, success, last_index } => {
                        if term == self.term {
                            self.handle_append_reply(replier, success, last_index, now, &mut out);
                        }
                    }
                    WireMsg::BftProposal { .. } | WireMsg::BftVerify { .. } => {
                        out.push(NodeOutput::Event(TraceEvent::Reject {
                            index: LogIndex(0),
                            reason: "foreign_protocol_message",
                        }));
                    }
                }
            }
        }
        out
    }
}

impl ProtocolNode for PorNode {
    fn id(&self) -> NodeId {
        self.id
    }
    fn cluster_size(&self) -> u32 {
        self.n
    }
    fn state(&self) -> NodeState {
        self.state
    }
    fn current_term(&self) -> Term {
        self.term
    }
    fn committed(&self) -> &[LedgerEntry] {
        &self.committed
    }
    fn reputation_view(&self) -> Option<&ReputationTable> {
        Some(self.best_table())
    }
    fn on_start(&mut self, _now: SimTime) -> Vec<NodeOutput> {
        let mut out = Vec::new();
        self.arm_election_timer(&mut out);
        out
    }
    fn handle(&mut self, input: NodeInput, now: SimTime) -> Vec<NodeOutput> {
        self.handle_input(input, now)
    }
}
