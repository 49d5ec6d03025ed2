//! Comparison protocols sharing the node surface of the reputation design.
//!
//! `CftNode` is a minimal leader-based log replication in the Raft style:
//! majority elections, single in-flight proposal, commit on majority
//! acknowledgement. It survives crashes but takes whatever the leader sends,
//! so a tampering leader corrupts the replicated history unchallenged.
//!
//! `BftNode` is a fixed-proposer all-to-all echo: every node rebroadcasts
//! its own observation of the proposed attack and commits the vector that
//! more than two thirds of the cluster agree on. It tolerates f < N/3 liars
//! at quadratic message cost and makes no progress beyond that bound.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::domain::{
    AttackAttribute, LedgerEntry, LogIndex, NodeId, NodeState, Proposal, ProtocolParams, SimTime,
    Term,
};
use crate::messages::{TimerKind, WireMsg};
use crate::protocol::{NodeInput, NodeOutput, ProtocolNode};
use crate::reputation::ReputationTable;
use crate::rng::DetRng;
use crate::trace::TraceEvent;

// ---------------------------------------------------------------------------
// Crash-fault-tolerant baseline

#[derive(Debug)]
struct CftRound {
    proposal: Proposal,
    truth_key: u64,
    acks: BTreeSet<NodeId>,
}

pub struct CftNode {
    id: NodeId,
    n: u32,
    params: ProtocolParams,
    rng: DetRng,
    state: NodeState,
    term: Term,
    voted_for: Option<(Term, NodeId)>,
    votes: BTreeSet<NodeId>,
    election_nonce: u64,
    heartbeat_nonce: u64,
    committed: Vec<LedgerEntry>,
    provisional: Option<Proposal>,
    round_truth: BTreeMap<LogIndex, u64>,
    round: Option<CftRound>,
    queue: VecDeque<(u64, Vec<AttackAttribute>)>,
}

impl CftNode {
    pub fn new(id: NodeId, cluster_size: u32, params: ProtocolParams, rng: DetRng) -> Self {
        CftNode {
            id,
            n: cluster_size,
            params,
            rng,
            state: NodeState::Follower,
            term: Term(0),
            voted_for: None,
            votes: BTreeSet::new(),
            election_nonce: 0,
            heartbeat_nonce: 0,
            committed: Vec::new(),
            provisional: None,
            round_truth: BTreeMap::new(),
            round: None,
            queue: VecDeque::new(),
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
        self.committed.last().map(|e| e.proposal.index).unwrap_or(LogIndex(0))
    }

    fn last_log_pos(&self) -> (Term, LogIndex) {
        if let Some(p) = &self.provisional {
            return (p.term, p.index);
        }
        self.committed
            .last()
            .map(|e| (e.proposal.term, e.proposal.index))
            .unwrap_or((Term(0), LogIndex(0)))
    }

    fn arm_election_timer(&mut self, out: &mut Vec<NodeOutput>) {
        self.election_nonce += 1;
        let (lo, hi) = self.params.election_timeout;
        let after = self.rng.range_inclusive(lo, hi);
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

    fn step_down(&mut self, out: &mut Vec<NodeOutput>) {
        if self.state == NodeState::Leader {
            for _ in self.queue.drain(..) {
                out.push(NodeOutput::Event(TraceEvent::Reject {
                    index: LogIndex(0),
                    reason: "queued_submission_dropped",
                }));
            }
            self.round = None;
            self.heartbeat_nonce += 1;
        }
        self.votes.clear();
        self.set_role(NodeState::Follower, out);
    }

    fn adopt_term(&mut self, term: Term, out: &mut Vec<NodeOutput>) {
        self.term = term;
        let was_leader = self.state == NodeState::Leader;
        self.step_down(out);
        if was_leader {
            self.arm_election_timer(out);
        }
    }

    fn on_election_timeout(&mut self, nonce: u64, out: &mut Vec<NodeOutput>) {
        if nonce != self.election_nonce || self.state == NodeState::Leader {
            return;
        }
        self.term = Term(self.term.0 + 1);
        self.set_role(NodeState::Candidate, out);
        self.voted_for = Some((self.term, self.id));
        self.votes.clear();
        self.votes.insert(self.id);
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
        let vote_free = match self.voted_for {
            Some((t, c)) => t != self.term || c == candidate,
            None => true,
        };
        let up_to_date = (last_log_term, last_log_index) >= self.last_log_pos();
        let granted = term >= self.term && vote_free && up_to_date;
        if granted {
            self.voted_for = Some((self.term, candidate));
            out.push(NodeOutput::Event(TraceEvent::VoteGranted { candidate }));
            self.arm_election_timer(out);
        }
        out.push(NodeOutput::Send {
            to: candidate,
            msg: WireMsg::RequestVoteReply { term: self.term, voter: self.id, granted },
        });
    }

    fn maybe_win(&mut self, out: &mut Vec<NodeOutput>) {
        if self.state != NodeState::Candidate || (self.votes.len() as u64) * 2 <= self.n as u64 {
            return;
        }
        self.set_role(NodeState::Leader, out);
        self.votes.clear();
        // Same crash-recovery obligation as any log replication: an entry
        // accepted while following may be committed elsewhere, so the new
        // leader re-carries it instead of proposing over it.
        if let Some(p) = self.provisional.clone() {
            let truth_key = self.round_truth.get(&p.index).copied().unwrap_or(0);
            self.round = Some(CftRound { proposal: p, truth_key, acks: BTreeSet::new() });
        }
        self.heartbeat_nonce += 1;
        self.send_heartbeat(out);
        out.push(NodeOutput::SetTimer {
            after: self.params.heartbeat_interval,
            kind: TimerKind::Heartbeat { nonce: self.heartbeat_nonce },
        });
    }

    fn send_heartbeat(&mut self, out: &mut Vec<NodeOutput>) {
        let (proposal, prev_index) = match &self.round {
            Some(r) => (Some(r.proposal.clone()), r.proposal.prev_index),
            None => (None, self.last_committed_index()),
        };
        let msg = WireMsg::AppendEntries {
            term: self.term,
            leader: self.id,
            prev_index,
            proposal,
            leader_commit: self.last_committed_index(),
            supervisor: None,
            snapshot: None,
        };
        self.broadcast(out, &msg);
    }

    fn on_heartbeat_timer(&mut self, nonce: u64, out: &mut Vec<NodeOutput>) {
        if self.state != NodeState::Leader || nonce != self.heartbeat_nonce {
            return;
        }
        self.send_heartbeat(out);
        out.push(NodeOutput::SetTimer {
            after: self.params.heartbeat_interval,
            kind: TimerKind::Heartbeat { nonce: self.heartbeat_nonce },
        });
    }

    fn try_start_round(&mut self, out: &mut Vec<NodeOutput>) {
        if self.round.is_some() || self.queue.is_empty() {
            return;
        }
        let (truth_key, entries) = self.queue.pop_front().expect("non-empty queue");
        let prev_index = self.last_committed_index();
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
        self.round_truth.insert(proposal.index, truth_key);
        out.push(NodeOutput::Event(TraceEvent::Propose { index: proposal.index, truth_key }));
        let msg = WireMsg::AppendEntries {
            term: self.term,
            leader: self.id,
            prev_index,
            proposal: Some(proposal.clone()),
            leader_commit: prev_index,
            supervisor: None,
            snapshot: None,
        };
        self.round = Some(CftRound { proposal, truth_key, acks: BTreeSet::new() });
        self.broadcast(out, &msg);
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
            let next = &self.committed[last_index.0 as usize];
            out.push(NodeOutput::Send {
                to: from,
                msg: WireMsg::AppendEntries {
                    term: self.term,
                    leader: self.id,
                    prev_index: last_index,
                    proposal: Some(next.proposal.clone()),
                    leader_commit: self.last_committed_index(),
                    supervisor: None,
                    snapshot: None,
                },
            });
            return;
        }
        if !success {
            return;
        }
        let Some(round) = &mut self.round else { return };
        if last_index < round.proposal.index {
            return;
        }
        round.acks.insert(from);
        // Majority of the whole cluster, counting the leader itself.
        if (round.acks.len() as u64 + 1) * 2 > self.n as u64 {
            let round = self.round.take().expect("round present");
            let entry = LedgerEntry { proposal: round.proposal, committed_at: now };
            self.committed.push(entry.clone());
            if self.provisional.as_ref().map(|p| p.index) == Some(entry.proposal.index) {
                self.provisional = None;
            }
            out.push(NodeOutput::Event(TraceEvent::Commit {
                index: entry.proposal.index,
                origin: entry.proposal.origin,
            }));
            out.push(NodeOutput::Committed { entry, truth_key: Some(round.truth_key) });
            self.send_heartbeat(out);
            self.try_start_round(out);
        }
    }

    fn handle_append_entries(
        &mut self,
        from: NodeId,
        term: Term,
        proposal: Option<Proposal>,
        leader_commit: LogIndex,
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
            return;
        }
        if self.state == NodeState::Candidate {
            self.votes.clear();
            self.set_role(NodeState::Follower, out);
        }
        self.arm_election_timer(out);
        let mut success = true;
        if let Some(p) = proposal {
            success = self.try_append(p);
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

    /// Append without any content check: whatever the leader sends is taken
    /// at face value. This is the crash-only trust model.
    fn try_append(&mut self, p: Proposal) -> bool {
        if p.index <= self.last_committed_index() {
            return true;
        }
        if let Some(prov) = &self.provisional {
            if prov.index == p.index {
                if prov.term == p.term {
                    return true;
                }
                self.provisional = None;
            }
        }
        if p.prev_index != self.last_committed_index() {
            return false;
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
            NodeInput::Observe { .. } => {}
            NodeInput::Submit { truth_key, entries } => {
                if self.state != NodeState::Leader {
                    out.push(NodeOutput::Event(TraceEvent::Reject {
                        index: LogIndex(0),
                        reason: "submit_to_non_leader",
                    }));
                } else {
                    self.queue.push_back((truth_key, entries));
                    self.try_start_round(&mut out);
                }
            }
            NodeInput::Timer(kind) => match kind {
                TimerKind::Election { nonce } => self.on_election_timeout(nonce, &mut out),
                TimerKind::Heartbeat { nonce } => self.on_heartbeat_timer(nonce, &mut out),
                _ => {}
            },
            NodeInput::Deliver { from, msg } => {
                if let Some(t) = msg.term() {
                    if t > self.term {
                        self.adopt_term(t, &mut out);
                    }
                }
                match msg {
                    WireMsg::RequestVote { term, candidate, last_log_term, last_log_index } => {
                        self.handle_request_vote(
                            term,
                            candidate,
                            last_log_term,
                            last_log_index,
                            &mut out,
                        );
                    }
                    WireMsg::RequestVoteReply { term, voter, granted } => {
                        if self.state == NodeState::Candidate && term == self.term && granted {
                            self.votes.insert(voter);
                            self.maybe_win(&mut out);
                        }
                    }
                    WireMsg::AppendEntries { term, proposal, leader_commit, .. } => {
                        self.handle_append_entries(
                            from,
                            term,
                            proposal,
                            leader_commit,
                            now,
                            &mut out,
                        );
                    }
                    WireMsg::AppendEntriesReply { term, from: replier, success, last_index } => {
                        if term == self.term {
                            self.handle_append_reply(replier, success, last_index, now, &mut out);
                        }
                    }
                    _ => {
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

impl ProtocolNode for CftNode {
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
        None
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

// ---------------------------------------------------------------------------
// Byzantine-fault-tolerant baseline

const BFT_PROPOSER: NodeId = NodeId(0);

pub struct BftNode {
    id: NodeId,
    n: u32,
    params: ProtocolParams,
    committed: Vec<LedgerEntry>,
    observations: BTreeMap<u64, Vec<AttackAttribute>>,
    /// Truth keys learned from proposals, for the commit report.
    round_truth: BTreeMap<u64, u64>,
    /// Echo vectors per round per sender, own echo included. Kept until the
    /// round commits so late echoes can still complete a stalled slot.
    echoes: BTreeMap<u64, BTreeMap<NodeId, Vec<AttackAttribute>>>,
    /// Rounds this node already echoed, to echo at most once each.
    echoed: BTreeSet<u64>,
    /// Round number the proposer currently has under vote.
    inflight: Option<u64>,
    queue: VecDeque<(u64, Vec<AttackAttribute>)>,
}

impl BftNode {
    pub fn new(id: NodeId, cluster_size: u32, params: ProtocolParams, _rng: DetRng) -> Self {
        BftNode {
            id,
            n: cluster_size,
            params,
            committed: Vec::new(),
            observations: BTreeMap::new(),
            round_truth: BTreeMap::new(),
            echoes: BTreeMap::new(),
            echoed: BTreeSet::new(),
            inflight: None,
            queue: VecDeque::new(),
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

    fn next_round(&self) -> u64 {
        self.committed.last().map(|e| e.proposal.index.0).unwrap_or(0) + 1
    }

    fn try_start_round(&mut self, out: &mut Vec<NodeOutput>) {
        if self.id != BFT_PROPOSER || self.inflight.is_some() || self.queue.is_empty() {
            return;
        }
        let (truth_key, entries) = self.queue.pop_front().expect("non-empty queue");
        let round = self.next_round();
        let proposal = match Proposal::new(
            Term(0),
            LogIndex(round - 1),
            entries,
            BFT_PROPOSER,
        ) {
            Ok(p) => p,
            Err(_) => {
                out.push(NodeOutput::Event(TraceEvent::Reject {
                    index: LogIndex(round),
                    reason: "empty_submission",
                }));
                return;
            }
        };
        self.inflight = Some(round);
        self.round_truth.insert(round, truth_key);
        out.push(NodeOutput::Event(TraceEvent::Propose {
            index: proposal.index,
            truth_key,
        }));
        self.broadcast(out, &WireMsg::BftProposal { round, proposal, truth_key });
        self.echo(round, truth_key, out);
        out.push(NodeOutput::SetTimer {
            after: self.params.election_timeout.0,
            kind: TimerKind::BftRound { round },
        });
        self.check_commit(SimTime(0), out, false);
    }

    /// Broadcast this node's own observation of the attack under vote. A
    /// node that never observed it echoes an empty vector, which honestly
    /// signals "cannot confirm".
    fn echo(&mut self, round: u64, truth_key: u64, out: &mut Vec<NodeOutput>) {
        if !self.echoed.insert(round) {
            return;
        }
        let entries = self.observations.get(&truth_key).cloned().unwrap_or_default();
        self.echoes
            .entry(round)
            .or_default()
            .insert(self.id, entries.clone());
        self.broadcast(out, &WireMsg::BftVerify { round, from: self.id, entries });
    }

    fn handle_proposal(
        &mut self,
        round: u64,
        truth_key: u64,
        now: SimTime,
        out: &mut Vec<NodeOutput>,
    ) {
        if round < self.next_round() {
            return;
        }
        self.round_truth.insert(round, truth_key);
        self.echo(round, truth_key, out);
        self.check_commit(now, out, true);
    }

    fn handle_verify(
        &mut self,
        round: u64,
        from: NodeId,
        entries: Vec<AttackAttribute>,
        now: SimTime,
        out: &mut Vec<NodeOutput>,
    ) {
        if round < self.next_round() {
            return;
        }
        // First echo per sender wins; a sender cannot revise its vote.
        self.echoes.entry(round).or_default().entry(from).or_insert(entries);
        self.check_commit(now, out, true);
    }

    /// Commits the next slot once some echo vector clears the two-thirds
    /// bar. Catch-up continues through any stashed later rounds.
    fn check_commit(&mut self, now: SimTime, out: &mut Vec<NodeOutput>, chain: bool) {
        loop {
            let round = self.next_round();
            let Some(vectors) = self.echoes.get(&round) else { return };
            let mut winner: Option<&Vec<AttackAttribute>> = None;
            for v in vectors.values() {
                let count = vectors.values().filter(|w| *w == v).count() as u64;
                if count * 3 > u64::from(self.n) * 2 {
                    winner = Some(v);
                    break;
                }
            }
            let Some(entries) = winner else { return };
            if entries.is_empty() {
                // A supermajority saying "cannot confirm" closes the round
                // without a ledger entry.
                out.push(NodeOutput::Event(TraceEvent::Reject {
                    index: LogIndex(round),
                    reason: "echo_majority_unconfirmed",
                }));
                self.finish_round(round, out);
                if !chain {
                    return;
                }
                continue;
            }
            let proposal = match Proposal::new(
                Term(0),
                LogIndex(round - 1),
                entries.clone(),
                BFT_PROPOSER,
            ) {
                Ok(p) => p,
                Err(_) => return,
            };
            let truth_key = self.round_truth.get(&round).copied();
            let entry = LedgerEntry { proposal, committed_at: now };
            out.push(NodeOutput::Event(TraceEvent::Commit {
                index: entry.proposal.index,
                origin: entry.proposal.origin,
            }));
            self.committed.push(entry.clone());
            out.push(NodeOutput::Committed { entry, truth_key });
            self.finish_round(round, out);
            if !chain {
                return;
            }
        }
    }

    fn finish_round(&mut self, round: u64, out: &mut Vec<NodeOutput>) {
        self.echoes.remove(&round);
        self.echoed.remove(&round);
        self.round_truth.remove(&round);
        if self.id == BFT_PROPOSER && self.inflight == Some(round) {
            self.inflight = None;
            self.try_start_round(out);
        }
    }

    fn on_round_timer(&mut self, round: u64, out: &mut Vec<NodeOutput>) {
        if self.id != BFT_PROPOSER {
            return;
        }
        if self.inflight != Some(round) {
            return;
        }
        // No vector reached two thirds in time: give up on this submission.
        out.push(NodeOutput::Event(TraceEvent::Reject {
            index: LogIndex(round),
            reason: "echo_quorum_timeout",
        }));
        self.inflight = None;
        self.try_start_round(out);
    }

    fn handle_input(&mut self, input: NodeInput, now: SimTime) -> Vec<NodeOutput> {
        let mut out = Vec::new();
        match input {
            NodeInput::Observe { truth_key, entries } => {
                self.observations.insert(truth_key, entries);
            }
            NodeInput::Submit { truth_key, entries } => {
                if self.id != BFT_PROPOSER {
                    out.push(NodeOutput::Event(TraceEvent::Reject {
                        index: LogIndex(0),
                        reason: "submit_to_non_proposer",
                    }));
                } else {
                    self.observations.entry(truth_key).or_insert_with(|| entries.clone());
                    self.queue.push_back((truth_key, entries));
                    self.try_start_round(&mut out);
                }
            }
            NodeInput::Timer(kind) => {
                if let TimerKind::BftRound { round } = kind {
                    self.on_round_timer(round, &mut out);
                }
            }
            NodeInput::Deliver { from, msg } => match msg {
                WireMsg::BftProposal { round, truth_key, .. } => {
                    self.handle_proposal(round, truth_key, now, &mut out);
                }
                WireMsg::BftVerify { round, from: sender, entries } => {
                    let _ = from;
                    self.handle_verify(round, sender, entries, now, &mut out);
                }
                _ => {
                    out.push(NodeOutput::Event(TraceEvent::Reject {
                        index: LogIndex(0),
                        reason: "foreign_protocol_message",
                    }));
                }
            },
        }
        out
    }
}

impl ProtocolNode for BftNode {
    fn id(&self) -> NodeId {
        self.id
    }
    fn cluster_size(&self) -> u32 {
        self.n
    }
    fn state(&self) -> NodeState {
        // Routing convention: the fixed proposer is where submissions land.
        if self.id == BFT_PROPOSER {
            NodeState::Leader
        } else {
            NodeState::Follower
        }
    }
    fn current_term(&self) -> Term {
        Term(0)
    }
    fn committed(&self) -> &[LedgerEntry] {
        &self.committed
    }
    fn reputation_view(&self) -> Option<&ReputationTable> {
        None
    }
    fn on_start(&mut self, _now: SimTime) -> Vec<NodeOutput> {
        Vec::new()
    }
    fn handle(&mut self, input: NodeInput, now: SimTime) -> Vec<NodeOutput> {
        self.handle_input(input, now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AttributeKey;
    use crate::rng::stream_seed;

    fn attrs() -> Vec<AttackAttribute> {
        AttributeKey::ALL
            .iter()
            .map(|k| AttackAttribute::new(*k, format!("{}-seen", k.name())))
            .collect()
    }

    fn corrupt() -> Vec<AttackAttribute> {
        let mut v = attrs();
        v[0] = AttackAttribute::new(AttributeKey::AttackMethod, "liar");
        v
    }

    fn cft_cluster(n: u32) -> Vec<CftNode> {
        (0..n)
            .map(|i| {
                CftNode::new(
                    NodeId::new(i),
                    n,
                    ProtocolParams::default(),
                    DetRng::new(stream_seed(11, 0x1000 + u64::from(i))),
                )
            })
            .collect()
    }

    fn bft_cluster(n: u32) -> Vec<BftNode> {
        (0..n)
            .map(|i| {
                BftNode::new(
                    NodeId::new(i),
                    n,
                    ProtocolParams::default(),
                    DetRng::new(stream_seed(11, 0x2000 + u64::from(i))),
                )
            })
            .collect()
    }

    fn pump<N: ProtocolNode>(
        nodes: &mut [N],
        seed: Vec<(NodeId, Vec<NodeOutput>)>,
        now: SimTime,
    ) -> Vec<(NodeId, NodeOutput)> {
        let mut done = Vec::new();
        let mut queue: VecDeque<(NodeId, NodeId, WireMsg)> = VecDeque::new();
        let absorb = |at: NodeId,
                          outs: Vec<NodeOutput>,
                          q: &mut VecDeque<(NodeId, NodeId, WireMsg)>,
                          d: &mut Vec<(NodeId, NodeOutput)>| {
            for o in outs {
                match o {
                    NodeOutput::Send { to, msg } => q.push_back((at, to, msg)),
                    other => d.push((at, other)),
                }
            }
        };
        for (from, outs) in seed {
            absorb(from, outs, &mut queue, &mut done);
        }
        while let Some((from, to, msg)) = queue.pop_front() {
            let outs = nodes[to.index()].handle(NodeInput::Deliver { from, msg }, now);
            absorb(to, outs, &mut queue, &mut done);
        }
        done
    }

    #[test]
    fn cft_elects_and_replicates() {
        let mut nodes = cft_cluster(4);
        for nd in nodes.iter_mut() {
            nd.on_start(SimTime(0));
        }
        let nonce = nodes[0].election_nonce;
        let outs = nodes[0].handle(NodeInput::Timer(TimerKind::Election { nonce }), SimTime(100));
        pump(&mut nodes, vec![(NodeId::new(0), outs)], SimTime(100));
        assert_eq!(nodes[0].state, NodeState::Leader);
        assert_eq!(nodes.iter().filter(|n| n.state == NodeState::Leader).count(), 1);

        let outs = nodes[0].handle(
            NodeInput::Submit { truth_key: 42, entries: attrs() },
            SimTime(200),
        );
        let events = pump(&mut nodes, vec![(NodeId::new(0), outs)], SimTime(200));
        let commits = events
            .iter()
            .filter(|(_, o)| matches!(o, NodeOutput::Committed { .. }))
            .count();
        assert_eq!(commits, 4);
        for nd in &nodes {
            assert_eq!(nd.committed.len(), 1);
            assert_eq!(nd.committed[0].proposal.entries, attrs());
        }
    }

    #[test]
    fn cft_accepts_tampered_content_without_question() {
        let mut nodes = cft_cluster(4);
        for nd in nodes.iter_mut() {
            nd.on_start(SimTime(0));
        }
        nodes[1].term = Term(1);
        let poisoned = Proposal::new(Term(1), LogIndex(0), corrupt(), NodeId::new(0)).unwrap();
        nodes[1].handle(
            NodeInput::Deliver {
                from: NodeId::new(0),
                msg: WireMsg::AppendEntries {
                    term: Term(1),
                    leader: NodeId::new(0),
                    prev_index: LogIndex(0),
                    proposal: Some(poisoned.clone()),
                    leader_commit: LogIndex(1),
                    supervisor: None,
                    snapshot: None,
                },
            },
            SimTime(50),
        );
        assert_eq!(nodes[1].committed.len(), 1);
        assert_eq!(
            nodes[1].committed[0].proposal, poisoned,
            "no content validation exists in the crash-only model"
        );
    }

    #[test]
    fn bft_round_costs_quadratic_messages_and_commits_truth() {
        let n = 5;
        let mut nodes = bft_cluster(n);
        let now = SimTime(100);
        for nd in nodes.iter_mut() {
            nd.handle(NodeInput::Observe { truth_key: 9, entries: attrs() }, now);
        }
        let outs = nodes[0].handle(NodeInput::Submit { truth_key: 9, entries: attrs() }, now);
        // Count every message the round produces, including the seed batch.
        let mut sends = outs
            .iter()
            .filter(|o| matches!(o, NodeOutput::Send { .. }))
            .count();
        let mut done = Vec::new();
        let mut queue: VecDeque<(NodeId, NodeId, WireMsg)> = VecDeque::new();
        for o in outs {
            if let NodeOutput::Send { to, msg } = o {
                queue.push_back((NodeId::new(0), to, msg));
            } else {
                done.push((NodeId::new(0), o));
            }
        }
        while let Some((from, to, msg)) = queue.pop_front() {
            for o in nodes[to.index()].handle(NodeInput::Deliver { from, msg }, now) {
                if let NodeOutput::Send { to: t2, msg } = o {
                    sends += 1;
                    queue.push_back((to, t2, msg));
                } else {
                    done.push((to, o));
                }
            }
        }
        // Proposal fan-out (n-1) plus one echo broadcast per node: (n+1)(n-1).
        assert_eq!(sends, ((n as usize) + 1) * ((n as usize) - 1));
        for nd in &nodes {
            assert_eq!(nd.committed.len(), 1);
            assert_eq!(nd.committed[0].proposal.entries, attrs());
        }
    }

    #[test]
    fn bft_corrects_minority_liars_and_stalls_at_one_third() {
        // f = 1 of n = 5 lies: everyone still commits the honest vector.
        let n = 5;
        let mut nodes = bft_cluster(n);
        let now = SimTime(100);
        for nd in nodes.iter_mut() {
            nd.handle(NodeInput::Observe { truth_key: 9, entries: attrs() }, now);
        }
        nodes[4].observations.insert(9, corrupt());
        let outs = nodes[0].handle(NodeInput::Submit { truth_key: 9, entries: attrs() }, now);
        pump(&mut nodes, vec![(NodeId::new(0), outs)], now);
        for nd in &nodes {
            assert_eq!(nd.committed.len(), 1, "node {}", nd.id);
            assert_eq!(nd.committed[0].proposal.entries, attrs());
        }

        // f = 2 of n = 5 with disjoint lies: no vector clears two thirds.
        let mut nodes = bft_cluster(n);
        for nd in nodes.iter_mut() {
            nd.handle(NodeInput::Observe { truth_key: 9, entries: attrs() }, now);
        }
        let mut other_lie = attrs();
        other_lie[3] = AttackAttribute::new(AttributeKey::Ttps, "different-liar");
        nodes[3].observations.insert(9, other_lie);
        nodes[4].observations.insert(9, corrupt());
        let outs = nodes[0].handle(NodeInput::Submit { truth_key: 9, entries: attrs() }, now);
        pump(&mut nodes, vec![(NodeId::new(0), outs)], now);
        for nd in &nodes {
            assert!(nd.committed.is_empty(), "node {} must not commit", nd.id);
        }
        // The proposer's round timer closes the failed slot.
        let outs = nodes[0].handle(
            NodeInput::Timer(TimerKind::BftRound { round: 1 }),
            SimTime(500),
        );
        assert!(outs.iter().any(|o| matches!(
            o,
            NodeOutput::Event(TraceEvent::Reject { reason: "echo_quorum_timeout", .. })
        )));
        assert!(nodes[0].inflight.is_none());
    }

    #[test]
    fn bft_catches_up_from_echoes_alone() {
        let n = 4;
        let mut nodes = bft_cluster(n);
        let now = SimTime(50);
        // Node 3 never sees the proposal, only the other nodes' echoes.
        for sender in 0..3 {
            nodes[3].handle(
                NodeInput::Deliver {
                    from: NodeId::new(sender),
                    msg: WireMsg::BftVerify {
                        round: 1,
                        from: NodeId::new(sender),
                        entries: attrs(),
                    },
                },
                now,
            );
        }
        assert_eq!(nodes[3].committed.len(), 1);
        assert_eq!(nodes[3].committed[0].proposal.index, LogIndex(1));
        assert_eq!(nodes[3].committed[0].proposal.entries, attrs());
    }

    #[test]
    fn bft_commits_in_order_only() {
        let mut nodes = bft_cluster(4);
        let now = SimTime(50);
        // Echo supermajority for round 2 arrives before round 1 resolves.
        for sender in 0..3 {
            nodes[3].handle(
                NodeInput::Deliver {
                    from: NodeId::new(sender),
                    msg: WireMsg::BftVerify {
                        round: 2,
                        from: NodeId::new(sender),
                        entries: attrs(),
                    },
                },
                now,
            );
        }
        assert!(nodes[3].committed.is_empty(), "round 2 waits for round 1");
        for sender in 0..3 {
            nodes[3].handle(
                NodeInput::Deliver {
                    from: NodeId::new(sender),
                    msg: WireMsg::BftVerify {
                        round: 1,
                        from: NodeId::new(sender),
                        entries: attrs(),
                    },
                },
                now,
            );
        }
        assert_eq!(nodes[3].committed.len(), 2, "stashed round commits right after");
    }
}
