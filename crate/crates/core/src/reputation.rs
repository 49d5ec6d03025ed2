//! Reputation model: a two-class normalized Naive Bayes over follower
//! detection verdicts, plus the per-node score bookkeeping driven by it.
//!
//! The supervisor owns the authoritative table. Everything here is pure so
//! the classifier can be exercised exhaustively against a brute-force oracle.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{clamp_score, DetectionReport, NodeId, Proposal, ProtocolParams};
use crate::rng::DetRng;

/// Whether a reporter's claimed detection agrees with the proposal under
/// judgement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Agree,
    Disagree,
}

/// Classification of a proposal after weighing all evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalOutcome {
    CorrectDetection,
    IncorrectDetection,
}

impl ProposalOutcome {
    /// The verdict a reporter should have produced if the classification is
    /// taken as ground truth.
    #[must_use]
    pub fn matching_verdict(self) -> Verdict {
        match self {
            ProposalOutcome::CorrectDetection => Verdict::Agree,
            ProposalOutcome::IncorrectDetection => Verdict::Disagree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReputationError {
    #[error("cluster size must be positive")]
    EmptyCluster,
    #[error("report key sequence does not match the proposal")]
    MalformedReport,
    #[error("prior must lie in [0, 1], got {0}")]
    PriorOutOfRange(f64),
    #[error("evidence is degenerate: both class numerators are zero")]
    DegenerateEvidence,
    #[error("reporter {0} is not in the reputation table")]
    UnknownReporter(NodeId),
    #[error("no eligible node to act as supervisor")]
    NoEligibleSupervisor,
}

/// Per-node detection history plus the current score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStats {
    pub correct_detections: u64,
    pub incorrect_detections: u64,
    pub detections_submitted: u64,
    pub proposals_participated: u64,
    pub score: f64,
}

impl NodeStats {
    #[must_use]
    pub fn fresh(r_init: f64) -> Self {
        NodeStats {
            correct_detections: 0,
            incorrect_detections: 0,
            detections_submitted: 0,
            proposals_participated: 0,
            score: r_init,
        }
    }
}

/// The supervisor's table. Cloned wholesale into handover snapshots; the
/// `classified_rounds` counter decides which of two copies is fresher.
#[derive(Debug, Clone, PartialEq)]
pub struct ReputationTable {
    stats: BTreeMap<NodeId, NodeStats>,
    pub classified_rounds: u64,
}

impl ReputationTable {
    pub fn bootstrap(cluster_size: u32, r_init: f64) -> Self {
        let stats = (0..cluster_size)
            .map(|i| (NodeId::new(i), NodeStats::fresh(r_init)))
            .collect();
        ReputationTable { stats, classified_rounds: 0 }
    }

    #[must_use]
    pub fn score(&self, node: NodeId) -> Option<f64> {
        self.stats.get(&node).map(|s| s.score)
    }

    #[must_use]
    pub fn stats(&self, node: NodeId) -> Option<&NodeStats> {
        self.stats.get(&node)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &NodeStats)> {
        self.stats.iter()
    }

    /// Nodes currently at or above the faithfulness threshold.
    pub fn faithful_nodes(&self, params: &ProtocolParams) -> BTreeSet<NodeId> {
        self.stats
            .iter()
            .filter(|(_, s)| params.is_faithful(s.score))
            .map(|(id, _)| *id)
            .collect()
    }

    fn stats_mut(&mut self, node: NodeId) -> Result<&mut NodeStats, ReputationError> {
        self.stats
            .get_mut(&node)
            .ok_or(ReputationError::UnknownReporter(node))
    }
}

/// Prior probability that the proposal is a valid detection: the share of the
/// cluster that turned in a report.
pub fn prior_valid(reports_received: usize, cluster_size: usize) -> Result<f64, ReputationError> {
    if cluster_size == 0 {
        return Err(ReputationError::EmptyCluster);
    }
    Ok(reports_received as f64 / cluster_size as f64)
}

/// Compares a report against the proposal it answers, attribute by attribute.
/// Agreement means at least half of the positions carry identical values.
/// The report must use the proposal's exact key sequence.
pub fn node_verdict(
    report: &DetectionReport,
    proposal: &Proposal,
) -> Result<Verdict, ReputationError> {
    if report.entries.len() != proposal.entries.len() {
        return Err(ReputationError::MalformedReport);
    }
    let mut matching = 0usize;
    for (r, p) in report.entries.iter().zip(proposal.entries.iter()) {
        if r.key != p.key {
            return Err(ReputationError::MalformedReport);
        }
        if r.value == p.value {
            matching += 1;
        }
    }
    if 2 * matching >= proposal.entries.len() {
        Ok(Verdict::Agree)
    } else {
        Ok(Verdict::Disagree)
    }
}

/// Laplace-smoothed likelihood pair for a node:
/// `(P(agree | valid), P(agree | invalid))`.
///
/// A history damaged by partial snapshots could report more correct
/// detections than submissions; the numerator is clamped so the probability
/// never leaves (0, 1).
#[must_use]
pub fn node_likelihoods(stats: &NodeStats) -> (f64, f64) {
    let numerator = (stats.correct_detections + 1).min(stats.detections_submitted + 1);
    let p_agree_valid = numerator as f64 / (stats.detections_submitted + 2) as f64;
    (p_agree_valid, 1.0 - p_agree_valid)
}

/// One reporter's contribution to the evidence vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceItem {
    pub reporter: NodeId,
    pub verdict: Verdict,
    pub p_agree_valid: f64,
    pub p_agree_invalid: f64,
}

impl EvidenceItem {
    #[must_use]
    fn likelihood_given_valid(&self) -> f64 {
        match self.verdict {
            Verdict::Agree => self.p_agree_valid,
            Verdict::Disagree => 1.0 - self.p_agree_valid,
        }
    }

    #[must_use]
    fn likelihood_given_invalid(&self) -> f64 {
        match self.verdict {
            Verdict::Agree => self.p_agree_invalid,
            Verdict::Disagree => 1.0 - self.p_agree_invalid,
        }
    }
}

/// Everything the classifier needs for one proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub prior: f64,
    pub items: Vec<EvidenceItem>,
}

/// Two-class normalized posterior `P(valid | evidence)`, computed in
/// log-space so long evidence vectors cannot underflow.
///
/// An empty evidence vector returns the prior exactly.
pub fn posterior_valid(evidence: &Evidence) -> Result<f64, ReputationError> {
    if !(0.0..=1.0).contains(&evidence.prior) {
        return Err(ReputationError::PriorOutOfRange(evidence.prior));
    }
    if evidence.items.is_empty() {
        return Ok(evidence.prior);
    }
    if evidence.prior == 0.0 {
        return Ok(0.0);
    }
    if evidence.prior == 1.0 {
        return Ok(1.0);
    }
    let mut log_valid = evidence.prior.ln();
    let mut log_invalid = (1.0 - evidence.prior).ln();
    for item in &evidence.items {
        log_valid += item.likelihood_given_valid().ln();
        log_invalid += item.likelihood_given_invalid().ln();
    }
    match (
        log_valid == f64::NEG_INFINITY,
        log_invalid == f64::NEG_INFINITY,
    ) {
        (true, true) => Err(ReputationError::DegenerateEvidence),
        (true, false) => Ok(0.0),
        (false, true) => Ok(1.0),
        (false, false) => Ok(1.0 / (1.0 + (log_invalid - log_valid).exp())),
    }
}

/// Threshold rule. The boundary classifies as a correct detection.
#[must_use]
pub fn classify_proposal(posterior: f64, params: &ProtocolParams) -> ProposalOutcome {
    if posterior >= params.posterior_threshold {
        ProposalOutcome::CorrectDetection
    } else {
        ProposalOutcome::IncorrectDetection
    }
}

/// One node's score movement from a classification round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreChange {
    pub node: NodeId,
    pub old_score: f64,
    pub new_score: f64,
}

/// Applies one classified round to the table.
///
/// Participation and submission counters are incremented first; the
/// correctness marks and score deltas then use the updated counters.
/// Reporters are rewarded or penalized against their submission history.
/// Expected reporters that stayed silent are penalized with their
/// participation count as the denominator, and the leader is treated the
/// same way: rewarded when its proposal classified as a correct detection,
/// penalized when it did not.
pub fn apply_reputation_updates(
    table: &mut ReputationTable,
    reputation_weight: f64,
    outcome: ProposalOutcome,
    verdicts: &BTreeMap<NodeId, Verdict>,
    expected_reporters: &BTreeSet<NodeId>,
    leader: NodeId,
) -> Result<Vec<ScoreChange>, ReputationError> {
    // Validate membership up front so a failure cannot leave the table
    // half-updated.
    for node in verdicts.keys().chain(expected_reporters.iter()) {
        if table.stats(*node).is_none() {
            return Err(ReputationError::UnknownReporter(*node));
        }
    }
    if table.stats(leader).is_none() {
        return Err(ReputationError::UnknownReporter(leader));
    }

    let mut changes = Vec::new();

    // Counters first: every actual reporter participated and submitted.
    for node in verdicts.keys() {
        let s = table.stats_mut(*node)?;
        s.proposals_participated += 1;
        s.detections_submitted += 1;
    }
    // Silent expected reporters participated without submitting.
    let silent: Vec<NodeId> = expected_reporters
        .iter()
        .filter(|n| !verdicts.contains_key(n))
        .copied()
        .collect();
    for node in &silent {
        table.stats_mut(*node)?.proposals_participated += 1;
    }
    // The leader participated by proposing.
    table.stats_mut(leader)?.proposals_participated += 1;

    let matching = outcome.matching_verdict();

    for (node, verdict) in verdicts {
        let s = table.stats_mut(*node)?;
        let old = s.score;
        if *verdict == matching {
            s.correct_detections += 1;
            let ratio = s.correct_detections as f64 / s.proposals_participated as f64;
            s.score = clamp_score(s.score + reputation_weight * ratio);
        } else {
            s.incorrect_detections += 1;
            let ratio = s.incorrect_detections as f64 / s.detections_submitted as f64;
            s.score = clamp_score(s.score - reputation_weight * ratio);
        }
        changes.push(ScoreChange { node: *node, old_score: old, new_score: s.score });
    }

    for node in &silent {
        let s = table.stats_mut(*node)?;
        let old = s.score;
        s.incorrect_detections += 1;
        let ratio = s.incorrect_detections as f64 / s.proposals_participated as f64;
        s.score = clamp_score(s.score - reputation_weight * ratio);
        changes.push(ScoreChange { node: *node, old_score: old, new_score: s.score });
    }

    {
        let s = table.stats_mut(leader)?;
        let old = s.score;
        match outcome {
            ProposalOutcome::CorrectDetection => {
                s.correct_detections += 1;
                let ratio = s.correct_detections as f64 / s.proposals_participated as f64;
                s.score = clamp_score(s.score + reputation_weight * ratio);
            }
            ProposalOutcome::IncorrectDetection => {
                s.incorrect_detections += 1;
                let ratio = s.incorrect_detections as f64 / s.proposals_participated as f64;
                s.score = clamp_score(s.score - reputation_weight * ratio);
            }
        }
        changes.push(ScoreChange { node: leader, old_score: old, new_score: s.score });
    }

    table.classified_rounds += 1;
    Ok(changes)
}

/// Samples the next supervisor from the eligible set, weighted by score.
/// Scores are clamped to at least 1, so every eligible node has positive
/// probability.
pub fn select_supervisor(
    table: &ReputationTable,
    eligible: &BTreeSet<NodeId>,
    rng: &mut DetRng,
) -> Result<NodeId, ReputationError> {
    let candidates: Vec<NodeId> = eligible
        .iter()
        .filter(|n| table.stats(**n).is_some())
        .copied()
        .collect();
    if candidates.is_empty() {
        return Err(ReputationError::NoEligibleSupervisor);
    }
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    let weights: Vec<f64> = candidates
        .iter()
        .map(|n| table.score(*n).unwrap_or(1.0).max(1.0))
        .collect();
    Ok(candidates[rng.pick_weighted(&weights)])
}
