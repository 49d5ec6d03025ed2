//! Run measurements: detection quality, consensus latency, throughput and
//! message-count scaling. All pure functions of a finished run, so
//! recomputation is bit-identical.

use crate::sim::RunOutcome;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("metric undefined: run committed no proposals")]
    NoProposals,
    #[error("metric undefined: run duration is zero")]
    ZeroDuration,
    #[error("fit needs at least 4 distinct cluster sizes, got {0}")]
    DegenerateGrid(usize),
}

/// Detection quality: time until the last injected Byzantine node was
/// flagged, over the total sim time spent reaching consensus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qod {
    pub ratio: f64,
    /// Set when some Byzantine node escaped detection; the ratio is then
    /// the 1.0 cap, not a measurement.
    pub incomplete: bool,
}

/// Per-proposal consensus latency: submission reaching the leader to the
/// first commit anywhere. One sample per committed proposal.
fn latency_samples(out: &RunOutcome) -> Vec<u64> {
    let mut samples = Vec::with_capacity(out.commits.len());
    for c in &out.commits {
        let Some(key) = c.truth_key else { continue };
        let Some(submitted) = out.submit_times.get(&key) else { continue };
        samples.push(c.first_at.0.saturating_sub(submitted.0));
    }
    samples
}

pub fn qod(out: &RunOutcome) -> Result<Qod, MetricError> {
    let samples = latency_samples(out);
    if samples.is_empty() {
        return Err(MetricError::NoProposals);
    }
    if out.byzantine_nodes.is_empty() {
        return Ok(Qod { ratio: 0.0, incomplete: false });
    }
    let mut last_flag: u64 = 0;
    for node in &out.byzantine_nodes {
        match out.flagged_at.get(node) {
            Some(t) => last_flag = last_flag.max(t.0),
            None => return Ok(Qod { ratio: 1.0, incomplete: true }),
        }
    }
    let total_consensus: u64 = samples.iter().sum();
    let ratio = if total_consensus == 0 {
        1.0
    } else {
        (last_flag as f64 / total_consensus as f64).min(1.0)
    };
    Ok(Qod { ratio, incomplete: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub median: f64,
    pub p95: f64,
    pub mean: f64,
    pub samples: usize,
}

pub fn latency_stats(out: &RunOutcome) -> Result<LatencyStats, MetricError> {
    let mut samples = latency_samples(out);
    if samples.is_empty() {
        return Err(MetricError::NoProposals);
    }
    samples.sort_unstable();
    let n = samples.len();
    let median = if n % 2 == 1 {
        samples[n / 2] as f64
    } else {
        (samples[n / 2 - 1] as f64 + samples[n / 2] as f64) / 2.0
    };
    // Nearest-rank percentile: smallest value with at least 95% of the
    // mass at or below it.
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    let p95 = samples[rank - 1] as f64;
    let mean = samples.iter().sum::<u64>() as f64 / n as f64;
    Ok(LatencyStats { median, p95, mean, samples: n })
}

/// Committed proposals per 1000 sim-time units.
pub fn throughput(out: &RunOutcome) -> Result<f64, MetricError> {
    if out.duration == 0 {
        return Err(MetricError::ZeroDuration);
    }
    Ok(out.commits.len() as f64 / out.duration as f64 * 1000.0)
}

/// Mean wire messages spent per committed proposal.
pub fn msgs_per_round(out: &RunOutcome) -> Result<f64, MetricError> {
    if out.commits.is_empty() {
        return Err(MetricError::NoProposals);
    }
    Ok(out.total_sends as f64 / out.commits.len() as f64)
}

/// A through-origin least-squares fit of per-round message count against
/// a power of the cluster size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub coefficient: f64,
    /// Uncentered R²; 1.0 means the model explains the counts exactly.
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityFit {
    /// messages ≈ a·N
    pub linear: Fit,
    /// messages ≈ b·N²
    pub quadratic: Fit,
}

fn fit_through_origin(points: &[(f64, f64)]) -> Fit {
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let coefficient = sxy / sxx;
    let ss_res: f64 = points.iter().map(|(x, y)| (y - coefficient * x).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|(_, y)| y * y).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Fit { coefficient, r_squared }
}

/// Fits per-round message counts sampled over a grid of cluster sizes.
/// `samples` pairs each cluster size with its measured messages per
/// committed round; repeated sizes are allowed and all enter the fit.
pub fn message_complexity(samples: &[(u32, f64)]) -> Result<ComplexityFit, MetricError> {
    let distinct: std::collections::BTreeSet<u32> = samples.iter().map(|(n, _)| *n).collect();
    if distinct.len() < 4 {
        return Err(MetricError::DegenerateGrid(distinct.len()));
    }
    let linear: Vec<(f64, f64)> = samples.iter().map(|(n, y)| (f64::from(*n), *y)).collect();
    let quadratic: Vec<(f64, f64)> =
        samples.iter().map(|(n, y)| (f64::from(*n) * f64::from(*n), *y)).collect();
    Ok(ComplexityFit {
        linear: fit_through_origin(&linear),
        quadratic: fit_through_origin(&quadratic),
    })
}
