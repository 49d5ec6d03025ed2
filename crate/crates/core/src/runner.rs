//! Batch executor for planned scenario grids.
//!
//! Every run is independent, so cells execute on a thread pool; results
//! come back in plan order regardless of scheduling, which keeps the
//! rendered CSV byte-identical across parallelism settings. A run that
//! fails (simulator error or invariant violation found by the auditor)
//! becomes a row with an error note instead of aborting the batch.

use rayon::prelude::*;

use crate::domain::LedgerEntry;
use crate::faults::BehaviorKind;
use crate::metrics;
use crate::scenario::PlannedRun;
use crate::sim;
use crate::trace;
use crate::verify;

#[derive(Debug, Clone)]
pub struct RunnerOptions {
    /// Worker threads; 0 picks the library default.
    pub parallelism: usize,
    /// Keep per-run score timelines for the timeline CSV.
    pub keep_timelines: bool,
    /// Record and render the full event trace of every run.
    pub collect_traces: bool,
    /// Keep final per-node logs so callers can persist ledgers.
    pub keep_logs: bool,
}

impl Default for RunnerOptions {
    fn default() -> Self {
        RunnerOptions {
            parallelism: 0,
            keep_timelines: false,
            collect_traces: false,
            keep_logs: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub commits: u64,
    pub duration: u64,
    pub total_sends: u64,
    pub drops: u64,
    pub qod: Option<f64>,
    pub qod_incomplete: bool,
    pub latency_median: Option<f64>,
    pub latency_p95: Option<f64>,
    pub throughput: f64,
    pub msgs_per_commit: Option<f64>,
    /// Nodes below threshold at the end, split by configured behavior.
    pub flagged_faulty: u32,
    pub flagged_honest: u32,
    pub faulty_nodes: u32,
    /// (time, node, score, faulty) per authoritative score change.
    pub timeline: Vec<(u64, u32, f64, bool)>,
    pub trace_lines: Option<String>,
    pub logs: Vec<Vec<LedgerEntry>>,
}

#[derive(Debug, Clone)]
pub struct CompletedRun {
    pub scenario: String,
    pub protocol: &'static str,
    pub nodes: u32,
    pub fault_fraction: f64,
    pub seed: u64,
    pub result: Result<RunSummary, String>,
}

pub fn execute(plan: &[PlannedRun], opts: &RunnerOptions) -> Vec<CompletedRun> {
    let work = || plan.par_iter().map(|p| run_one(p, opts)).collect();
    if opts.parallelism == 0 {
        return work();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism)
        .build()
        .expect("thread pool");
    pool.install(work)
}

pub fn run_one(planned: &PlannedRun, opts: &RunnerOptions) -> CompletedRun {
    let mut spec = planned.spec.clone();
    spec.collect_traces = opts.collect_traces;
    let result = match sim::run(&spec) {
        Err(e) => Err(e.to_string()),
        Ok(out) => {
            let violations = verify::check_run(&out);
            if violations.is_empty() {
                summarize(planned, &out, opts)
            } else {
                let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                Err(format!("invariants violated: {}", list.join("; ")))
            }
        }
    };
    CompletedRun {
        scenario: planned.scenario.clone(),
        protocol: planned.protocol.as_str(),
        nodes: planned.nodes,
        fault_fraction: planned.fault_fraction,
        seed: planned.seed,
        result,
    }
}

fn summarize(
    planned: &PlannedRun,
    out: &sim::RunOutcome,
    opts: &RunnerOptions,
) -> Result<RunSummary, String> {
    let faulty: Vec<bool> = planned
        .spec
        .behaviors
        .iter()
        .map(|b| b.kind != BehaviorKind::Honest)
        .collect();
    let is_faulty = |node: u32| faulty.get(node as usize).copied().unwrap_or(false);

    let (qod, qod_incomplete) = match metrics::qod(out) {
        Ok(q) => (Some(q.ratio), q.incomplete),
        Err(_) => (None, false),
    };
    let (latency_median, latency_p95) = match metrics::latency_stats(out) {
        Ok(st) => (Some(st.median), Some(st.p95)),
        Err(_) => (None, None),
    };
    let throughput = metrics::throughput(out).map_err(|e| e.to_string())?;
    let msgs_per_commit = metrics::msgs_per_round(out).ok();

    let mut flagged_faulty = 0;
    let mut flagged_honest = 0;
    for node in out.flagged_at.keys() {
        if is_faulty(node.0) {
            flagged_faulty += 1;
        } else {
            flagged_honest += 1;
        }
    }

    let timeline = if opts.keep_timelines {
        out.score_timeline
            .iter()
            .map(|(t, node, score)| (t.0, node.0, *score, is_faulty(node.0)))
            .collect()
    } else {
        Vec::new()
    };

    Ok(RunSummary {
        commits: out.commits.len() as u64,
        duration: out.duration,
        total_sends: out.total_sends,
        drops: out.drops,
        qod,
        qod_incomplete,
        latency_median,
        latency_p95,
        throughput,
        msgs_per_commit,
        flagged_faulty,
        flagged_honest,
        faulty_nodes: faulty.iter().filter(|f| **f).count() as u32,
        timeline,
        trace_lines: if opts.collect_traces {
            Some(trace::render_lines(&out.traces))
        } else {
            None
        },
        logs: if opts.keep_logs { out.logs.clone() } else { Vec::new() },
    })
}

pub const RUNS_CSV_HEADER: &str = "scenario,protocol,nodes,fault_fraction,seed,commits,\
duration_ms,qod,qod_incomplete,latency_median_ms,latency_p95_ms,throughput_cps,\
msgs_per_commit,total_sends,drops,faulty_nodes,flagged_faulty,flagged_honest,error";

/// One line per run, errors included, in plan order.
pub fn runs_csv(rows: &[CompletedRun]) -> String {
    let mut csv = String::new();
    csv.push_str(RUNS_CSV_HEADER);
    csv.push('\n');
    for row in rows {
        let head = format!(
            "{},{},{},{},{}",
            row.scenario, row.protocol, row.nodes, row.fault_fraction, row.seed
        );
        match &row.result {
            Ok(s) => {
                let line = format!(
                    "{head},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                    s.commits,
                    s.duration,
                    opt(s.qod),
                    if s.qod.is_some() { bool_str(s.qod_incomplete) } else { "" },
                    opt(s.latency_median),
                    opt(s.latency_p95),
                    s.throughput,
                    opt(s.msgs_per_commit),
                    s.total_sends,
                    s.drops,
                    s.faulty_nodes,
                    s.flagged_faulty,
                    s.flagged_honest,
                );
                csv.push_str(&line);
            }
            Err(e) => {
                csv.push_str(&format!(
                    "{head},,,,,,,,,,,,,{}",
                    csv_escape(e)
                ));
            }
        }
        csv.push('\n');
    }
    csv
}

/// Score trajectories of every run that kept them.
pub fn timelines_csv(rows: &[CompletedRun]) -> String {
    let mut csv = String::from("scenario,protocol,nodes,fault_fraction,seed,time_ms,node,score,faulty\n");
    for row in rows {
        let Ok(s) = &row.result else { continue };
        for (t, node, score, faulty) in &s.timeline {
            let line = format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.scenario,
                row.protocol,
                row.nodes,
                row.fault_fraction,
                row.seed,
                t,
                node,
                score,
                bool_str(*faulty)
            );
            csv.push_str(&line);
        }
    }
    csv
}

/// Growth-order fits of message counts against cluster size, one row per
/// (scenario, protocol) group with at least four distinct sizes.
pub fn complexity_csv(rows: &[CompletedRun]) -> String {
    let mut csv =
        String::from("scenario,protocol,samples,linear_coef,linear_r2,quadratic_coef,quadratic_r2,better\n");
    let mut groups: Vec<(String, &'static str)> = Vec::new();
    for row in rows {
        let key = (row.scenario.clone(), row.protocol);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    for (scenario, protocol) in groups {
        let samples: Vec<(u32, f64)> = rows
            .iter()
            .filter(|r| r.scenario == scenario && r.protocol == protocol)
            .filter_map(|r| {
                let s = r.result.as_ref().ok()?;
                Some((r.nodes, s.msgs_per_commit?))
            })
            .collect();
        let Ok(fit) = metrics::message_complexity(&samples) else {
            continue;
        };
        let better = if fit.linear.r_squared >= fit.quadratic.r_squared {
            "linear"
        } else {
            "quadratic"
        };
        let line = format!(
            "{},{},{},{},{},{},{},{}\n",
            scenario,
            protocol,
            samples.len(),
            fit.linear.coefficient,
            fit.linear.r_squared,
            fit.quadratic.coefficient,
            fit.quadratic.r_squared,
            better
        );
        csv.push_str(&line);
    }
    csv
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Error text goes in the last column; commas and quotes get CSV quoting.
fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
