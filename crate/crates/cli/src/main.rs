//! Command-line front end: expands scenario grids, drives the batch
//! runner, and writes result tables under an output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use porsim_core::ledger::Ledger;
use porsim_core::runner::{self, CompletedRun, RunnerOptions};
use porsim_core::scenario::{self, ScenarioConfig, SeedSpec};

#[derive(Parser)]
#[command(name = "porsim", version, about = "Reputation-gated consensus simulator and experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a scenario grid and write result tables.
    Run(RunArgs),
    /// Parse and check a scenario file, reporting the planned grid.
    Validate {
        /// Scenario TOML file.
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in scenario presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario name; see the presets subcommand.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory. Defaults to $PORSIM_OUTPUT_DIR, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the scenario's seed list with this single seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Also write per-run score timelines (reputation.csv).
    #[arg(long)]
    timelines: bool,
    /// Also write one event-trace file per run under traces/.
    #[arg(long)]
    traces: bool,
    /// Also persist every node's final log as a ledger file under ledgers/.
    #[arg(long)]
    ledgers: bool,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("porsim: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Validate { config } => cmd_validate(&config),
        Cmd::Presets => {
            for (name, _) in scenario::PRESETS {
                let cfg = scenario::preset(name).expect("presets are self-tested");
                println!(
                    "{name}: protocols [{}], {} runs",
                    cfg.grid.protocols.join(", "),
                    cfg.plan().len()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_validate(config: &Path) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))?;
    let cfg = ScenarioConfig::from_toml(&text)?;
    let plan = cfg.plan();
    println!(
        "scenario {} ok: {} runs ({} protocols x {} sizes x {} fractions x {} seeds)",
        cfg.scenario,
        plan.len(),
        cfg.grid.protocols.len(),
        cfg.grid.nodes.len(),
        cfg.grid.fault_fraction.len(),
        cfg.grid.seeds.expand().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = load_scenario(args.config.as_deref(), args.preset.as_deref())?;
    if let Some(seed) = args.seed_override {
        cfg.grid.seeds = SeedSpec::List(vec![seed]);
    }
    let plan = cfg.plan();
    let opts = RunnerOptions {
        parallelism: args.parallelism,
        keep_timelines: args.timelines,
        collect_traces: args.traces,
        keep_logs: args.ledgers,
    };
    let rows = runner::execute(&plan, &opts);

    let out_dir = args.out.unwrap_or_else(default_out_dir);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let runs_path = out_dir.join("runs.csv");
    fs::write(&runs_path, runner::runs_csv(&rows))
        .with_context(|| format!("writing {}", runs_path.display()))?;
    println!("wrote {}", runs_path.display());

    let complexity = runner::complexity_csv(&rows);
    if complexity.lines().count() > 1 {
        let path = out_dir.join("complexity.csv");
        fs::write(&path, complexity)?;
        println!("wrote {}", path.display());
    }
    if args.timelines {
        let path = out_dir.join("reputation.csv");
        fs::write(&path, runner::timelines_csv(&rows))?;
        println!("wrote {}", path.display());
    }
    if args.traces {
        write_traces(&out_dir, &rows)?;
    }
    if args.ledgers {
        write_ledgers(&out_dir, &rows)?;
    }

    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    for row in rows.iter().filter(|r| r.result.is_err()) {
        eprintln!("failed: {}: {}", run_stem(row), row.result.as_ref().unwrap_err());
    }
    println!("{} runs, {failed} failed", rows.len());
    Ok(if failed == rows.len() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn load_scenario(config: Option<&Path>, preset: Option<&str>) -> anyhow::Result<ScenarioConfig> {
    match (config, preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(ScenarioConfig::from_toml(&text)?)
        }
        (None, Some(name)) => Ok(scenario::preset(name)?),
        (None, None) => bail!("one of --config or --preset is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("PORSIM_OUTPUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Filesystem-safe identifier for one run, shared by traces and ledgers.
fn run_stem(row: &CompletedRun) -> String {
    format!(
        "{}_{}_n{}_f{}_s{}",
        row.scenario,
        row.protocol,
        row.nodes,
        format!("{}", row.fault_fraction).replace('.', "p"),
        row.seed
    )
}

fn write_traces(out_dir: &Path, rows: &[CompletedRun]) -> anyhow::Result<()> {
    let dir = out_dir.join("traces");
    fs::create_dir_all(&dir)?;
    let mut written = 0u32;
    for row in rows {
        let Ok(s) = &row.result else { continue };
        let Some(lines) = &s.trace_lines else { continue };
        fs::write(dir.join(format!("{}.trace", run_stem(row))), lines)?;
        written += 1;
    }
    println!("wrote {written} trace files under {}", dir.display());
    Ok(())
}

fn write_ledgers(out_dir: &Path, rows: &[CompletedRun]) -> anyhow::Result<()> {
    let base = out_dir.join("ledgers");
    let mut written = 0u32;
    for row in rows {
        let Ok(s) = &row.result else { continue };
        let dir = base.join(run_stem(row));
        fs::create_dir_all(&dir)?;
        for (i, log) in s.logs.iter().enumerate() {
            let mut ledger = Ledger::create(dir.join(format!("node_{i}.ledger")))
                .with_context(|| format!("ledger for {} node {i}", run_stem(row)))?;
            for entry in log {
                ledger.append(entry)?;
            }
        }
        written += 1;
    }
    println!("wrote ledgers for {written} runs under {}", base.display());
    Ok(())
}
