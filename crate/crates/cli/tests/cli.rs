//! End-to-end checks of the porsim binary: argument handling, file
//! outputs, exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use porsim_core::ledger::Ledger;

const BIN: &str = env!("CARGO_BIN_EXE_porsim");

const SMOKE: &str = r#"
scenario = "cli_case"

[grid]
protocols = ["por"]
nodes = [4]
seeds = [3, 4, 5]

[workload]
proposals = 5
inter_arrival = 300

[stop]
max_time = 20000
target_commits = 5
"#;

fn porsim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn porsim")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("case.toml");
    fs::write(&path, SMOKE).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn presets_lists_every_builtin() {
    let out = porsim(&["presets"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 10, "{stdout}");
    for name in ["crash_tolerance", "byzantine_tolerance", "message_complexity"] {
        assert!(stdout.contains(name), "missing {name} in {stdout}");
    }
}

#[test]
fn validate_reports_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = porsim(&["validate", "--config", &cfg]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("cli_case ok: 3 runs"), "{stdout}");
}

#[test]
fn validate_rejects_unknown_keys_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, SMOKE.replace("[workload]", "mystery = 1\n[workload]")).unwrap();
    let out = porsim(&["validate", "--config", &path.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("parse failed"), "{stderr}");
}

#[test]
fn run_output_is_byte_identical_across_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let a = porsim(&["run", "--config", &cfg, "--out", &out_a.to_string_lossy(), "--parallelism", "1"]);
    let b = porsim(&["run", "--config", &cfg, "--out", &out_b.to_string_lossy(), "--parallelism", "4"]);
    assert!(a.status.success() && b.status.success());
    let csv_a = fs::read(out_a.join("runs.csv")).unwrap();
    let csv_b = fs::read(out_b.join("runs.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(String::from_utf8(csv_a).unwrap().lines().count(), 4);
}

#[test]
fn seed_override_shrinks_the_plan_to_one_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("o");
    let out = porsim(&[
        "run", "--config", &cfg,
        "--out", &out_dir.to_string_lossy(),
        "--seed-override", "99",
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("cli_case,por,4,0,99,"), "{csv}");
}

#[test]
fn run_needs_a_source() {
    let out = porsim(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("--config or --preset"), "{stderr}");
}

#[test]
fn unknown_preset_lists_alternatives() {
    let out = porsim(&["run", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("available"), "{stderr}");
    assert!(stderr.contains("latency_vs_size"), "{stderr}");
}

#[test]
fn output_dir_env_var_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("from_env");
    let out = Command::new(BIN)
        .args(["run", "--config", &cfg, "--seed-override", "3"])
        .env("PORSIM_OUTPUT_DIR", &out_dir)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("runs.csv").exists());
}

#[test]
fn ledger_files_decode_and_match_the_commit_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("o");
    let out = porsim(&[
        "run", "--config", &cfg,
        "--out", &out_dir.to_string_lossy(),
        "--seed-override", "3",
        "--ledgers",
    ]);
    assert!(out.status.success());
    let run_dir = out_dir.join("ledgers").join("cli_case_por_n4_f0_s3");
    let mut longest = 0;
    for i in 0..4 {
        let (ledger, report) = Ledger::open(run_dir.join(format!("node_{i}.ledger"))).unwrap();
        assert!(!report.recovered, "fresh files need no repair");
        longest = longest.max(ledger.entries().len());
        for (k, e) in ledger.entries().iter().enumerate() {
            assert_eq!(e.proposal.index.0, k as u64 + 1);
        }
    }
    assert_eq!(longest, 5, "some node holds the full committed log");
}
