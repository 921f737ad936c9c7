use std::fs;
use std::path::PathBuf;
use std::process::Command;

use clap::Parser;
use esa_cli::{run, Cli};

fn temp_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("esa-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn esa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_esa"))
}

#[test]
fn defaults_round_trip_through_files() {
    let dir = temp_dir("defaults");
    let cli = Cli::parse_from(["esa", "--write-defaults", dir.to_str().unwrap()]);
    assert!(run(&cli).unwrap().is_empty());
    for f in ["model.kv", "problem.kv", "method.kv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn small_network_runs_scenarios_a_and_c() {
    let dir = temp_dir("small");
    fs::write(dir.join("model.kv"), "columns = 1\nactuators_per_column = 2\n").unwrap();
    fs::write(dir.join("method.kv"), "alpha_grid = 0.1, 0.3\nt_end = 5\n").unwrap();
    let out = dir.join("out");
    let cli = Cli::parse_from([
        "esa",
        "--model",
        dir.join("model.kv").to_str().unwrap(),
        "--method",
        dir.join("method.kv").to_str().unwrap(),
        "--scenario",
        "C,A",
        "--out",
        out.to_str().unwrap(),
    ]);
    let reports = run(&cli).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.active_count, r.active_set.len());
        assert!(r.margin >= 0.0 && r.max_u <= r.u_max);
    }
    let table = fs::read_to_string(out.join("table.txt")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert!(rows[1].starts_with('A') && rows[2].starts_with('C'));
    for f in ["trace_A1.csv", "sca_log_A1.csv", "bnb_trace_C1.csv", "report_C1.txt", "table.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn bad_input_exits_with_four() {
    let dir = temp_dir("bad");
    fs::write(dir.join("model.kv"), "mass = 1\n").unwrap();
    let status = esa()
        .args(["--model", dir.join("model.kv").to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    let status = esa().args(["--scenario", "Z"]).status().unwrap();
    assert_eq!(status.code(), Some(4));
    let status = esa().arg("--help").output().unwrap().status;
    assert_eq!(status.code(), Some(0));
}

#[test]
fn vanishing_input_budget_exits_with_two() {
    let dir = temp_dir("infeasible");
    fs::write(dir.join("model.kv"), "columns = 1\nactuators_per_column = 1\n").unwrap();
    fs::write(dir.join("problem.kv"), "u_max = 1e-9\n").unwrap();
    let status = esa()
        .args([
            "--model",
            dir.join("model.kv").to_str().unwrap(),
            "--problem",
            dir.join("problem.kv").to_str().unwrap(),
            "--scenario",
            "C",
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
