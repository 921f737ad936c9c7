//! Command-line scenario runner: reads model, problem and method files,
//! runs the requested scenarios and writes reports and traces.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use thiserror::Error;

use esa_core::kv::ConfigError;
use esa_core::lmi::ProblemConfig;
use esa_core::model::ModelConfig;
use esa_core::scenario::{report_table, run_scenario, MethodConfig, RunReport, ScenarioError, ScenarioKind, ScenarioResult};

#[derive(Debug, Parser)]
#[command(name = "esa", version, about = "Robust L-infinity control with actuator selection for ESA networks")]
pub struct Cli {
    /// Model file (`key = value`); defaults to the 2 x 4 network.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Problem file; defaults to u_max = 250, rho = sqrt(n_d).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Method file with solver settings.
    #[arg(long)]
    pub method: Option<PathBuf>,
    /// Scenarios to run, e.g. `A,B,C`.
    #[arg(long, value_delimiter = ',', default_value = "A")]
    pub scenario: Vec<ScenarioKind>,
    /// Output directory for reports and traces.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Recorded in the run header; the scenarios themselves are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Solve sequentially (the only mode; kept for explicitness).
    #[arg(long, default_value_t = true)]
    pub sequential: bool,
    /// Write every state to the trace CSV.
    #[arg(long)]
    pub full_state: bool,
    /// Keep every n-th simulation sample in the trace CSV.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Write the default model, problem and method files to this directory and exit.
    #[arg(long)]
    pub write_defaults: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("model: {0}")]
    Model(String),
    #[error("scenario {scenario}: {source}")]
    Scenario { scenario: ScenarioKind, source: ScenarioError },
}

impl CliError {
    /// 2 infeasible, 3 numerical failure, 4 bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario { source, .. } => source.exit_code(),
            CliError::Io { .. } | CliError::Config { .. } | CliError::Model(_) => 4,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn load<T>(path: &Option<PathBuf>, parse: fn(&str) -> Result<T, ConfigError>, default: T) -> Result<T, CliError> {
    match path {
        None => Ok(default),
        Some(p) => parse(&read(p)?).map_err(|source| CliError::Config { path: p.clone(), source }),
    }
}

fn write_artifacts(dir: &Path, r: &ScenarioResult, cli: &Cli) -> Result<(), CliError> {
    let tag = format!("{}{}", r.report.scenario.letter(), r.report.period + 1);
    write(&dir.join(format!("trace_{tag}.csv")), &r.trace.csv(cli.stride, cli.full_state))?;
    if let Some(sca) = &r.sca {
        write(&dir.join(format!("sca_log_{tag}.csv")), &sca.log_csv())?;
    }
    if let Some(b) = &r.bounds {
        write(&dir.join(format!("selection_{tag}.json")), &format!("{b}\n"))?;
    }
    if let Some(bnb) = &r.bnb {
        write(&dir.join(format!("bnb_trace_{tag}.csv")), &bnb.trace_csv())?;
    }
    let rep = &r.report;
    let mut text = format!(
        "scenario = {}\nperiod = {}\nseed = {}\nalpha = {}\nmu = {}\nactive_count = {}\nactive_set = {:?}\n\
         wall_time_seconds = {:.3}\nlower = {}\nupper = {}\nmargin = {}\nmax_u = {}\nu_max = {}\n\
         spectral_abscissa = {}\ndisturbance_sup = {}\n",
        rep.scenario,
        rep.period + 1,
        cli.seed,
        rep.alpha,
        rep.mu,
        rep.active_count,
        rep.active_set,
        rep.wall_time_seconds,
        rep.lower,
        rep.upper,
        rep.margin,
        rep.max_u,
        rep.u_max,
        rep.abscissa,
        rep.disturbance_sup
    );
    if let Some(bnb) = &r.bnb {
        text += &format!(
            "nodes = {}\nmax_abs_y = {}\nm_too_small = {}\n",
            bnb.node_count, bnb.max_abs_y, bnb.m_too_small
        );
    }
    write(&dir.join(format!("report_{tag}.txt")), &text)
}

/// Runs the command; returns the reports that were produced.
pub fn run(cli: &Cli) -> Result<Vec<RunReport>, CliError> {
    if let Some(dir) = &cli.write_defaults {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        write(&dir.join("model.kv"), &ModelConfig::default().to_kv_string())?;
        write(&dir.join("problem.kv"), &ProblemConfig::default().to_kv_string())?;
        write(&dir.join("method.kv"), &MethodConfig::default().to_kv_string())?;
        return Ok(Vec::new());
    }
    let model = load(&cli.model, ModelConfig::parse, ModelConfig::default())?;
    let problem_cfg = load(&cli.problem, ProblemConfig::parse, ProblemConfig::default())?;
    let method = load(&cli.method, MethodConfig::parse, MethodConfig::default())?;
    let ss = model.state_space().map_err(|e| CliError::Model(e.to_string()))?;
    let problem = problem_cfg.bind(ss).map_err(|e| CliError::Model(e.to_string()))?;
    fs::create_dir_all(&cli.out).map_err(|source| CliError::Io { path: cli.out.clone(), source })?;

    let mut reports = Vec::new();
    let mut kinds = cli.scenario.clone();
    kinds.sort();
    kinds.dedup();
    for kind in kinds {
        let results = run_scenario(kind, &problem, &method)
            .map_err(|source| CliError::Scenario { scenario: kind, source })?;
        for r in &results {
            write_artifacts(&cli.out, r, cli)?;
            reports.push(r.report.clone());
        }
    }
    let (table, csv) = report_table(&reports);
    write(&cli.out.join("table.txt"), &table)?;
    write(&cli.out.join("table.csv"), &csv)?;
    print!("{table}");
    Ok(reports)
}
