//! The three synthesis workflows: full actuation, SCA followed by slicing,
//! and exact selection by branch-and-bound. Each ends with a certified
//! controller and a closed-loop simulation.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::kv::{ConfigError, KvFile};
use crate::lmi::{certify_fixed, ControllerSolution, SynthError, SynthesisProblem};
use crate::misdp::{branch_and_bound, BigMConfig, BnbResult};
use crate::sca::{sca_run, M2Form, ScaConfig, ScaOutcome};
use crate::selection::{balanced_scalars, recover, BoundReport};
use crate::sdp::SdpStatus;
use crate::sim::{simulate, spectral_abscissa, verify_linf, LinfCheck, SimConfig, SimTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScenarioKind {
    /// Every actuator active.
    Full,
    /// Relaxed selection by SCA, then slicing.
    ScaSlice,
    /// Exact selection by branch-and-bound at fixed scalars.
    Misdp,
}

impl ScenarioKind {
    pub fn letter(&self) -> char {
        match self {
            ScenarioKind::Full => 'A',
            ScenarioKind::ScaSlice => 'B',
            ScenarioKind::Misdp => 'C',
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" | "full" => Ok(ScenarioKind::Full),
            "B" | "b" | "sca-slice" => Ok(ScenarioKind::ScaSlice),
            "C" | "c" | "misdp" => Ok(ScenarioKind::Misdp),
            other => Err(format!("unknown scenario {other:?} (expected A, B or C)")),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Solver settings for all scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub sca: ScaConfig,
    pub bigm: BigMConfig,
    pub sim: SimConfig,
}

impl Default for MethodConfig {
    /// `big_m = 1e4`: on the default instance every certificate needs
    /// gain-numerator entries near `1.8e3`.
    fn default() -> Self {
        Self {
            sca: ScaConfig::default(),
            bigm: BigMConfig {
                big_m: 1e4,
                ..BigMConfig::default()
            },
            sim: SimConfig::default(),
        }
    }
}

const METHOD_KEYS: &[&str] = &[
    "max_iter",
    "tol",
    "eps1",
    "init_mu0",
    "init_mu1",
    "alpha_grid",
    "m2_form",
    "big_m",
    "alpha",
    "mu0",
    "mu1",
    "t_end",
    "dt",
];

impl MethodConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let kv = KvFile::parse(text, METHOD_KEYS)?;
        let d = Self::default();
        let m2_form = match kv.raw("m2_form").map(str::trim) {
            None | Some("rescaled") => M2Form::Rescaled,
            Some("linearized") => M2Form::Linearized,
            Some(other) => {
                return Err(ConfigError::BadValue {
                    key: "m2_form".into(),
                    value: other.into(),
                    reason: "expected rescaled or linearized".into(),
                })
            }
        };
        let cfg = Self {
            sca: ScaConfig {
                max_iter: kv.get_or("max_iter", d.sca.max_iter)?,
                tol: kv.get_or("tol", d.sca.tol)?,
                eps1: kv.get_or("eps1", d.sca.eps1)?,
                init_mu0: kv.get_or("init_mu0", d.sca.init_mu0)?,
                init_mu1: kv.get_or("init_mu1", d.sca.init_mu1)?,
                alpha_grid: kv.get_list("alpha_grid")?.unwrap_or(d.sca.alpha_grid),
                m2_form,
                ..d.sca
            },
            bigm: BigMConfig {
                big_m: kv.get_or("big_m", d.bigm.big_m)?,
                alpha: kv.get_or("alpha", d.bigm.alpha)?,
                mu0: kv.get_or("mu0", d.bigm.mu0)?,
                mu1: kv.get_or("mu1", d.bigm.mu1)?,
                ..d.bigm
            },
            sim: SimConfig {
                t_end: kv.get_or("t_end", d.sim.t_end)?,
                dt: kv.get_or("dt", d.sim.dt)?,
                ..d.sim
            },
        };
        cfg.sca.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.bigm.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(cfg.sim.dt > 0.0 && cfg.sim.t_end >= cfg.sim.dt) {
            return Err(ConfigError::Invalid("need dt > 0 and t_end >= dt".into()));
        }
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        let grid: Vec<String> = self.sca.alpha_grid.iter().map(|a| format!("{a:?}")).collect();
        let form = match self.sca.m2_form {
            M2Form::Rescaled => "rescaled",
            M2Form::Linearized => "linearized",
        };
        format!(
            "max_iter = {}\ntol = {:?}\neps1 = {:?}\ninit_mu0 = {:?}\ninit_mu1 = {:?}\n\
             alpha_grid = {}\nm2_form = {form}\nbig_m = {:?}\nalpha = {:?}\nmu0 = {:?}\n\
             mu1 = {:?}\nt_end = {:?}\ndt = {:?}\n",
            self.sca.max_iter,
            self.sca.tol,
            self.sca.eps1,
            self.sca.init_mu0,
            self.sca.init_mu1,
            grid.join(", "),
            self.bigm.big_m,
            self.bigm.alpha,
            self.bigm.mu0,
            self.bigm.mu1,
            self.sim.t_end,
            self.sim.dt
        )
    }
}

/// A failed stage and its cause.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{stage}: {source}")]
pub struct ScenarioError {
    pub stage: &'static str,
    pub source: SynthError,
}

impl ScenarioError {
    /// 2 infeasible, 3 numerical failure, 4 bad input.
    pub fn exit_code(&self) -> i32 {
        match &self.source {
            SynthError::Infeasible { .. } | SynthError::Logistics(_) => 2,
            SynthError::Numerical { status, .. } if *status == SdpStatus::Infeasible => 2,
            SynthError::Numerical { .. } => 3,
            SynthError::Dimension(_) | SynthError::InvalidProblem(_) => 4,
        }
    }
}

fn stage(stage: &'static str) -> impl Fn(SynthError) -> ScenarioError {
    move |source| ScenarioError { stage, source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: ScenarioKind,
    pub period: usize,
    pub alpha: f64,
    pub mu: f64,
    pub active_count: usize,
    /// 1-based.
    pub active_set: Vec<usize>,
    pub selection: Vec<bool>,
    pub wall_time_seconds: f64,
    /// Relaxation value (SCA objective or root relaxation bound).
    pub lower: f64,
    /// Certified objective.
    pub upper: f64,
    /// `μρ − max_t ‖p(t)‖₂`.
    pub margin: f64,
    pub max_u: f64,
    pub u_max: f64,
    pub abscissa: f64,
    pub disturbance_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub report: RunReport,
    pub solution: ControllerSolution,
    pub trace: SimTrace,
    pub linf: LinfCheck,
    pub sca: Option<ScaOutcome>,
    pub bounds: Option<BoundReport>,
    pub bnb: Option<BnbResult>,
}

/// SCA iterates ordered by objective, best first.
fn ranked_iterates(sca: &ScaOutcome) -> Vec<&crate::sca::ScaIterate> {
    let mut its: Vec<_> = sca.runs.iter().filter_map(|r| r.last.as_ref()).collect();
    its.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    its
}

fn run_period(
    kind: ScenarioKind,
    problem: &SynthesisProblem,
    method: &MethodConfig,
    period: usize,
) -> Result<ScenarioResult, ScenarioError> {
    let start = Instant::now();
    let nu = problem.ss.n_u();
    let (solution, lower, sca, bounds, bnb) = match kind {
        ScenarioKind::Full => {
            let mut pinned = problem.clone();
            pinned.logistics[0].forced_on = (0..nu).collect();
            pinned.logistics[0].forced_off.clear();
            let out = sca_run(&pinned, &method.sca).map_err(stage("sca"))?;
            let mut last = None;
            let mut sol = None;
            for it in ranked_iterates(&out) {
                let (mu0, mu1) = balanced_scalars(it.vars.mu0, it.vars.mu1);
                match certify_fixed(problem, it.vars.alpha, mu0, mu1, &vec![true; nu]) {
                    Ok(s) => {
                        sol = Some(s);
                        break;
                    }
                    Err(e) => last = Some(e),
                }
            }
            let sol = sol.ok_or_else(|| stage("certify")(last.expect("at least one iterate")))?;
            (sol, out.lower, Some(out), None, None)
        }
        ScenarioKind::ScaSlice => {
            let out = sca_run(problem, &method.sca).map_err(stage("sca"))?;
            let mut last = None;
            let mut found = None;
            for it in ranked_iterates(&out) {
                match recover(problem, it, out.lower) {
                    Ok(r) => {
                        found = Some(r);
                        break;
                    }
                    Err(e) => last = Some(e),
                }
            }
            let (b, sol) = found.ok_or_else(|| stage("slice")(last.expect("at least one iterate")))?;
            (sol, out.lower, Some(out), Some(b), None)
        }
        ScenarioKind::Misdp => {
            let r = branch_and_bound(problem, &method.bigm).map_err(stage("branch-and-bound"))?;
            let lower = r.trace.first().map_or(f64::NAN, |t| t.bound);
            (r.solution.clone(), lower, None, None, Some(r))
        }
    };
    let trace = simulate(&problem.ss, &solution.k, &solution.gamma, &method.sim)
        .map_err(|e| stage("simulate")(SynthError::InvalidProblem(e.to_string())))?;
    let linf = verify_linf(&trace, solution.mu, problem.rho);
    let abscissa = spectral_abscissa(&problem.ss, &solution.k, &solution.gamma)
        .map_err(|e| stage("simulate")(SynthError::InvalidProblem(e.to_string())))?;
    let report = RunReport {
        scenario: kind,
        period,
        alpha: solution.vars.alpha,
        mu: solution.mu,
        active_count: solution.active_count(),
        active_set: solution.active_set(),
        selection: solution.gamma.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        lower,
        upper: solution.objective,
        margin: linf.margin,
        max_u: linf.max_u,
        u_max: problem.u_max,
        abscissa,
        disturbance_sup: trace.max_norm_d(),
    };
    Ok(ScenarioResult {
        report,
        solution,
        trace,
        linf,
        sca,
        bounds,
        bnb,
    })
}

/// Runs one scenario for every period of the problem.
pub fn run_scenario(
    kind: ScenarioKind,
    problem: &SynthesisProblem,
    method: &MethodConfig,
) -> Result<Vec<ScenarioResult>, ScenarioError> {
    problem.validate().map_err(stage("input"))?;
    (0..problem.periods)
        .map(|j| run_period(kind, &problem.period(j), method, j))
        .collect()
}

fn diag(sel: &[bool]) -> String {
    let v: Vec<&str> = sel.iter().map(|&b| if b { "1" } else { "0" }).collect();
    format!("{{{}}}", v.join(","))
}

/// Fixed-width table with the columns scenario, α, μ, ΣΓ_i, Δt(s), Diag(Γ),
/// followed by the same data as CSV. Rows are ordered by scenario.
pub fn report_table(reports: &[RunReport]) -> (String, String) {
    let mut rows: Vec<&RunReport> = reports.iter().collect();
    rows.sort_by_key(|r| (r.scenario, r.period));
    let mut table = format!(
        "{:<8} {:>6} {:>8} {:>8} {:>6} {:>9}  {}\n",
        "Scenario", "Period", "alpha", "mu", "active", "time(s)", "Diag(Gamma)"
    );
    let mut csv = String::from(
        "scenario,period,alpha,mu,active_count,active_set,wall_time_seconds,lower,upper,margin,max_u,abscissa\n",
    );
    for r in rows {
        let _ = writeln!(
            table,
            "{:<8} {:>6} {:>8.4} {:>8.4} {:>6} {:>9.1}  {}",
            r.scenario.letter(),
            r.period + 1,
            r.alpha,
            r.mu,
            r.active_count,
            r.wall_time_seconds,
            diag(&r.selection)
        );
        let set: Vec<String> = r.active_set.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{:.3},{},{},{},{},{}",
            r.scenario.letter(),
            r.period + 1,
            r.alpha,
            r.mu,
            r.active_count,
            set.join(" "),
            r.wall_time_seconds,
            r.lower,
            r.upper,
            r.margin,
            r.max_u,
            r.abscissa
        );
    }
    (table, csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(kind: ScenarioKind, sel: Vec<bool>) -> RunReport {
        RunReport {
            scenario: kind,
            period: 0,
            alpha: 0.1,
            mu: 0.5,
            active_count: sel.iter().filter(|b| **b).count(),
            active_set: sel.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i + 1).collect(),
            selection: sel,
            wall_time_seconds: 1.0,
            lower: 0.2,
            upper: 0.3,
            margin: 1.0,
            max_u: 2.0,
            u_max: 250.0,
            abscissa: -0.1,
            disturbance_sup: 1.0,
        }
    }

    #[test]
    fn table_rows_are_ordered() {
        let (t, csv) = report_table(&[
            report(ScenarioKind::Misdp, vec![true, false]),
            report(ScenarioKind::Full, vec![true, true]),
            report(ScenarioKind::ScaSlice, vec![false, true]),
        ]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with('A') && lines[2].starts_with('B') && lines[3].starts_with('C'));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn empty_selection_prints_zeros() {
        let (t, _) = report_table(&[report(ScenarioKind::Full, vec![false; 3])]);
        assert!(t.contains("{0,0,0}"));
        assert_eq!(t.lines().count(), 2);
    }

    #[test]
    fn method_config_round_trips() {
        let mut m = MethodConfig::default();
        m.sca.alpha_grid = vec![0.1, 0.3];
        m.sca.m2_form = M2Form::Linearized;
        m.bigm.big_m = 500.0;
        let back = MethodConfig::parse(&m.to_kv_string()).unwrap();
        assert_eq!(back, m);
        assert!(MethodConfig::parse("bogus = 1").is_err());
        assert!(MethodConfig::parse("m2_form = other").is_err());
        assert!(MethodConfig::parse("dt = 0").is_err());
    }

    #[test]
    fn scenario_letters_parse() {
        for (s, k) in [("A", ScenarioKind::Full), ("b", ScenarioKind::ScaSlice), ("misdp", ScenarioKind::Misdp)] {
            assert_eq!(s.parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("D".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn exit_codes() {
        let e = |source| ScenarioError { stage: "x", source };
        assert_eq!(e(SynthError::Logistics("x".into())).exit_code(), 2);
        assert_eq!(
            e(SynthError::Numerical { status: SdpStatus::NumericalFailure, residual: 1.0 }).exit_code(),
            3
        );
        assert_eq!(e(SynthError::Dimension("x".into())).exit_code(), 4);
    }
}
