//! Successive convex approximation of the integer-relaxed synthesis problem.
//!
//! The bilinear term `−BuΓY − YᵀΓBuᵀ` is split as `½𝒫 − ½ℋ` with both parts
//! Gram squares; `ℋ` is replaced by its tangent, which over-estimates `−ℋ`
//! in the PSD order. The scalar products `μ0μ1` and `νμ0` are treated the
//! same way, and each α on a grid gets its own majorize-minimize run.

mod build;
pub mod surrogate;

use std::fmt::Write as _;

use crate::lmi::certify::solve_fixed;
use crate::lmi::scaling::Scaling;
use crate::lmi::{residual, SynthError, SynthVariables, SynthesisProblem, EPS1};
use crate::sdp::{self, SdpConfig, SdpStatus};

pub use build::M2Form;
pub use surrogate::{
    convexify_m1, convexify_scalars, dc_split, linearize_h, m4_congruence, HLinearization,
    M1Surrogate, ScalarPoint, ScalarSurrogate,
};

use build::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct ScaConfig {
    pub max_iter: usize,
    /// Stop once the objective changes by less than this.
    pub tol: f64,
    pub eps1: f64,
    pub init_mu0: f64,
    pub init_mu1: f64,
    pub alpha_grid: Vec<f64>,
    /// Initial selection; all ones when `None`.
    pub gamma0: Option<Vec<f64>>,
    pub m2_form: M2Form,
    pub sdp: SdpConfig,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-2,
            eps1: EPS1,
            init_mu0: 30.0,
            init_mu1: 4.0,
            alpha_grid: vec![1e-3, 1e-2, 0.05, 0.1, 0.169, 0.3],
            gamma0: None,
            m2_form: M2Form::default(),
            sdp: SdpConfig::default(),
        }
    }
}

impl ScaConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidProblem(m.to_string()));
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.tol > 0.0 && self.eps1 > 0.0) {
            return bad("tol and eps1 must be positive");
        }
        if !(self.init_mu0 > 0.0 && self.init_mu1 > 0.0) {
            return bad("initial scalars must be positive");
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(*a > 0.0)) {
            return bad("alpha grid must be non-empty and positive");
        }
        if let Some(g) = &self.gamma0 {
            if g.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad("gamma0 entries must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// One accepted iterate, in original coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaIterate {
    pub vars: SynthVariables,
    /// `μ0μ1 + μ2 + α_Γ Σ Γ_i`.
    pub objective: f64,
    pub iteration: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    IterationLimit,
    /// Three consecutive non-optimal solves, or a step the descent check rejected.
    Stalled,
    /// No certificate at the initial scalars.
    InitInfeasible,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::IterationLimit => "iteration-limit",
            RunStatus::Stalled => "stalled",
            RunStatus::InitInfeasible => "init-infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRun {
    pub alpha: f64,
    pub status: RunStatus,
    /// Objective of the initial point followed by every accepted iterate.
    pub objectives: Vec<f64>,
    pub last: Option<ScaIterate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub alpha: f64,
    pub objective: f64,
    pub trace_gamma: f64,
    pub solver_status: SdpStatus,
    /// Worst block residual of the iterate against the true inequalities.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaOutcome {
    pub best: ScaIterate,
    /// Objective of `best`.
    pub lower: f64,
    pub runs: Vec<AlphaRun>,
    pub log: Vec<LogRow>,
}

impl ScaOutcome {
    pub fn log_csv(&self) -> String {
        let mut s = String::from("iter,alpha,objective,trace_gamma,solver_status,residual\n");
        for r in &self.log {
            let _ = writeln!(
                s,
                "{},{},{:.10e},{:.6},{},{:.3e}",
                r.iter, r.alpha, r.objective, r.trace_gamma, r.solver_status, r.residual
            );
        }
        s
    }
}

fn true_objective(problem: &SynthesisProblem, v: &SynthVariables) -> f64 {
    v.mu0 * v.mu1 + v.mu2 + problem.alpha_gamma * v.gamma.iter().sum::<f64>()
}

struct Run<'a> {
    problem: &'a SynthesisProblem,
    scaled: SynthesisProblem,
    scaling: Scaling,
    cfg: &'a ScaConfig,
}

impl Run<'_> {
    fn vars(&self, pt: &Point, mu2: f64, alpha: f64) -> SynthVariables {
        SynthVariables {
            p: self.scaling.unscale_p(&pt.p),
            y: self.scaling.unscale_y(&pt.y),
            gamma: pt.gamma.clone(),
            mu0: pt.mu0,
            mu1: pt.mu1,
            mu2,
            alpha,
        }
    }

    fn row(&self, iter: usize, alpha: f64, v: &SynthVariables, status: SdpStatus) -> LogRow {
        LogRow {
            iter,
            alpha,
            objective: true_objective(self.problem, v),
            trace_gamma: v.gamma.iter().sum(),
            solver_status: status,
            residual: residual(self.problem, v).map_or(f64::NAN, |r| r.worst().1),
        }
    }

    fn alpha_run(&self, alpha: f64, log: &mut Vec<LogRow>) -> Result<AlphaRun, SynthError> {
        let cfg = self.cfg;
        let nu = self.problem.ss.n_u();
        let logistics = self.problem.logistics();
        let mut gamma0 = cfg.gamma0.clone().unwrap_or_else(|| vec![1.0; nu]);
        if gamma0.len() != nu {
            return Err(SynthError::Dimension(format!("gamma0 has {} entries, expected {nu}", gamma0.len())));
        }
        for (i, g) in gamma0.iter_mut().enumerate() {
            if let Some(on) = logistics.pinned(i) {
                *g = if on { 1.0 } else { 0.0 };
            }
        }
        let init = solve_fixed(&self.scaled, alpha, cfg.init_mu0, cfg.init_mu1, &gamma0, &cfg.sdp)?;
        if init.status != SdpStatus::Optimal {
            return Ok(AlphaRun {
                alpha,
                status: RunStatus::InitInfeasible,
                objectives: Vec::new(),
                last: None,
            });
        }
        let mut point = Point {
            gamma: gamma0,
            p: init.p,
            y: init.y,
            mu0: cfg.init_mu0,
            mu1: cfg.init_mu1,
            nu: 1.0 / cfg.init_mu0,
        };
        let v0 = self.vars(&point, init.mu2, alpha);
        log.push(self.row(0, alpha, &v0, init.status));
        let mut objectives = vec![true_objective(self.problem, &v0)];
        let mut last = ScaIterate {
            objective: objectives[0],
            vars: v0,
            iteration: 0,
            converged: false,
        };
        let mut failures = 0;
        let mut status = RunStatus::IterationLimit;
        for k in 1..=cfg.max_iter {
            let s = build::surrogate(&self.scaled, alpha, &point, cfg.m2_form, cfg.eps1);
            let sol = sdp::solve(&s.sdp, &cfg.sdp).map_err(|e| SynthError::InvalidProblem(e.to_string()))?;
            let next = s.point(&sol.z);
            let v = self.vars(&next, sol.z[s.mu2], alpha);
            let obj = true_objective(self.problem, &v);
            let prev = last.objective;
            if !sol.is_optimal() {
                failures += 1;
                let usable = sol.max_residual <= cfg.sdp.feas_tol && obj <= prev + 1e-9;
                if !usable || failures >= 3 {
                    status = RunStatus::Stalled;
                    break;
                }
            } else {
                failures = 0;
            }
            if obj > prev + 1e-9 {
                status = RunStatus::Stalled;
                break;
            }
            log.push(self.row(k, alpha, &v, sol.status));
            objectives.push(obj);
            point = Point { nu: next.nu, ..next };
            let converged = (prev - obj).abs() < cfg.tol;
            last = ScaIterate {
                vars: v,
                objective: obj,
                iteration: k,
                converged,
            };
            if converged {
                status = RunStatus::Converged;
                break;
            }
        }
        Ok(AlphaRun {
            alpha,
            status,
            objectives,
            last: Some(last),
        })
    }
}

/// Runs the convex-concave procedure for every α on the grid and returns
/// the best final iterate. Its objective bounds the relaxed optimum from
/// above and equals it at a fixed point of the scheme.
pub fn sca_run(problem: &SynthesisProblem, cfg: &ScaConfig) -> Result<ScaOutcome, SynthError> {
    problem.validate()?;
    cfg.validate()?;
    let scaling = Scaling::for_model(&problem.ss);
    let run = Run {
        problem,
        scaled: scaling.problem(problem),
        scaling,
        cfg,
    };
    let mut log = Vec::new();
    let mut runs = Vec::new();
    for &alpha in &cfg.alpha_grid {
        runs.push(run.alpha_run(alpha, &mut log)?);
    }
    let best = runs
        .iter()
        .filter_map(|r| r.last.as_ref())
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .cloned();
    match best {
        Some(best) => Ok(ScaOutcome {
            lower: best.objective,
            best,
            runs,
            log,
        }),
        None => Err(SynthError::InvalidProblem(format!(
            "surrogate infeasible at the initial point for every alpha (first: {}); \
             increase init_mu0 or init_mu1",
            cfg.alpha_grid[0]
        ))),
    }
}
