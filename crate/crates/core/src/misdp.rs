//! Exact actuator selection at fixed `(α, μ0, μ1)`: the product `ΓY` is
//! replaced by `Ξ` under big-M indicator rows and the resulting mixed-integer
//! program is solved by depth-first branch-and-bound.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::lmi::blocks::{lyapunov_expr, output_expr};
use crate::lmi::expr::{Affine, MatVar, VarLayout};
use crate::lmi::scaling::Scaling;
use crate::lmi::{
    assemble_m1, certify_fixed_with, ControllerSolution, SynthError, SynthesisProblem, EPS1,
};
use crate::sdp::{self, LinearIneq, SdpConfig, SdpStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct BigMConfig {
    pub big_m: f64,
    pub alpha: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub sdp: SdpConfig,
}

impl Default for BigMConfig {
    fn default() -> Self {
        Self {
            big_m: 1e3,
            alpha: 0.1,
            mu0: 1.0,
            mu1: 0.4,
            sdp: SdpConfig::default(),
        }
    }
}

impl BigMConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, v) in [("big_m", self.big_m), ("alpha", self.alpha), ("mu0", self.mu0), ("mu1", self.mu1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidProblem(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// `±(Ξ_ib − Y_ib) ≤ M(1 − Γ_i)` and `±Ξ_ib ≤ MΓ_i` for every entry, with
/// `Γ_i` the variable at index `gamma[i]`. `col_scale[b]` multiplies `M` in
/// column `b` (ones in unscaled coordinates).
pub fn bigm_rows(
    xi: &MatVar,
    y: &MatVar,
    gamma: &[usize],
    big_m: f64,
    col_scale: &[f64],
) -> Vec<LinearIneq> {
    let mut rows = Vec::new();
    for (i, &g) in gamma.iter().enumerate() {
        for (b, &s) in col_scale.iter().enumerate() {
            let (Some(x), Some(yy)) = (xi.index(i, b), y.index(i, b)) else {
                continue;
            };
            let m = big_m * s;
            for sign in [1.0, -1.0] {
                rows.push(LinearIneq {
                    coeffs: vec![(x, sign), (yy, -sign), (g, m)],
                    rhs: m,
                });
                rows.push(LinearIneq {
                    coeffs: vec![(x, sign), (g, -m)],
                    rhs: 0.0,
                });
            }
        }
    }
    rows
}

/// The first block with `ΓY` replaced by `Ξ`.
pub fn assemble_m1_xi(
    ss: &crate::model::StateSpace,
    p: &DMatrix<f64>,
    xi: &DMatrix<f64>,
    mu0: f64,
    alpha: f64,
) -> Result<DMatrix<f64>, SynthError> {
    assemble_m1(ss, p, xi, &vec![1.0; ss.n_u()], mu0, alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub fixed_zero: Vec<usize>,
    pub fixed_one: Vec<usize>,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeOutcome {
    Infeasible,
    Pruned,
    Branched,
    Incumbent,
    Integral,
    Failed,
}

impl std::fmt::Display for NodeOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NodeOutcome::Infeasible => "infeasible",
            NodeOutcome::Pruned => "pruned",
            NodeOutcome::Branched => "branched",
            NodeOutcome::Incumbent => "incumbent",
            NodeOutcome::Integral => "integral",
            NodeOutcome::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub node: BnbNode,
    /// Relaxation objective; infinite when the relaxation is infeasible.
    pub bound: f64,
    pub outcome: NodeOutcome,
    pub incumbent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub gamma: Vec<bool>,
    pub solution: ControllerSolution,
    pub node_count: usize,
    /// Largest `|Y|` entry of the optimal leaf relaxation, original coordinates.
    pub max_abs_y: f64,
    /// Set when `max_abs_y > 0.9 M`.
    pub m_too_small: bool,
    pub trace: Vec<TraceRow>,
}

impl BnbResult {
    pub fn trace_csv(&self) -> String {
        let set = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::from("node,parent,fixed_zero,fixed_one,bound,status,incumbent\n");
        for r in &self.trace {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.10e},{},{:.10e}",
                r.node.id,
                r.node.parent.map_or(String::from("-"), |p| p.to_string()),
                set(&r.node.fixed_zero),
                set(&r.node.fixed_one),
                r.bound,
                r.outcome,
                r.incumbent
            );
        }
        s
    }
}

struct Relaxation {
    status: SdpStatus,
    bound: f64,
    gamma: Vec<f64>,
    max_abs_y: f64,
}

/// Relaxation of a node: `Γ_i ∈ [0, 1]` for free actuators, constants for
/// fixed ones. `Ξ` replaces `ΓY` in every block; fixed-on rows have `Ξ = Y`,
/// fixed-off rows have neither.
fn relax(
    scaled: &SynthesisProblem,
    scaling: &Scaling,
    cfg: &BigMConfig,
    node: &BnbNode,
) -> Result<Relaxation, SynthError> {
    let ss = &scaled.ss;
    let (nx, nu, nd, np) = (ss.n_x(), ss.n_u(), ss.n_d(), ss.n_p());
    let state = |i: usize| {
        if node.fixed_one.contains(&i) {
            Some(true)
        } else if node.fixed_zero.contains(&i) {
            Some(false)
        } else {
            None
        }
    };
    let has_xi: Vec<bool> = (0..nu).map(|i| state(i) != Some(false)).collect();
    let free: Vec<usize> = (0..nu).filter(|&i| state(i).is_none()).collect();
    let free_mask: Vec<bool> = (0..nu).map(|i| state(i).is_none()).collect();

    let mut layout = VarLayout::new();
    let pv = layout.sym(nx);
    let xv = layout.mat(nu, nx, &has_xi);
    let yv = layout.mat(nu, nx, &free_mask);
    let gv: Vec<usize> = free.iter().map(|_| layout.scalar()).collect();
    let mu2 = layout.scalar();
    let p = Affine::sym_var(&pv);
    let xi = Affine::mat_var(&xv);
    let rho2 = scaled.rho * scaled.rho;
    let (alpha, mu0, mu1) = (cfg.alpha, cfg.mu0, cfg.mu1);

    let m1 = Affine::sym_blocks(&[
        vec![Some(lyapunov_expr(&ss.a, &p, alpha).sub(&xi.lmul(&ss.bu).plus_transpose()))],
        vec![
            Some(Affine::constant(ss.bd.transpose())),
            Some(Affine::identity(nd, -alpha * mu0)),
        ],
    ]);
    let m2 = Affine::sym_blocks(&[
        vec![Some(p.clone().scale(-mu1))],
        vec![None, Some(Affine::scalar_identity(mu2, np, -1.0))],
        vec![Some(output_expr(ss, &p, &xi)), None, Some(Affine::identity(np, -1.0))],
    ]);
    let m3 = Affine::sym_blocks(&[
        vec![Some(Affine::identity(1, -mu0 * rho2))],
        vec![
            Some(Affine::constant(DMatrix::from_column_slice(nx, 1, scaled.x0.as_slice()))),
            Some(p.clone().scale(-1.0)),
        ],
    ]);
    let m4 = Affine::sym_blocks(&[
        vec![Some(p.clone().scale(-scaled.u_max * scaled.u_max / rho2))],
        vec![Some(xi.clone().scale(mu0)), Some(Affine::identity(nu, -mu0))],
    ]);

    let mut prob = layout.problem();
    prob.blocks = [m1, m2, m3, m4].iter().map(|m| m.to_block(EPS1)).collect();
    prob.objective[mu2] = 1.0;
    let col_scale: Vec<f64> = scaling.t.iter().copied().collect();
    // Fixed-on rows: Ξ = Y, so only |Ξ| ≤ M survives.
    for i in (0..nu).filter(|&i| state(i) == Some(true)) {
        for b in 0..nx {
            let k = xv.index(i, b).expect("row present");
            prob.lower[k] = -cfg.big_m * col_scale[b];
            prob.upper[k] = cfg.big_m * col_scale[b];
        }
    }
    let mut free_xi = xv.clone();
    let mut free_y = yv.clone();
    for i in 0..nu {
        if state(i).is_some() {
            free_xi.row_offset[i] = None;
            free_y.row_offset[i] = None;
        }
    }
    let mut gamma_index = vec![usize::MAX; nu];
    for (&i, &k) in free.iter().zip(&gv) {
        gamma_index[i] = k;
        prob.lower[k] = 0.0;
        prob.upper[k] = 1.0;
        prob.objective[k] = scaled.alpha_gamma;
    }
    let rows_gamma: Vec<usize> = (0..nu).map(|i| if gamma_index[i] == usize::MAX { 0 } else { gamma_index[i] }).collect();
    prob.linear = bigm_rows(&free_xi, &free_y, &rows_gamma, cfg.big_m, &col_scale);
    if let Some(cap) = scaled.logistics().max_active {
        if !gv.is_empty() {
            prob.linear.push(LinearIneq {
                coeffs: gv.iter().map(|&k| (k, 1.0)).collect(),
                rhs: cap as f64 - node.fixed_one.len() as f64,
            });
        }
    }

    let sol = sdp::solve(&prob, &cfg.sdp).map_err(|e| SynthError::InvalidProblem(e.to_string()))?;
    let fixed_cost = mu0 * mu1 + scaled.alpha_gamma * node.fixed_one.len() as f64;
    let gamma = (0..nu)
        .map(|i| match state(i) {
            Some(on) => f64::from(u8::from(on)),
            None => sol.z[gamma_index[i]],
        })
        .collect();
    let xi_val = scaling.unscale_y(&xv.value(&sol.z));
    let y_val = scaling.unscale_y(&yv.value(&sol.z));
    Ok(Relaxation {
        status: sol.status,
        bound: sol.objective_value + fixed_cost,
        gamma,
        max_abs_y: xi_val.abs().max().max(y_val.abs().max()),
    })
}

const INTEGRAL_TOL: f64 = 1e-6;

/// Depth-first branch-and-bound over the selection, fix-to-one child first,
/// branching on the most fractional entry (lowest index on ties).
pub fn branch_and_bound(problem: &SynthesisProblem, cfg: &BigMConfig) -> Result<BnbResult, SynthError> {
    problem.validate()?;
    cfg.validate()?;
    let nu = problem.ss.n_u();
    let logistics = problem.logistics();
    let scaling = Scaling::for_model(&problem.ss);
    let scaled = scaling.problem(problem);

    // Each entry carries the bound inherited from its parent.
    let mut stack = vec![(
        BnbNode {
            id: 0,
            parent: None,
            fixed_zero: logistics.forced_off.clone(),
            fixed_one: logistics.forced_on.clone(),
            depth: 0,
        },
        f64::NEG_INFINITY,
    )];
    let mut next_id = 1;
    let mut trace = Vec::new();
    let mut best: Option<(Vec<bool>, ControllerSolution, f64)> = None;
    let mut root_infeasible = false;

    while let Some((node, inherited)) = stack.pop() {
        let incumbent = best.as_ref().map_or(f64::INFINITY, |b| b.1.objective);
        let mut row = TraceRow {
            node: node.clone(),
            bound: inherited,
            outcome: NodeOutcome::Infeasible,
            incumbent,
        };
        if logistics.max_active.is_some_and(|c| node.fixed_one.len() > c) {
            row.bound = f64::INFINITY;
            trace.push(row);
            continue;
        }
        if inherited >= incumbent - 1e-6 {
            row.outcome = NodeOutcome::Pruned;
            trace.push(row);
            continue;
        }
        let free: Vec<usize> = (0..nu)
            .filter(|i| !node.fixed_one.contains(i) && !node.fixed_zero.contains(i))
            .collect();
        let r = relax(&scaled, &scaling, cfg, &node)?;
        match r.status {
            SdpStatus::Optimal => {}
            SdpStatus::Infeasible => {
                row.bound = f64::INFINITY;
                root_infeasible |= node.id == 0;
                trace.push(row);
                continue;
            }
            _ => {
                // No trustworthy bound: keep the parent's and split on the
                // first free entry, or settle a leaf by direct certification.
                row.outcome = NodeOutcome::Failed;
                match free.first() {
                    Some(&i) => push_children(&mut stack, &node, i, inherited, &mut next_id),
                    None => {
                        let g: Vec<bool> = (0..nu).map(|i| node.fixed_one.contains(&i)).collect();
                        if let Ok(sol) = certify_fixed_with(problem, cfg.alpha, cfg.mu0, cfg.mu1, &g, &cfg.sdp) {
                            if sol.objective < incumbent {
                                row.outcome = NodeOutcome::Incumbent;
                                row.incumbent = sol.objective;
                                let y = sol.vars.y.abs().max();
                                best = Some((g, sol, y));
                            }
                        }
                    }
                }
                trace.push(row);
                continue;
            }
        }
        row.bound = r.bound.max(inherited);
        if row.bound >= incumbent - 1e-6 {
            row.outcome = NodeOutcome::Pruned;
            trace.push(row);
            continue;
        }
        let branch = free
            .iter()
            .map(|&i| (i, r.gamma[i].min(1.0 - r.gamma[i])))
            .filter(|(_, frac)| *frac > INTEGRAL_TOL)
            .fold(None, |acc: Option<(usize, f64)>, (i, f)| match acc {
                Some((_, bf)) if bf >= f => acc,
                _ => Some((i, f)),
            });
        match branch {
            None => {
                let g: Vec<bool> = r.gamma.iter().map(|v| *v > 0.5).collect();
                row.outcome = NodeOutcome::Integral;
                if let Ok(sol) = certify_fixed_with(problem, cfg.alpha, cfg.mu0, cfg.mu1, &g, &cfg.sdp) {
                    if sol.objective < incumbent {
                        row.outcome = NodeOutcome::Incumbent;
                        row.incumbent = sol.objective;
                        best = Some((g, sol, r.max_abs_y));
                    }
                }
                // An integral relaxation with free entries may still hide a
                // cheaper completion; fix the remaining free entries to settle it.
                if let Some(&i) = free.first() {
                    push_children(&mut stack, &node, i, row.bound, &mut next_id);
                    if row.outcome == NodeOutcome::Integral {
                        row.outcome = NodeOutcome::Branched;
                    }
                }
            }
            Some((i, _)) => {
                row.outcome = NodeOutcome::Branched;
                push_children(&mut stack, &node, i, row.bound, &mut next_id);
            }
        }
        trace.push(row);
    }

    match best {
        Some((gamma, solution, max_abs_y)) => Ok(BnbResult {
            gamma,
            solution,
            node_count: trace.len(),
            m_too_small: max_abs_y > 0.9 * cfg.big_m,
            max_abs_y,
            trace,
        }),
        None => {
            let reason = if root_infeasible {
                "root relaxation infeasible at the fixed scalars"
            } else {
                "no selection certified at the fixed scalars"
            };
            Err(SynthError::Logistics(reason.into()))
        }
    }
}

fn push_children(stack: &mut Vec<(BnbNode, f64)>, node: &BnbNode, i: usize, bound: f64, next_id: &mut usize) {
    let mut zero = node.clone();
    zero.fixed_zero.push(i);
    zero.fixed_zero.sort_unstable();
    let mut one = node.clone();
    one.fixed_one.push(i);
    one.fixed_one.sort_unstable();
    for (mut child, id) in [(zero, *next_id), (one, *next_id + 1)] {
        child.id = id;
        child.parent = Some(node.id);
        child.depth = node.depth + 1;
        stack.push((child, bound));
    }
    *next_id += 2;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub best: Vec<bool>,
    pub objective: f64,
    /// Every admissible selection with its certified objective, if any.
    pub candidates: Vec<(Vec<bool>, Option<f64>)>,
}

/// Certifies every admissible selection and returns the cheapest.
pub fn enumerate_oracle(problem: &SynthesisProblem, cfg: &BigMConfig) -> Result<Enumeration, SynthError> {
    problem.validate()?;
    cfg.validate()?;
    let nu = problem.ss.n_u();
    if nu > 12 {
        return Err(SynthError::InvalidProblem("enumeration is limited to 12 actuators".into()));
    }
    let logistics = problem.logistics();
    let mut candidates = Vec::new();
    for mask in 0u32..(1 << nu) {
        let g: Vec<bool> = (0..nu).map(|i| mask & (1 << i) != 0).collect();
        if logistics.admits(&g).is_err() {
            continue;
        }
        let obj = certify_fixed_with(problem, cfg.alpha, cfg.mu0, cfg.mu1, &g, &cfg.sdp)
            .ok()
            .map(|s| s.objective);
        candidates.push((g, obj));
    }
    let best = candidates
        .iter()
        .filter_map(|(g, o)| o.map(|o| (g, o)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        Some((g, o)) => Ok(Enumeration {
            best: g.clone(),
            objective: o,
            candidates: candidates.clone(),
        }),
        None => Err(SynthError::Logistics("no selection certified at the fixed scalars".into())),
    }
}
