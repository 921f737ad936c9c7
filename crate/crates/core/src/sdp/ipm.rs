//! Infeasible-start primal-dual interior-point method (HKM direction with a
//! Mehrotra predictor-corrector and a merit backtracking safeguard).
//!
//! Slack form: `S_b = G_b - Σ z_k F_bk ⪰ 0` with `G_b = -shift I - F0`, and
//! `s_l = b_l - a_l·z ≥ 0` for linear rows (bounds are appended as rows).
//! The dual variables are `X_b ⪰ 0` and `y ≥ 0` with
//! `c_k + Σ_b <F_bk, X_b> + Σ_l a_lk y_l = 0`.

use nalgebra::{DMatrix, DVector};

use super::{
    add_sym_entries, check, BlockTerm, Entry, IterRecord, SdpConfig, SdpError, SdpProblem,
    SdpSolution, SdpStatus,
};

/// Infeasibility certificates must exclude every point with `|z|∞` below
/// this radius.
const CERT_RADIUS: f64 = 1e8;
const MAX_BACKTRACKS: usize = 40;

/// Stopping tolerances on relative primal and dual residuals and on the
/// relative gap.
#[derive(Clone, Copy)]
struct Tolerances {
    primal: f64,
    dual: f64,
    gap: f64,
}
struct LpRow {
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
}

struct Block<'a> {
    dim: usize,
    g: DMatrix<f64>,
    terms: &'a [BlockTerm],
}

#[derive(Clone)]
struct Iterate {
    z: Vec<f64>,
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
    y: Vec<f64>,
    sl: Vec<f64>,
}

struct Residual {
    rp: Vec<DMatrix<f64>>,
    rpl: Vec<f64>,
    rd: Vec<f64>,
    comp: f64,
    pnorm: f64,
    dnorm: f64,
    pobj: f64,
    dobj: f64,
}

impl Residual {
    fn merit(&self) -> f64 {
        self.comp + self.pnorm + self.dnorm
    }
}

/// tr(F M) for symmetric `F` given by upper-triangle entries.
fn trace_with(entries: &[Entry], m: &DMatrix<f64>) -> f64 {
    entries
        .iter()
        .map(|&(r, c, v)| {
            if r == c {
                v * m[(r, r)]
            } else {
                v * (m[(r, c)] + m[(c, r)])
            }
        })
        .sum()
}

fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| p * q).sum()
}

fn sym_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest `t` with `m + t d ⪰ 0` for `m ≻ 0`; `None` when `m` is not
/// positive definite.
fn max_step_psd(m: &DMatrix<f64>, d: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l();
    let left = l.solve_lower_triangular(d)?;
    let w = l.solve_lower_triangular(&left.transpose())?;
    let lmin = w
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Some(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

fn max_step_pos(v: &[f64], d: &[f64]) -> f64 {
    v.iter()
        .zip(d)
        .filter(|(_, &dv)| dv < 0.0)
        .map(|(&vv, &dv)| -vv / dv)
        .fold(f64::INFINITY, f64::min)
}

struct Engine<'a> {
    m: usize,
    c: &'a [f64],
    blocks: Vec<Block<'a>>,
    rows: Vec<LpRow>,
    nu: f64,
    g_scale: f64,
    c_scale: f64,
}

impl<'a> Engine<'a> {
    fn new(p: &'a SdpProblem) -> Self {
        let blocks: Vec<Block> = p
            .blocks
            .iter()
            .map(|b| {
                let mut g = DMatrix::from_diagonal_element(b.dim, b.dim, -b.shift);
                add_sym_entries(&mut g, &b.constant, -1.0);
                Block {
                    dim: b.dim,
                    g,
                    terms: &b.terms,
                }
            })
            .collect();
        let mut rows: Vec<LpRow> = p
            .linear
            .iter()
            .map(|r| LpRow {
                coeffs: r.coeffs.clone(),
                rhs: r.rhs,
            })
            .collect();
        for k in 0..p.n_vars {
            if p.upper[k].is_finite() {
                rows.push(LpRow {
                    coeffs: vec![(k, 1.0)],
                    rhs: p.upper[k],
                });
            }
            if p.lower[k].is_finite() {
                rows.push(LpRow {
                    coeffs: vec![(k, -1.0)],
                    rhs: -p.lower[k],
                });
            }
        }
        let nu = blocks.iter().map(|b| b.dim as f64).sum::<f64>() + rows.len() as f64;
        let g_norm = blocks
            .iter()
            .map(|b| b.g.norm_squared())
            .sum::<f64>()
            + rows.iter().map(|r| r.rhs * r.rhs).sum::<f64>();
        let c_norm = p.objective.iter().map(|v| v * v).sum::<f64>();
        Self {
            m: p.n_vars,
            c: &p.objective,
            blocks,
            rows,
            nu,
            g_scale: 1.0 + g_norm.sqrt(),
            c_scale: 1.0 + c_norm.sqrt(),
        }
    }

    fn initial(&self) -> Iterate {
        let mut fnorm = vec![0.0_f64; self.m];
        let mut x = Vec::new();
        let mut s = Vec::new();
        for b in &self.blocks {
            let n = b.dim as f64;
            let mut xi = 10f64.max(n.sqrt());
            let mut eta = 10f64.max(n.sqrt()).max(b.g.norm());
            for t in b.terms {
                let nrm = t
                    .entries
                    .iter()
                    .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
                    .sum::<f64>()
                    .sqrt();
                fnorm[t.var] = fnorm[t.var].max(nrm);
                xi = xi.max(n * (1.0 + self.c[t.var].abs()) / (1.0 + nrm));
                eta = eta.max(nrm);
            }
            x.push(DMatrix::from_diagonal_element(b.dim, b.dim, xi));
            s.push(DMatrix::from_diagonal_element(b.dim, b.dim, eta));
        }
        let mut y = Vec::with_capacity(self.rows.len());
        let mut sl = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let nrm = r.coeffs.iter().map(|(_, a)| a * a).sum::<f64>().sqrt();
            let cmax = r
                .coeffs
                .iter()
                .map(|&(k, _)| self.c[k].abs())
                .fold(0.0, f64::max);
            y.push(10f64.max((1.0 + cmax) / (1.0 + nrm)));
            sl.push(10f64.max(nrm).max(r.rhs.abs()));
        }
        Iterate {
            z: vec![0.0; self.m],
            x,
            s,
            y,
            sl,
        }
    }

    /// Σ_k dz_k F_bk for every block.
    fn apply(&self, dz: &[f64]) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|b| {
                let mut out = DMatrix::zeros(b.dim, b.dim);
                for t in b.terms {
                    let w = dz[t.var];
                    if w != 0.0 {
                        add_sym_entries(&mut out, &t.entries, w);
                    }
                }
                out
            })
            .collect()
    }

    fn apply_rows(&self, dz: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(k, a)| a * dz[k]).sum())
            .collect()
    }

    /// Σ_b tr(F_bk M_b) + Σ_l a_lk w_l.
    fn adjoint(&self, mats: &[DMatrix<f64>], w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (b, mb) in self.blocks.iter().zip(mats) {
            for t in b.terms {
                out[t.var] += trace_with(&t.entries, mb);
            }
        }
        for (r, &wl) in self.rows.iter().zip(w) {
            for &(k, a) in &r.coeffs {
                out[k] += a * wl;
            }
        }
        out
    }

    fn residual(&self, it: &Iterate) -> Residual {
        let fz = self.apply(&it.z);
        let rp: Vec<DMatrix<f64>> = self
            .blocks
            .iter()
            .zip(fz)
            .zip(&it.s)
            .map(|((b, f), s)| &b.g - f - s)
            .collect();
        let az = self.apply_rows(&it.z);
        let rpl: Vec<f64> = self
            .rows
            .iter()
            .zip(az)
            .zip(&it.sl)
            .map(|((r, a), s)| r.rhs - a - s)
            .collect();
        let adj = self.adjoint(&it.x, &it.y);
        let rd: Vec<f64> = adj.iter().zip(self.c).map(|(a, c)| a + c).collect();
        let comp = it
            .x
            .iter()
            .zip(&it.s)
            .map(|(x, s)| frob_inner(x, s))
            .sum::<f64>()
            + it.y.iter().zip(&it.sl).map(|(y, s)| y * s).sum::<f64>();
        let pnorm = (rp.iter().map(|m| m.norm_squared()).sum::<f64>()
            + rpl.iter().map(|v| v * v).sum::<f64>())
        .sqrt();
        let dnorm = rd.iter().map(|v| v * v).sum::<f64>().sqrt();
        let pobj: f64 = self.c.iter().zip(&it.z).map(|(c, z)| c * z).sum();
        let dobj = -self
            .blocks
            .iter()
            .zip(&it.x)
            .map(|(b, x)| frob_inner(&b.g, x))
            .sum::<f64>()
            - self.rows.iter().zip(&it.y).map(|(r, y)| r.rhs * y).sum::<f64>();
        Residual {
            rp,
            rpl,
            rd,
            comp,
            pnorm,
            dnorm,
            pobj,
            dobj,
        }
    }

    /// `tr(F_k X F_j S⁻¹)` summed over blocks, plus the diagonal LP scaling.
    fn schur(&self, it: &Iterate, sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.m, self.m);
        for ((b, x), si) in self.blocks.iter().zip(&it.x).zip(sinv) {
            let n = b.dim;
            let mut g = DMatrix::zeros(n, n);
            for (jj, tj) in b.terms.iter().enumerate() {
                g.fill(0.0);
                for &(r, c, v) in &tj.entries {
                    g.ger(v, &x.column(r), &si.column(c), 1.0);
                    if r != c {
                        g.ger(v, &x.column(c), &si.column(r), 1.0);
                    }
                }
                for tk in &b.terms[..=jj] {
                    h[(tk.var, tj.var)] += trace_with(&tk.entries, &g);
                }
            }
        }
        for (r, (&y, &s)) in self.rows.iter().zip(it.y.iter().zip(&it.sl)) {
            let w = y / s;
            for &(k, a) in &r.coeffs {
                for &(j, b) in &r.coeffs {
                    if k <= j {
                        h[(k, j)] += w * a * b;
                    }
                }
            }
        }
        for j in 0..self.m {
            for k in 0..j {
                h[(j, k)] = h[(k, j)];
            }
        }
        h
    }
}

struct Direction {
    dz: Vec<f64>,
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dy: Vec<f64>,
    dsl: Vec<f64>,
}

fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    let diag_max = h.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut reg = 1e-14 * diag_max;
    while reg <= 1e-6 * diag_max {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = hr.cholesky() {
            return Some(ch.solve(rhs));
        }
        reg *= 100.0;
    }
    None
}

struct Target<'a> {
    tau: f64,
    corr: Option<&'a Direction>,
}

fn direction(
    eng: &Engine,
    it: &Iterate,
    res: &Residual,
    sinv: &[DMatrix<f64>],
    h: &DMatrix<f64>,
    target: Target,
) -> Option<Direction> {
    let nb = eng.blocks.len();
    let mut rmat = Vec::with_capacity(nb);
    let mut corr_mats = Vec::with_capacity(nb);
    for i in 0..nb {
        let x = &it.x[i];
        let si = &sinv[i];
        let mut r = -x - x * &res.rp[i] * si;
        if target.tau != 0.0 {
            r += si * target.tau;
        }
        let corr = target.corr.map(|d| &d.dx[i] * &d.ds[i] * si);
        if let Some(cm) = &corr {
            r -= cm;
        }
        rmat.push(r);
        corr_mats.push(corr);
    }
    let nl = eng.rows.len();
    let mut rl = Vec::with_capacity(nl);
    let mut corr_l = Vec::with_capacity(nl);
    for l in 0..nl {
        let (y, s) = (it.y[l], it.sl[l]);
        let cl = target.corr.map_or(0.0, |d| d.dy[l] * d.dsl[l] / s);
        rl.push(target.tau / s - y - (y / s) * res.rpl[l] - cl);
        corr_l.push(cl);
    }
    let adj = eng.adjoint(&rmat, &rl);
    let rhs = DVector::from_iterator(eng.m, (0..eng.m).map(|k| -res.rd[k] - adj[k]));
    let dzv = solve_spd(h, &rhs)?;
    if dzv.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let dz: Vec<f64> = dzv.iter().copied().collect();
    let fdz = eng.apply(&dz);
    let mut dx = Vec::with_capacity(nb);
    let mut ds = Vec::with_capacity(nb);
    for i in 0..nb {
        let dsi = &res.rp[i] - &fdz[i];
        let x = &it.x[i];
        let si = &sinv[i];
        let mut dxi = -x - x * &dsi * si;
        if target.tau != 0.0 {
            dxi += si * target.tau;
        }
        if let Some(cm) = &corr_mats[i] {
            dxi -= cm;
        }
        sym_in_place(&mut dxi);
        dx.push(dxi);
        ds.push(dsi);
    }
    let adz = eng.apply_rows(&dz);
    let mut dsl = Vec::with_capacity(nl);
    let mut dy = Vec::with_capacity(nl);
    for l in 0..nl {
        let (y, s) = (it.y[l], it.sl[l]);
        let dsv = res.rpl[l] - adz[l];
        dy.push(target.tau / s - y - (y / s) * dsv - corr_l[l]);
        dsl.push(dsv);
    }
    Some(Direction { dz, dx, ds, dy, dsl })
}

fn max_step(it: &Iterate, d: &Direction) -> Option<f64> {
    let mut t = f64::INFINITY;
    for i in 0..it.x.len() {
        t = t.min(max_step_psd(&it.x[i], &d.dx[i])?);
        t = t.min(max_step_psd(&it.s[i], &d.ds[i])?);
    }
    t = t.min(max_step_pos(&it.y, &d.dy));
    t = t.min(max_step_pos(&it.sl, &d.dsl));
    Some(t)
}

fn advance(it: &Iterate, d: &Direction, t: f64) -> Iterate {
    Iterate {
        z: it.z.iter().zip(&d.dz).map(|(a, b)| a + t * b).collect(),
        x: it.x.iter().zip(&d.dx).map(|(a, b)| a + b * t).collect(),
        s: it.s.iter().zip(&d.ds).map(|(a, b)| a + b * t).collect(),
        y: it.y.iter().zip(&d.dy).map(|(a, b)| a + t * b).collect(),
        sl: it.sl.iter().zip(&d.dsl).map(|(a, b)| a + t * b).collect(),
    }
}

fn complementarity_after(it: &Iterate, d: &Direction, t: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..it.x.len() {
        let x = &it.x[i] + &d.dx[i] * t;
        let s = &it.s[i] + &d.ds[i] * t;
        total += frob_inner(&x, &s);
    }
    for l in 0..it.y.len() {
        total += (it.y[l] + t * d.dy[l]) * (it.sl[l] + t * d.dsl[l]);
    }
    total
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = m.clone().cholesky()?.inverse();
    Some(inv)
}

/// Solves `problem`; structural defects are errors, while solver outcomes
/// (including infeasibility) are reported through [`SdpStatus`].
///
/// When the main iteration stalls, a phase-I problem minimizing the uniform
/// constraint violation decides between infeasibility and numerical failure.
/// An infeasible verdict returns the least-violating point found.
pub fn solve(problem: &SdpProblem, cfg: &SdpConfig) -> Result<SdpSolution, SdpError> {
    problem.validate(cfg.max_block_dim)?;
    let tol = Tolerances {
        primal: 1e-9,
        dual: 1e-8,
        gap: cfg.gap_tol,
    };
    let mut sol = solve_core(problem, cfg, tol);
    if matches!(
        sol.status,
        SdpStatus::NumericalFailure | SdpStatus::IterationLimit
    ) {
        if let Some(z) = phase_one(problem, cfg) {
            let residuals = check(problem, &z);
            sol.max_residual = residuals.max_residual();
            sol.residuals = residuals;
            sol.objective_value = problem.objective.iter().zip(&z).map(|(c, v)| c * v).sum();
            sol.z = z;
            sol.status = SdpStatus::Infeasible;
        }
    }
    Ok(sol)
}

/// Minimizes `t ≥ -1` subject to every constraint relaxed by `t`; returns
/// the minimizer's `z` when the optimum is clearly positive.
fn phase_one(problem: &SdpProblem, cfg: &SdpConfig) -> Option<Vec<f64>> {
    let n = problem.n_vars;
    if problem.blocks.is_empty() && problem.linear.is_empty() {
        let bounds_ok = (0..n).all(|k| problem.lower[k] <= problem.upper[k]);
        return if bounds_ok { None } else { Some(vec![0.0; n]) };
    }
    let mut aux = SdpProblem::new(n + 1);
    aux.objective[n] = 1.0;
    aux.lower[n] = -1.0;
    for b in &problem.blocks {
        let mut b = b.clone();
        b.terms.push(BlockTerm {
            var: n,
            entries: (0..b.dim).map(|i| (i, i, -1.0)).collect(),
        });
        aux.blocks.push(b);
    }
    for row in &problem.linear {
        let mut coeffs = row.coeffs.clone();
        coeffs.push((n, -1.0));
        aux.linear.push(super::LinearIneq {
            coeffs,
            rhs: row.rhs,
        });
    }
    for k in 0..n {
        if problem.lower[k].is_finite() {
            aux.linear.push(super::LinearIneq {
                coeffs: vec![(k, -1.0), (n, -1.0)],
                rhs: -problem.lower[k],
            });
        }
        if problem.upper[k].is_finite() {
            aux.linear.push(super::LinearIneq {
                coeffs: vec![(k, 1.0), (n, -1.0)],
                rhs: problem.upper[k],
            });
        }
    }
    // Only the sign of the optimum matters here.
    let tol = Tolerances {
        primal: 1e-8,
        dual: 1e-5,
        gap: 1e-3,
    };
    let sol = solve_core(&aux, cfg, tol);
    let violation = sol.z[n];
    if sol.status == SdpStatus::Optimal && violation > 10.0 * cfg.feas_tol {
        let mut z = sol.z;
        z.truncate(n);
        Some(z)
    } else {
        None
    }
}

fn solve_core(problem: &SdpProblem, cfg: &SdpConfig, tol: Tolerances) -> SdpSolution {
    let eng = Engine::new(problem);
    let mut it = eng.initial();
    let mut trace = Vec::new();
    let mut best: Option<(f64, Iterate)> = None;
    let mut status = SdpStatus::IterationLimit;
    let mut res = eng.residual(&it);
    let mut iterations = 0;

    for iter in 0..=cfg.max_iter {
        iterations = iter;
        let pinf = res.pnorm / eng.g_scale;
        let dinf = res.dnorm / eng.c_scale;
        let denom = 1.0 + res.pobj.abs() + res.dobj.abs();
        let rel_gap = res.comp.max((res.pobj - res.dobj).abs()) / denom;
        let score = (pinf / tol.primal).max(dinf / tol.dual).max(rel_gap / tol.gap);
        if best.as_ref().map_or(true, |(b, _)| score <= *b) {
            best = Some((score, it.clone()));
        }
        if pinf <= tol.primal && dinf <= tol.dual && rel_gap <= tol.gap {
            let r = check(problem, &it.z);
            if r.max_residual() <= cfg.feas_tol {
                status = SdpStatus::Optimal;
                break;
            }
        }
        if infeasibility_certified(&eng, &it, &res) {
            status = SdpStatus::Infeasible;
            break;
        }
        if iter == cfg.max_iter {
            break;
        }

        let Some(sinv) = it.s.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let h = eng.schur(&it, &sinv);
        let mu = res.comp / eng.nu;
        let Some(pred) = direction(
            &eng,
            &it,
            &res,
            &sinv,
            &h,
            Target {
                tau: 0.0,
                corr: None,
            },
        ) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let Some(t_aff) = max_step(&it, &pred) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let t_aff = t_aff.min(1.0);
        let mu_aff = complementarity_after(&it, &pred, t_aff) / eng.nu;
        let sigma = if mu > 0.0 {
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };
        let Some(dir) = direction(
            &eng,
            &it,
            &res,
            &sinv,
            &h,
            Target {
                tau: sigma * mu,
                corr: Some(&pred),
            },
        ) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let Some(t_max) = max_step(&it, &dir) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let mut step = (cfg.step_fraction * t_max).min(1.0);
        let merit0 = res.merit();
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = advance(&it, &dir, step);
            let cres = eng.residual(&cand);
            if cres.merit() <= merit0 && cres.merit().is_finite() {
                accepted = Some((cand, cres));
                break;
            }
            step *= 0.5;
        }
        let Some((next, nres)) = accepted else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        trace.push(IterRecord {
            merit: nres.merit(),
            mu: nres.comp / eng.nu,
            primal_infeas: nres.pnorm / eng.g_scale,
            dual_infeas: nres.dnorm / eng.c_scale,
            rel_gap: nres.comp.max((nres.pobj - nres.dobj).abs())
                / (1.0 + nres.pobj.abs() + nres.dobj.abs()),
            step,
        });
        it = next;
        res = nres;
    }

    let final_it = match status {
        SdpStatus::Optimal | SdpStatus::Infeasible => it,
        _ => best.map(|(_, b)| b).unwrap_or(it),
    };
    let fres = eng.residual(&final_it);
    let residuals = check(problem, &final_it.z);
    let objective_value = fres.pobj;
    let gap = (fres.pobj - fres.dobj).abs() / (1.0 + fres.pobj.abs() + fres.dobj.abs());
    SdpSolution {
        max_residual: residuals.max_residual(),
        residuals,
        z: final_it.z,
        objective_value,
        dual_objective: fres.dobj,
        status,
        gap,
        iterations,
        trace,
    }
}

/// Farkas test: normalized dual iterate with `A*(X, y) ≈ 0` and negative
/// `<G, X> + b·y`, strong enough to rule out every point inside
/// [`CERT_RADIUS`].
fn infeasibility_certified(eng: &Engine, it: &Iterate, res: &Residual) -> bool {
    let scale: f64 = it.x.iter().map(|x| x.trace()).sum::<f64>() + it.y.iter().sum::<f64>();
    if !(scale > 0.0) {
        return false;
    }
    let lin: f64 = eng
        .blocks
        .iter()
        .zip(&it.x)
        .map(|(b, x)| frob_inner(&b.g, x))
        .sum::<f64>()
        + eng.rows.iter().zip(&it.y).map(|(r, y)| r.rhs * y).sum::<f64>();
    if lin >= 0.0 {
        return false;
    }
    let adj_l1: f64 = res.rd.iter().zip(eng.c).map(|(r, c)| (r - c).abs()).sum();
    -lin > CERT_RADIUS * adj_l1 && -lin / scale > 1e-10
}
