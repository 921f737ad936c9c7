use nalgebra::DMatrix;

use crate::sdp::{self, SdpConfig, SdpStatus};

use super::blocks::{lyapunov_expr, output_expr, residual};
use super::expr::{Affine, VarLayout};
use super::scaling::Scaling;
use super::problem::{
    CertStatus, ControllerSolution, SynthError, SynthVariables, SynthesisProblem,
};
use super::{CERT_TOL, EPS1};

/// Fixes `(α, μ0, μ1, Γ)` and solves the resulting LMI program in
/// `(P, Y, μ2)`. Rows of `Y` belonging to deselected actuators are zero.
pub fn certify_fixed(
    problem: &SynthesisProblem,
    alpha: f64,
    mu0: f64,
    mu1: f64,
    gamma: &[bool],
) -> Result<ControllerSolution, SynthError> {
    certify_fixed_with(problem, alpha, mu0, mu1, gamma, &SdpConfig::default())
}

pub fn certify_fixed_with(
    problem: &SynthesisProblem,
    alpha: f64,
    mu0: f64,
    mu1: f64,
    gamma: &[bool],
    cfg: &SdpConfig,
) -> Result<ControllerSolution, SynthError> {
    problem.validate()?;
    let nu = problem.ss.n_u();
    if gamma.len() != nu {
        return Err(SynthError::Dimension(format!(
            "selection has {} entries, expected {nu}",
            gamma.len()
        )));
    }
    for (name, v) in [("alpha", alpha), ("mu0", mu0), ("mu1", mu1)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(SynthError::InvalidProblem(format!("{name} must be positive")));
        }
    }
    problem.logistics().admits(gamma)?;
    let scaling = Scaling::for_model(&problem.ss);
    let scaled = scaling.problem(problem);
    let g: Vec<f64> = gamma.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let fixed = solve_fixed(&scaled, alpha, mu0, mu1, &g, cfg)?;

    let vars = SynthVariables {
        p: scaling.unscale_p(&fixed.p),
        y: scaling.unscale_y(&fixed.y),
        gamma: g,
        mu0,
        mu1,
        mu2: fixed.mu2,
        alpha,
    };
    let res = residual(problem, &vars)?;
    let (worst, worst_val) = res.worst();
    if fixed.status == SdpStatus::Infeasible {
        return Err(SynthError::Infeasible {
            block: worst,
            residual: worst_val,
        });
    }
    let gain = vars.gain();
    let certified = worst_val <= CERT_TOL && res.neg_p < 0.0 && gain.is_some();
    let Some(k) = gain.filter(|_| certified) else {
        return Err(SynthError::Numerical {
            status: fixed.status,
            residual: worst_val,
        });
    };
    let active = gamma.iter().filter(|g| **g).count() as f64;
    Ok(ControllerSolution {
        k,
        gamma: gamma.to_vec(),
        mu: vars.mu(),
        objective: mu0 * mu1 + vars.mu2 + problem.alpha_gamma * active,
        status: CertStatus::Certified,
        vars,
        residuals: res,
        solver_status: fixed.status,
    })
}

/// Solution of the fixed-scalar program, in the coordinates it was posed in.
pub(crate) struct FixedSolve {
    pub p: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub mu2: f64,
    pub status: SdpStatus,
}

/// Minimizes `μ2` over `(P, Y, μ2)` with `(α, μ0, μ1, Γ)` fixed. Rows of `Y`
/// with `Γ_i = 0` are not decision variables.
pub(crate) fn solve_fixed(
    problem: &SynthesisProblem,
    alpha: f64,
    mu0: f64,
    mu1: f64,
    gamma: &[f64],
    cfg: &SdpConfig,
) -> Result<FixedSolve, SynthError> {
    let ss = &problem.ss;
    let (nx, nu, nd, np) = (ss.n_x(), ss.n_u(), ss.n_d(), ss.n_p());
    let active: Vec<bool> = gamma.iter().map(|g| *g != 0.0).collect();
    let mut layout = VarLayout::new();
    let pv = layout.sym(nx);
    let yv = layout.mat(nu, nx, &active);
    let mu2 = layout.scalar();
    let p = Affine::sym_var(&pv);
    let y = Affine::mat_var(&yv);
    let rho2 = problem.rho * problem.rho;
    let bu_gamma = DMatrix::from_fn(nx, nu, |i, j| ss.bu[(i, j)] * gamma[j]);

    let m1 = Affine::sym_blocks(&[
        vec![Some(lyapunov_expr(&ss.a, &p, alpha).sub(&y.lmul(&bu_gamma).plus_transpose()))],
        vec![
            Some(Affine::constant(ss.bd.transpose())),
            Some(Affine::identity(nd, -alpha * mu0)),
        ],
    ]);
    let m2 = Affine::sym_blocks(&[
        vec![Some(p.clone().scale(-mu1))],
        vec![None, Some(Affine::scalar_identity(mu2, np, -1.0))],
        vec![Some(output_expr(ss, &p, &y)), None, Some(Affine::identity(np, -1.0))],
    ]);
    let m3 = Affine::sym_blocks(&[
        vec![Some(Affine::identity(1, -mu0 * rho2))],
        vec![
            Some(Affine::constant(DMatrix::from_column_slice(nx, 1, problem.x0.as_slice()))),
            Some(p.clone().scale(-1.0)),
        ],
    ]);
    let m4 = Affine::sym_blocks(&[
        vec![Some(p.clone().scale(-problem.u_max * problem.u_max / rho2))],
        vec![Some(y.clone().scale(mu0)), Some(Affine::identity(nu, -mu0))],
    ]);

    let mut sdp_problem = layout.problem();
    sdp_problem.objective[mu2] = 1.0;
    sdp_problem.blocks = [m1, m2, m3, m4].iter().map(|m| m.to_block(EPS1)).collect();
    let sol = sdp::solve(&sdp_problem, cfg)
        .map_err(|e| SynthError::InvalidProblem(e.to_string()))?;
    Ok(FixedSolve {
        p: pv.value(&sol.z),
        y: yv.value(&sol.z),
        mu2: sol.z[mu2],
        status: sol.status,
    })
}
