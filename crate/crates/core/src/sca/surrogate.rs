//! Convex-concave pieces of the bilinear synthesis inequalities, evaluated
//! numerically. The SDP assembly in `build` encodes the same expressions.

use nalgebra::{DMatrix, DVector};

use crate::lmi::{SynthError, SynthVariables};
use crate::model::StateSpace;

fn bu_gamma(bu: &DMatrix<f64>, gamma: &[f64]) -> DMatrix<f64> {
    bu * DMatrix::from_diagonal(&DVector::from_column_slice(gamma))
}

/// `(𝒫, ℋ)` with `𝒫 = (BuΓ − Yᵀ)(BuΓ − Yᵀ)ᵀ` and `ℋ = (BuΓ + Yᵀ)(BuΓ + Yᵀ)ᵀ`,
/// so that `½𝒫 − ½ℋ = −BuΓY − YᵀΓBuᵀ`.
pub fn dc_split(
    bu: &DMatrix<f64>,
    gamma: &[f64],
    y: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>), SynthError> {
    if gamma.len() != bu.ncols() || y.shape() != (bu.ncols(), bu.nrows()) {
        return Err(SynthError::Dimension(format!(
            "Bu {}x{}, Gamma {}, Y {}x{}",
            bu.nrows(),
            bu.ncols(),
            gamma.len(),
            y.nrows(),
            y.ncols()
        )));
    }
    let bg = bu_gamma(bu, gamma);
    let minus = &bg - y.transpose();
    let plus = &bg + y.transpose();
    Ok((&minus * minus.transpose(), &plus * plus.transpose()))
}

/// First-order expansion of `ℋ(Γ, Y) = G Gᵀ`, `G = BuΓ + Yᵀ`, at `(Γ0, Y0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HLinearization {
    pub bu: DMatrix<f64>,
    /// `G0 = BuΓ0 + Y0ᵀ`.
    pub g0: DMatrix<f64>,
}

pub fn linearize_h(bu: &DMatrix<f64>, gamma0: &[f64], y0: &DMatrix<f64>) -> HLinearization {
    HLinearization {
        bu: bu.clone(),
        g0: bu_gamma(bu, gamma0) + y0.transpose(),
    }
}

impl HLinearization {
    /// `ℋ_l = G G0ᵀ + G0 Gᵀ − G0 G0ᵀ`; `ℋ − ℋ_l = (G − G0)(G − G0)ᵀ ⪰ 0`.
    pub fn eval(&self, gamma: &[f64], y: &DMatrix<f64>) -> DMatrix<f64> {
        let g = bu_gamma(&self.bu, gamma) + y.transpose();
        let cross = &g * self.g0.transpose();
        &cross + cross.transpose() - &self.g0 * self.g0.transpose()
    }
}

/// Convexified first block: `lifted` carries `½𝒫` through an appended
/// `−I` block, `reduced` is its Schur complement (the surrogate itself).
#[derive(Debug, Clone, PartialEq)]
pub struct M1Surrogate {
    pub lifted: DMatrix<f64>,
    pub reduced: DMatrix<f64>,
}

pub fn convexify_m1(
    ss: &StateSpace,
    vars: &SynthVariables,
    point: &HLinearization,
    alpha: f64,
) -> Result<M1Surrogate, SynthError> {
    let (nx, nu, nd) = (ss.n_x(), ss.n_u(), ss.n_d());
    let (pp, _) = dc_split(&ss.bu, &vars.gamma, &vars.y)?;
    let ap = &ss.a * &vars.p;
    let lyap = &ap + ap.transpose() + &vars.p * alpha;
    let base = lyap - point.eval(&vars.gamma, &vars.y) * 0.5;
    let base = (&base + base.transpose()) * 0.5;
    let corner = DMatrix::from_diagonal_element(nd, nd, -alpha * vars.mu0);

    let mut reduced = DMatrix::zeros(nx + nd, nx + nd);
    reduced.view_mut((0, 0), (nx, nx)).copy_from(&(&base + &pp * 0.5));
    reduced.view_mut((0, nx), (nx, nd)).copy_from(&ss.bd);
    reduced.view_mut((nx, 0), (nd, nx)).copy_from(&ss.bd.transpose());
    reduced.view_mut((nx, nx), (nd, nd)).copy_from(&corner);

    let lift = (bu_gamma(&ss.bu, &vars.gamma) - vars.y.transpose()) * std::f64::consts::FRAC_1_SQRT_2;
    let n = nx + nd + nu;
    let mut lifted = DMatrix::zeros(n, n);
    lifted.view_mut((0, 0), (nx, nx)).copy_from(&base);
    lifted.view_mut((0, nx), (nx, nd)).copy_from(&ss.bd);
    lifted.view_mut((nx, 0), (nd, nx)).copy_from(&ss.bd.transpose());
    lifted.view_mut((nx, nx), (nd, nd)).copy_from(&corner);
    lifted.view_mut((0, nx + nd), (nx, nu)).copy_from(&lift);
    lifted.view_mut((nx + nd, 0), (nu, nx)).copy_from(&lift.transpose());
    lifted
        .view_mut((nx + nd, nx + nd), (nu, nu))
        .copy_from(&-DMatrix::<f64>::identity(nu, nu));
    Ok(M1Surrogate { lifted, reduced })
}

/// Linearization point of the scalar bilinearities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPoint {
    pub mu0: f64,
    pub mu1: f64,
    /// Reciprocal stand-in for `1/μ0` in the transformed input block.
    pub nu: f64,
    pub p: DMatrix<f64>,
}

/// Over-estimators of `μ0μ1`, `−μ1P` and `νμ0` built from
/// `ab = ¼(a+b)² − ¼(a−b)²` with the concave part linearized.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSurrogate {
    pub point: ScalarPoint,
}

pub fn convexify_scalars(point: &ScalarPoint) -> ScalarSurrogate {
    ScalarSurrogate {
        point: point.clone(),
    }
}

/// `¼(a+b)² − ¼[2q0(a−b) − q0²]` with `q0 = a0 − b0`.
pub(crate) fn product_bound(a: f64, b: f64, a0: f64, b0: f64) -> f64 {
    let q0 = a0 - b0;
    0.25 * (a + b).powi(2) - 0.25 * (2.0 * q0 * (a - b) - q0 * q0)
}

impl ScalarSurrogate {
    /// Surrogate of `μ0μ1`.
    pub fn objective(&self, mu0: f64, mu1: f64) -> f64 {
        product_bound(mu0, mu1, self.point.mu0, self.point.mu1)
    }

    /// Surrogate of `−μ1P`: `¼(μ1I − P)² − ¼(QQ0 + Q0Q − Q0²)`, `Q = μ1I + P`.
    pub fn neg_mu1_p(&self, mu1: f64, p: &DMatrix<f64>) -> DMatrix<f64> {
        let n = p.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let r = &id * mu1 - p;
        let q = &id * mu1 + p;
        let q0 = &id * self.point.mu1 + &self.point.p;
        let m = (&r * &r) * 0.25 - (&q * &q0 + &q0 * &q - &q0 * &q0) * 0.25;
        (&m + m.transpose()) * 0.5
    }

    /// Surrogate of `νμ0`; the constraint `coupling ≤ 1` implies `νμ0 ≤ 1`.
    pub fn coupling(&self, nu: f64, mu0: f64) -> f64 {
        product_bound(nu, mu0, self.point.nu, self.point.mu0)
    }
}

/// The input block after the congruence `diag(I, μ0⁻¹ I)`, with `ν`
/// standing in for `1/μ0`: `[[−(u²/ρ²)P, Yᵀ], [Y, −νI]]`.
pub fn m4_congruence(p: &DMatrix<f64>, y: &DMatrix<f64>, nu: f64, u_max: f64, rho: f64) -> DMatrix<f64> {
    let (nu_dim, nx) = y.shape();
    let mut m = DMatrix::zeros(nx + nu_dim, nx + nu_dim);
    m.view_mut((0, 0), (nx, nx)).copy_from(&(p * -(u_max * u_max / (rho * rho))));
    m.view_mut((nx, 0), (nu_dim, nx)).copy_from(y);
    m.view_mut((0, nx), (nx, nu_dim)).copy_from(&y.transpose());
    m.view_mut((nx, nx), (nu_dim, nu_dim))
        .copy_from(&DMatrix::from_diagonal_element(nu_dim, nu_dim, -nu));
    m
}
