//! Assembly of the convex surrogate program solved at each iteration.

use nalgebra::DMatrix;

use crate::lmi::blocks::{lyapunov_expr, output_expr};
use crate::lmi::expr::{Affine, MatVar, SymVar, VarLayout};
use crate::lmi::SynthesisProblem;
use crate::sdp::SdpProblem;

/// Treatment of the `−μ1P` product in the performance block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum M2Form {
    /// Exact congruence `[[−P, Wᵀ], [W, −μ1 I]]` with `W = CP − DY` and a
    /// separate bound `μ2 ≥ ε`.
    #[default]
    Rescaled,
    /// Convex-concave split of `−μ1P` around the current point.
    Linearized,
}

/// Linearization point in the coordinates the program is posed in.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Point {
    pub gamma: Vec<f64>,
    pub p: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub mu0: f64,
    pub mu1: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum GammaEntry {
    Fixed(f64),
    Free(usize),
}

impl GammaEntry {
    pub fn value(&self, z: &[f64]) -> f64 {
        match *self {
            GammaEntry::Fixed(v) => v,
            GammaEntry::Free(k) => z[k],
        }
    }
}

pub(crate) struct Surrogate {
    pub sdp: SdpProblem,
    pub p: SymVar,
    pub y: MatVar,
    pub gamma: Vec<GammaEntry>,
    pub mu0: usize,
    pub mu1: usize,
    pub mu2: usize,
    pub nu: usize,
}

impl Surrogate {
    pub fn point(&self, z: &[f64]) -> Point {
        Point {
            gamma: self.gamma.iter().map(|g| g.value(z)).collect(),
            p: self.p.value(z),
            y: self.y.value(z),
            mu0: z[self.mu0],
            mu1: z[self.mu1],
            nu: z[self.nu],
        }
    }
}

fn scalar(constant: f64, coeffs: &[(usize, f64)]) -> Affine {
    Affine::from_terms(
        DMatrix::from_element(1, 1, constant),
        coeffs.iter().map(|&(k, v)| (k, vec![(0, 0, v)])),
    )
}

/// `[[−t + ¼r0² − ½r0(a − b), ½(a + b)], [·, −1]] ⪯ 0`, i.e. the convexified
/// `t ≥ ab` with `r0 = a0 − b0`; `t` is a variable or the constant `t_const`.
fn product_block(a: usize, b: usize, r0: f64, t: Option<usize>, t_const: f64) -> Affine {
    let mut coeffs = vec![(a, -0.5 * r0), (b, 0.5 * r0)];
    let mut c = 0.25 * r0 * r0;
    match t {
        Some(k) => coeffs.push((k, -1.0)),
        None => c -= t_const,
    }
    Affine::sym_blocks(&[
        vec![Some(scalar(c, &coeffs))],
        vec![Some(scalar(0.0, &[(a, 0.5), (b, 0.5)])), Some(scalar(-1.0, &[]))],
    ])
}

/// Surrogate program for one iteration: minimize
/// `τ + μ2 + α_Γ Σ Γ_i` with `τ` over-estimating `μ0μ1`.
pub(crate) fn surrogate(
    problem: &SynthesisProblem,
    alpha: f64,
    point: &Point,
    form: M2Form,
    eps: f64,
) -> Surrogate {
    let ss = &problem.ss;
    let (nx, nu, nd, np) = (ss.n_x(), ss.n_u(), ss.n_d(), ss.n_p());
    let logistics = problem.logistics();
    let mut layout = VarLayout::new();
    let pv = layout.sym(nx);
    let has_row: Vec<bool> = (0..nu).map(|i| logistics.pinned(i) != Some(false)).collect();
    let yv = layout.mat(nu, nx, &has_row);
    let gamma: Vec<GammaEntry> = (0..nu)
        .map(|i| match logistics.pinned(i) {
            Some(on) => GammaEntry::Fixed(if on { 1.0 } else { 0.0 }),
            None => GammaEntry::Free(layout.scalar()),
        })
        .collect();
    let mu0 = layout.scalar();
    let mu1 = layout.scalar();
    let mu2 = layout.scalar();
    let nu_v = layout.scalar();
    let tau = layout.scalar();

    let p = Affine::sym_var(&pv);
    let y = Affine::mat_var(&yv);
    let mut bu_gamma = Affine::zeros(nx, nu);
    for (i, g) in gamma.iter().enumerate() {
        let mut col = DMatrix::zeros(nx, nu);
        col.column_mut(i).copy_from(&ss.bu.column(i));
        bu_gamma = match *g {
            GammaEntry::Fixed(v) => bu_gamma.add_constant(&(col * v)),
            GammaEntry::Free(k) => bu_gamma.add(&Affine::scalar_times(k, &col)),
        };
    }
    let all_fixed = gamma.iter().all(|g| matches!(g, GammaEntry::Fixed(_)));

    let lyap = lyapunov_expr(&ss.a, &p, alpha);
    let corner = Affine::scalar_identity(mu0, nd, -alpha);
    let bd_t = Some(Affine::constant(ss.bd.transpose()));
    let m1 = if all_fixed {
        let bg = bu_gamma.constant.clone();
        Affine::sym_blocks(&[
            vec![Some(lyap.sub(&y.lmul(&bg).plus_transpose()))],
            vec![bd_t, Some(corner)],
        ])
    } else {
        let g0 = DMatrix::from_fn(nx, nu, |i, j| ss.bu[(i, j)] * point.gamma[j]) + point.y.transpose();
        let g = bu_gamma.add(&y.transpose());
        let h_l = g
            .rmul(&g0.transpose())
            .plus_transpose()
            .add_constant(&-(&g0 * g0.transpose()));
        let lift = bu_gamma.sub(&y.transpose()).scale(std::f64::consts::FRAC_1_SQRT_2);
        Affine::sym_blocks(&[
            vec![Some(lyap.sub(&h_l.scale(0.5)))],
            vec![bd_t, Some(corner)],
            vec![Some(lift.transpose()), None, Some(Affine::identity(nu, -1.0))],
        ])
    };

    let w = output_expr(ss, &p, &y);
    let mut sdp = layout.problem();
    let mut blocks = vec![m1.to_block(eps)];
    match form {
        M2Form::Rescaled => {
            blocks.push(
                Affine::sym_blocks(&[
                    vec![Some(p.clone().scale(-1.0))],
                    vec![Some(w), Some(Affine::scalar_identity(mu1, np, -1.0))],
                ])
                .to_block(eps),
            );
            sdp.lower[mu2] = eps;
        }
        M2Form::Linearized => {
            let id = DMatrix::<f64>::identity(nx, nx);
            let q0 = &id * point.mu1 + &point.p;
            let q = p.add(&Affine::scalar_identity(mu1, nx, 1.0));
            let concave = q.rmul(&q0).plus_transpose().add_constant(&-(&q0 * &q0));
            let r = Affine::scalar_identity(mu1, nx, 0.5).sub(&p.clone().scale(0.5));
            blocks.push(
                Affine::sym_blocks(&[
                    vec![Some(concave.scale(-0.25))],
                    vec![None, Some(Affine::scalar_identity(mu2, np, -1.0))],
                    vec![Some(w), None, Some(Affine::identity(np, -1.0))],
                    vec![Some(r), None, None, Some(Affine::identity(nx, -1.0))],
                ])
                .to_block(eps),
            );
        }
    }

    let rho2 = problem.rho * problem.rho;
    blocks.push(
        Affine::sym_blocks(&[
            vec![Some(scalar(0.0, &[(mu0, -rho2)]))],
            vec![
                Some(Affine::constant(DMatrix::from_column_slice(nx, 1, problem.x0.as_slice()))),
                Some(p.clone().scale(-1.0)),
            ],
        ])
        .to_block(eps),
    );
    blocks.push(
        Affine::sym_blocks(&[
            vec![Some(p.clone().scale(-problem.u_max * problem.u_max / rho2))],
            vec![Some(y), Some(Affine::scalar_identity(nu_v, nu, -1.0))],
        ])
        .to_block(eps),
    );
    blocks.push(product_block(nu_v, mu0, point.nu - point.mu0, None, 1.0).to_block(0.0));
    blocks.push(product_block(mu0, mu1, point.mu0 - point.mu1, Some(tau), 0.0).to_block(0.0));
    sdp.blocks = blocks;

    for k in [mu0, mu1, nu_v] {
        sdp.lower[k] = 0.0;
    }
    sdp.objective[tau] = 1.0;
    sdp.objective[mu2] = 1.0;
    let free: Vec<usize> = gamma
        .iter()
        .filter_map(|g| match g {
            GammaEntry::Free(k) => Some(*k),
            GammaEntry::Fixed(_) => None,
        })
        .collect();
    for &k in &free {
        sdp.lower[k] = 0.0;
        sdp.upper[k] = 1.0;
        sdp.objective[k] = problem.alpha_gamma;
    }
    if let Some(cap) = logistics.max_active {
        let on = logistics.forced_on.len();
        sdp.linear.push(crate::sdp::LinearIneq {
            coeffs: free.iter().map(|&k| (k, 1.0)).collect(),
            rhs: cap.saturating_sub(on) as f64,
        });
    }

    Surrogate {
        sdp,
        p: pv,
        y: yv,
        gamma,
        mu0,
        mu1,
        mu2,
        nu: nu_v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_eigenvalue;
    use crate::lmi::SynthVariables;
    use crate::model::StateSpace;
    use crate::sca::surrogate::{convexify_m1, convexify_scalars, linearize_h, ScalarPoint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// The blocks handed to the solver agree with the numeric surrogates.
    #[test]
    fn program_blocks_match_numeric_surrogates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (nx, nu) = (4, 2);
        let ss = StateSpace {
            a: rand_mat(&mut rng, nx, nx),
            bu: rand_mat(&mut rng, nx, nu),
            bd: rand_mat(&mut rng, nx, nu),
            c: rand_mat(&mut rng, 3, nx),
            d: rand_mat(&mut rng, 3, nu),
        };
        let mut prob = SynthesisProblem::new(ss.clone(), 2.0, 0.1);
        prob.rho = 1.3;
        let r = rand_mat(&mut rng, nx, nx);
        let point = Point {
            gamma: vec![0.3, 0.8],
            p: &r * r.transpose() + DMatrix::identity(nx, nx),
            y: rand_mat(&mut rng, nu, nx),
            mu0: 1.5,
            mu1: 0.7,
            nu: 0.6,
        };
        let alpha = 0.2;
        for form in [M2Form::Rescaled, M2Form::Linearized] {
            let s = surrogate(&prob, alpha, &point, form, 0.0);
            let mut z = vec![0.0; s.sdp.n_vars];
            let r2 = rand_mat(&mut rng, nx, nx);
            let vars = SynthVariables {
                p: &r2 * r2.transpose() + DMatrix::identity(nx, nx),
                y: rand_mat(&mut rng, nu, nx),
                gamma: vec![0.5, 0.1],
                mu0: 1.1,
                mu1: 0.9,
                mu2: 0.2,
                alpha,
            };
            s.p.store(&vars.p, &mut z);
            s.y.store(&vars.y, &mut z);
            for (g, v) in s.gamma.iter().zip(&vars.gamma) {
                if let GammaEntry::Free(k) = g {
                    z[*k] = *v;
                }
            }
            z[s.mu0] = vars.mu0;
            z[s.mu1] = vars.mu1;
            z[s.mu2] = vars.mu2;
            z[s.nu] = 0.8;

            let lin = linearize_h(&ss.bu, &point.gamma, &point.y);
            let m1 = convexify_m1(&ss, &vars, &lin, alpha).unwrap();
            assert!((s.sdp.blocks[0].eval(&z) - &m1.lifted).abs().max() < 1e-12);

            if form == M2Form::Linearized {
                let sc = convexify_scalars(&ScalarPoint {
                    mu0: point.mu0,
                    mu1: point.mu1,
                    nu: point.nu,
                    p: point.p.clone(),
                });
                // Schur-reduce the lifted square to compare with the numeric piece.
                let block = s.sdp.blocks[1].eval(&z);
                let top = block.view((0, 0), (nx, nx)).into_owned();
                let lift = block.view((nx + 3 + 3, 0), (nx, nx)).into_owned();
                let reduced = top + lift.transpose() * &lift;
                assert!((reduced - sc.neg_mu1_p(vars.mu1, &vars.p)).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_blocks_encode_the_product_bounds() {
        let b = product_block(0, 1, 0.4, Some(2), 0.0);
        let (a0, b0) = (1.2, 0.8);
        for (a, bb) in [(1.2, 0.8), (2.0, 0.1), (0.3, 3.0)] {
            let bound = crate::sca::surrogate::product_bound(a, bb, a0, b0);
            let z_in = [a, bb, bound + 1e-9];
            let z_out = [a, bb, bound - 1e-6];
            assert!(max_eigenvalue(&b.eval(&z_in)) <= 1e-12);
            assert!(max_eigenvalue(&b.eval(&z_out)) > 0.0);
        }
    }
}
