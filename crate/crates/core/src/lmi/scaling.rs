//! Diagonal state scaling used to condition the synthesis programs.
//!
//! For mechanical models (positions then velocities, `ẋ_pos = x_vel`) the
//! velocity coordinates are divided by `s = √(max row sum |A_vel,pos|)`, a
//! natural-frequency estimate. Inequalities posed in the scaled coordinates
//! map back by a congruence with `diag(T⁻¹, I)`, and since every entry of
//! `T⁻¹` is at least one, a margin `⪯ −εI` in scaled coordinates implies the
//! same margin in the original ones.

use nalgebra::{DMatrix, DVector};

use crate::model::StateSpace;

use super::problem::SynthesisProblem;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Scaling {
    /// Diagonal of `T`, entries in (0, 1].
    pub t: DVector<f64>,
}

impl Scaling {
    pub fn for_model(ss: &StateSpace) -> Self {
        let n = ss.n_x();
        let mut t = DVector::from_element(n, 1.0);
        if n % 2 == 0 && n > 0 {
            let h = n / 2;
            let structured = (0..h).all(|i| {
                (0..n).all(|j| {
                    let expect = if j == h + i { 1.0 } else { 0.0 };
                    ss.a[(i, j)] == expect
                })
            });
            if structured {
                let stiff = (h..n)
                    .map(|i| (0..h).map(|j| ss.a[(i, j)].abs()).sum::<f64>())
                    .fold(0.0, f64::max);
                let s = stiff.sqrt().max(1.0);
                for i in h..n {
                    t[i] = 1.0 / s;
                }
            }
        }
        Self { t }
    }

    /// Model in coordinates `x̃ = T x`.
    pub fn model(&self, ss: &StateSpace) -> StateSpace {
        let t = &self.t;
        StateSpace {
            a: DMatrix::from_fn(ss.n_x(), ss.n_x(), |i, j| t[i] * ss.a[(i, j)] / t[j]),
            bu: DMatrix::from_fn(ss.n_x(), ss.n_u(), |i, j| t[i] * ss.bu[(i, j)]),
            bd: DMatrix::from_fn(ss.n_x(), ss.n_d(), |i, j| t[i] * ss.bd[(i, j)]),
            c: DMatrix::from_fn(ss.n_p(), ss.n_x(), |i, j| ss.c[(i, j)] / t[j]),
            d: ss.d.clone(),
        }
    }

    /// The same problem in scaled coordinates.
    pub fn problem(&self, p: &SynthesisProblem) -> SynthesisProblem {
        SynthesisProblem {
            ss: self.model(&p.ss),
            x0: self.state(&p.x0),
            ..p.clone()
        }
    }

    pub fn state(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.t)
    }

    /// `P = T⁻¹ P̃ T⁻¹`.
    pub fn unscale_p(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)] / (self.t[i] * self.t[j]))
    }

    /// `Y = Ỹ T⁻¹`.
    pub fn unscale_y(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] / self.t[j])
    }

    /// `P̃ = T P T`.
    #[cfg(test)]
    pub fn scale_p(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)] * self.t[i] * self.t[j])
    }
}
