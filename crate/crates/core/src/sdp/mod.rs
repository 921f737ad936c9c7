//! Small dense semidefinite programs in inequality form.
//!
//! ```text
//! minimize    c·z
//! subject to  F0_b + Σ_k z_k F_bk ⪯ -shift_b I      for every block b
//!             a_l·z ≤ b_l                           for every linear row l
//!             lower_k ≤ z_k ≤ upper_k
//! ```
//!
//! Matrix-valued decision variables are vectorized by the caller; this module
//! only sees scalars. Coefficient matrices are stored as upper-triangle
//! triplets.

mod ipm;
mod text;

use nalgebra::DMatrix;
use thiserror::Error;

pub use ipm::solve;
pub use text::{dump, load};

use crate::linalg::max_eigenvalue;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Upper-triangle entry `(row, col, value)` with `row <= col`.
pub type Entry = (usize, usize, f64);

/// Coefficient matrix of one decision variable inside a block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTerm {
    pub var: usize,
    pub entries: Vec<Entry>,
}

/// Affine symmetric constraint `F0 + Σ z_k F_k ⪯ -shift I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpBlock {
    pub dim: usize,
    pub shift: f64,
    pub constant: Vec<Entry>,
    /// Sorted by variable index, one term per variable.
    pub terms: Vec<BlockTerm>,
}

impl SdpBlock {
    pub fn new(dim: usize, shift: f64) -> Self {
        Self {
            dim,
            shift,
            constant: Vec::new(),
            terms: Vec::new(),
        }
    }

    /// Dense `F0 + Σ z_k F_k + shift I`; the block is satisfied when this
    /// matrix is negative semidefinite.
    pub fn eval(&self, z: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal_element(self.dim, self.dim, self.shift);
        add_sym_entries(&mut m, &self.constant, 1.0);
        for t in &self.terms {
            let w = z[t.var];
            if w != 0.0 {
                add_sym_entries(&mut m, &t.entries, w);
            }
        }
        m
    }
}

pub(crate) fn add_sym_entries(m: &mut DMatrix<f64>, entries: &[Entry], scale: f64) {
    for &(r, c, v) in entries {
        m[(r, c)] += scale * v;
        if r != c {
            m[(c, r)] += scale * v;
        }
    }
}

/// Sparse row `Σ coeffs·z ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearIneq {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearIneq {
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, a)| a * z[k]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<SdpBlock>,
    pub linear: Vec<LinearIneq>,
    /// `-inf` when unbounded below.
    pub lower: Vec<f64>,
    /// `+inf` when unbounded above.
    pub upper: Vec<f64>,
}

impl SdpProblem {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            blocks: Vec::new(),
            linear: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
        }
    }

    pub fn validate(&self, max_block_dim: usize) -> Result<(), SdpError> {
        let n = self.n_vars;
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(SdpError::Malformed("vector lengths differ from n_vars".into()));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::Malformed("non-finite objective".into()));
        }
        for (k, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
            {
                return Err(SdpError::Malformed(format!("bad bounds on variable {k}")));
            }
        }
        for (bi, b) in self.blocks.iter().enumerate() {
            if b.dim == 0 || b.dim > max_block_dim {
                return Err(SdpError::Malformed(format!(
                    "block {bi} has dimension {} (cap {max_block_dim})",
                    b.dim
                )));
            }
            if !(b.shift >= 0.0) || !b.shift.is_finite() {
                return Err(SdpError::Malformed(format!("block {bi} has invalid shift")));
            }
            let entry_ok = |&(r, c, v): &Entry| r <= c && c < b.dim && v.is_finite();
            if !b.constant.iter().all(entry_ok) {
                return Err(SdpError::Malformed(format!("block {bi}: bad constant entry")));
            }
            let mut prev = None;
            for t in &b.terms {
                if t.var >= n || prev.is_some_and(|p| p >= t.var) {
                    return Err(SdpError::Malformed(format!(
                        "block {bi}: terms must be sorted by unique variable index"
                    )));
                }
                prev = Some(t.var);
                if !t.entries.iter().all(entry_ok) {
                    return Err(SdpError::Malformed(format!(
                        "block {bi}: bad entry for variable {}",
                        t.var
                    )));
                }
            }
        }
        for (li, row) in self.linear.iter().enumerate() {
            if !row.rhs.is_finite() || row.coeffs.iter().any(|&(k, a)| k >= n || !a.is_finite()) {
                return Err(SdpError::Malformed(format!("linear row {li} is invalid")));
            }
        }
        Ok(())
    }
}

/// Result of [`check`].
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// Largest eigenvalue of `F0 + Σ z F + shift I` per block.
    pub block_max_eig: Vec<f64>,
    /// Largest violation of linear rows and bounds, clamped at zero.
    pub linear_violation: f64,
}

impl Residuals {
    pub fn max_residual(&self) -> f64 {
        self.block_max_eig
            .iter()
            .copied()
            .fold(self.linear_violation, f64::max)
    }
}

/// Direct evaluation of every constraint at `z`.
pub fn check(problem: &SdpProblem, z: &[f64]) -> Residuals {
    assert_eq!(z.len(), problem.n_vars, "decision vector length");
    let block_max_eig = problem
        .blocks
        .iter()
        .map(|b| max_eigenvalue(&b.eval(z)))
        .collect();
    let mut viol = 0.0_f64;
    for row in &problem.linear {
        viol = viol.max(row.eval(z) - row.rhs);
    }
    for k in 0..problem.n_vars {
        viol = viol.max(problem.lower[k] - z[k]).max(z[k] - problem.upper[k]);
    }
    Residuals {
        block_max_eig,
        linear_violation: viol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpConfig {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub step_fraction: f64,
    pub max_iter: usize,
    pub max_block_dim: usize,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            gap_tol: 1e-6,
            step_fraction: 0.99,
            max_iter: 200,
            max_block_dim: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::Infeasible => "infeasible",
            SdpStatus::IterationLimit => "iteration-limit",
            SdpStatus::NumericalFailure => "numerical-failure",
        })
    }
}

/// Per-iteration diagnostics of the interior-point method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub merit: f64,
    pub mu: f64,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub rel_gap: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub z: Vec<f64>,
    pub objective_value: f64,
    pub dual_objective: f64,
    pub status: SdpStatus,
    pub max_residual: f64,
    pub residuals: Residuals,
    pub gap: f64,
    pub iterations: usize,
    pub trace: Vec<IterRecord>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn schur_example() -> SdpProblem {
        // minimize z  s.t. [[-z, 1], [1, -1]] ⪯ 0
        let mut p = SdpProblem::new(1);
        p.objective[0] = 1.0;
        let mut b = SdpBlock::new(2, 0.0);
        b.constant = vec![(0, 1, 1.0), (1, 1, -1.0)];
        b.terms.push(BlockTerm {
            var: 0,
            entries: vec![(0, 0, -1.0)],
        });
        p.blocks.push(b);
        p
    }

    #[test]
    fn check_closed_form_residual() {
        let r = check(&schur_example(), &[0.0]);
        let expect = (5f64.sqrt() - 1.0) / 2.0;
        assert!((r.block_max_eig[0] - expect).abs() < 1e-12);
        assert_eq!(r.linear_violation, 0.0);
    }

    #[test]
    fn check_empty_problem() {
        let p = SdpProblem::new(2);
        let r = check(&p, &[1.0, -3.0]);
        assert!(r.block_max_eig.is_empty());
        assert_eq!(r.linear_violation, 0.0);
    }

    #[test]
    fn check_reports_bounds_and_rows() {
        let mut p = SdpProblem::new(2);
        p.upper[0] = 1.0;
        p.linear.push(LinearIneq {
            coeffs: vec![(0, 1.0), (1, 1.0)],
            rhs: 1.0,
        });
        let r = check(&p, &[1.5, 1.0]);
        assert!((r.linear_violation - 1.5).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_bad_structure() {
        let mut p = schur_example();
        p.blocks[0].constant.push((1, 0, 1.0));
        assert!(p.validate(128).is_err());
        let mut p = schur_example();
        p.blocks[0].dim = 200;
        assert!(p.validate(128).is_err());
        let mut p = schur_example();
        p.blocks[0].terms.push(BlockTerm {
            var: 0,
            entries: vec![],
        });
        assert!(p.validate(128).is_err());
    }
}
