use nalgebra::DMatrix;

use crate::linalg::max_eigenvalue;
use crate::model::StateSpace;

use super::expr::Affine;
use super::problem::{SynthError, SynthVariables, SynthesisProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockId {
    M1,
    M2,
    M3,
    M4,
    /// The positivity requirement on `P`.
    P,
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BlockId::M1 => "M1",
            BlockId::M2 => "M2",
            BlockId::M3 => "M3",
            BlockId::M4 => "M4",
            BlockId::P => "-P",
        })
    }
}

/// Largest eigenvalue of each block and of `−P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockResiduals {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub neg_p: f64,
}

impl BlockResiduals {
    pub fn get(&self, id: BlockId) -> f64 {
        match id {
            BlockId::M1 => self.m1,
            BlockId::M2 => self.m2,
            BlockId::M3 => self.m3,
            BlockId::M4 => self.m4,
            BlockId::P => self.neg_p,
        }
    }

    /// The block with the largest residual; ties go to the earlier block.
    pub fn worst(&self) -> (BlockId, f64) {
        let mut best = (BlockId::M1, self.m1);
        for id in [BlockId::M2, BlockId::M3, BlockId::M4, BlockId::P] {
            if self.get(id) > best.1 {
                best = (id, self.get(id));
            }
        }
        best
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.m1, self.m2, self.m3, self.m4, self.neg_p]
    }
}

fn check_dims(what: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<(), SynthError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(SynthError::Dimension(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_py(ss: &StateSpace, p: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(), SynthError> {
    check_dims("P", p, ss.n_x(), ss.n_x())?;
    check_dims("Y", y, ss.n_u(), ss.n_x())
}

/// Places `blocks[i][j]` (lower triangle, `j <= i`) into a symmetric matrix;
/// the upper triangle is mirrored.
fn sym_from_lower(sizes: &[usize], lower: &[(usize, usize, DMatrix<f64>)]) -> DMatrix<f64> {
    let off: Vec<usize> = sizes
        .iter()
        .scan(0, |a, &s| {
            let o = *a;
            *a += s;
            Some(o)
        })
        .collect();
    let n = sizes.iter().sum();
    let mut m = DMatrix::zeros(n, n);
    for (i, j, b) in lower {
        m.view_mut((off[*i], off[*j]), (sizes[*i], sizes[*j])).copy_from(b);
        if i != j {
            m.view_mut((off[*j], off[*i]), (sizes[*j], sizes[*i]))
                .copy_from(&b.transpose());
        }
    }
    m
}

pub fn assemble_m1(
    ss: &StateSpace,
    p: &DMatrix<f64>,
    y: &DMatrix<f64>,
    gamma: &[f64],
    mu0: f64,
    alpha: f64,
) -> Result<DMatrix<f64>, SynthError> {
    check_py(ss, p, y)?;
    if gamma.len() != ss.n_u() {
        return Err(SynthError::Dimension(format!(
            "Gamma has {} entries, expected {}",
            gamma.len(),
            ss.n_u()
        )));
    }
    let g = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(gamma));
    let bgy = &ss.bu * &g * y;
    let ap = &ss.a * p;
    let tl = &ap + ap.transpose() + p * alpha - (&bgy + bgy.transpose());
    let tl = (&tl + tl.transpose()) * 0.5;
    let nd = ss.n_d();
    Ok(sym_from_lower(
        &[ss.n_x(), nd],
        &[
            (0, 0, tl),
            (1, 0, ss.bd.transpose()),
            (1, 1, DMatrix::from_diagonal_element(nd, nd, -alpha * mu0)),
        ],
    ))
}

pub fn assemble_m2(
    ss: &StateSpace,
    p: &DMatrix<f64>,
    y: &DMatrix<f64>,
    mu1: f64,
    mu2: f64,
) -> Result<DMatrix<f64>, SynthError> {
    check_py(ss, p, y)?;
    let np = ss.n_p();
    let w = &ss.c * p - &ss.d * y;
    Ok(sym_from_lower(
        &[ss.n_x(), np, np],
        &[
            (0, 0, p * -mu1),
            (1, 1, DMatrix::from_diagonal_element(np, np, -mu2)),
            (2, 0, w),
            (2, 2, -DMatrix::identity(np, np)),
        ],
    ))
}

pub fn assemble_m3(
    x0: &nalgebra::DVector<f64>,
    p: &DMatrix<f64>,
    mu0: f64,
    rho: f64,
) -> Result<DMatrix<f64>, SynthError> {
    let n = x0.len();
    check_dims("P", p, n, n)?;
    Ok(sym_from_lower(
        &[1, n],
        &[
            (0, 0, DMatrix::from_element(1, 1, -mu0 * rho * rho)),
            (1, 0, DMatrix::from_column_slice(n, 1, x0.as_slice())),
            (1, 1, -p),
        ],
    ))
}

pub fn assemble_m4(
    p: &DMatrix<f64>,
    y: &DMatrix<f64>,
    mu0: f64,
    u_max: f64,
    rho: f64,
) -> Result<DMatrix<f64>, SynthError> {
    let (nu, nx) = y.shape();
    check_dims("P", p, nx, nx)?;
    Ok(sym_from_lower(
        &[nx, nu],
        &[
            (0, 0, p * -(u_max * u_max / (rho * rho))),
            (1, 0, y * mu0),
            (1, 1, DMatrix::from_diagonal_element(nu, nu, -mu0)),
        ],
    ))
}

/// Largest eigenvalue of every block at `vars`.
pub fn residual(
    problem: &SynthesisProblem,
    vars: &SynthVariables,
) -> Result<BlockResiduals, SynthError> {
    let ss = &problem.ss;
    Ok(BlockResiduals {
        m1: max_eigenvalue(&assemble_m1(ss, &vars.p, &vars.y, &vars.gamma, vars.mu0, vars.alpha)?),
        m2: max_eigenvalue(&assemble_m2(ss, &vars.p, &vars.y, vars.mu1, vars.mu2)?),
        m3: max_eigenvalue(&assemble_m3(&problem.x0, &vars.p, vars.mu0, problem.rho)?),
        m4: max_eigenvalue(&assemble_m4(&vars.p, &vars.y, vars.mu0, problem.u_max, problem.rho)?),
        neg_p: max_eigenvalue(&-&vars.p),
    })
}

/// `AP + PAᵀ + αP` for a symmetric expression `P`.
pub(crate) fn lyapunov_expr(a: &DMatrix<f64>, p: &Affine, alpha: f64) -> Affine {
    p.lmul(a).plus_transpose().add(&p.clone().scale(alpha))
}

/// `CP − DG` where `G` is the applied gain numerator.
pub(crate) fn output_expr(ss: &StateSpace, p: &Affine, g: &Affine) -> Affine {
    p.lmul(&ss.c).sub(&g.lmul(&ss.d))
}
