//! Dense symmetric helpers shared by the solver, the certificates and the
//! simulator.

use nalgebra::DMatrix;

/// Largest eigenvalue of the symmetric part of `m`; `-inf` for an empty
/// matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Maximum real part of the eigenvalues of a general square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Option<f64> {
    let eig = m.clone().complex_eigenvalues();
    if eig.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
        return None;
    }
    Some(eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_extremes() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((max_eigenvalue(&m) - 3.0).abs() < 1e-12);
        assert!((min_eigenvalue(&m) - 1.0).abs() < 1e-12);
        assert_eq!(max_eigenvalue(&DMatrix::zeros(0, 0)), f64::NEG_INFINITY);
    }

    #[test]
    fn abscissa_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, -1.0, -0.5]);
        assert!((spectral_abscissa(&m).unwrap() + 0.5).abs() < 1e-12);
    }
}
