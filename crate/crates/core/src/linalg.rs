//! Small dense linear algebra shared by the simulator and the estimators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Systems whose 2-norm condition number exceeds this are reported as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// `(B + B^T) / 2`.
pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Ratio of the extreme singular values; infinite for a singular matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `m x = rhs` with partial-pivoting LU, refusing ill-conditioned systems.
pub fn solve_checked(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let condition = condition_number(m);
    if condition.is_nan() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularSystem { condition });
    }
    m.clone()
        .lu()
        .solve(rhs)
        .map(|x| (x, condition))
        .ok_or(Error::SingularSystem { condition })
}

/// Symmetric square root of a symmetric positive semidefinite matrix.
/// Eigenvalues below `tol` (including slightly negative round-off) are clipped to zero.
pub fn sym_sqrt_psd(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let eig = symmetric_part(m).symmetric_eigen();
    let vals = eig
        .eigenvalues
        .map(|v| if v < tol { 0.0 } else { v.sqrt() });
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_part(m).symmetric_eigen().eigenvalues.min()
}
