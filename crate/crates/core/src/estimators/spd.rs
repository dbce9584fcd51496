use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, symmetric_part, SINGULAR_CONDITION};

const GRADIENT_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 10_000;
const INIT_EIG_FLOOR: f64 = 1e-8;

/// Result of [`solve_spd_least_squares`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFit {
    /// The minimizer `K = L L^T`.
    pub k: DMatrix<f64>,
    /// Frobenius norm of the gradient with respect to `L` at `k`.
    pub gradient_norm: f64,
    pub iterations: usize,
    /// `gradient_norm` reached the tolerance within the iteration cap.
    pub converged: bool,
    /// `||A K - B||_F`.
    pub residual: f64,
}

/// `0.5 ||A L L^T - B||_F^2` and its gradient `tril((G + G^T) L)`, `G = A^T (A K - B)`.
fn objective(ata: &DMatrix<f64>, atb: &DMatrix<f64>, btb: f64, l: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let k = l * l.transpose();
    // 0.5 tr(K A^T A K) - tr(K A^T B) + 0.5 tr(B^T B), expanded to avoid the tall product
    let atak = ata * &k;
    let value = 0.5 * (k.component_mul(&atak).sum() - 2.0 * k.component_mul(atb).sum() + btb);
    let g = atak - atb;
    let grad = ((&g + g.transpose()) * l).lower_triangle();
    (value.max(0.0), grad)
}

/// Minimizes `||A K - B||_F` over symmetric positive semidefinite `K`, with
/// `A` and `B` both `m x d`, by gradient descent on the Cholesky factor
/// (Barzilai-Borwein steps safeguarded by Armijo backtracking).
///
/// Fails with [`Error::DegenerateAlpha`] when `A` is numerically rank deficient.
/// Hitting the iteration cap is not an error: the best iterate is returned with
/// `converged == false`.
pub fn solve_spd_least_squares(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SpdFit> {
    let d = a.ncols();
    if d == 0 || d > 8 {
        return Err(Error::invalid("A", "column count must lie in 1..=8"));
    }
    if b.shape() != a.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows() * d,
            found: b.nrows() * b.ncols(),
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("A", "entries must be finite"));
    }
    let ata = a.transpose() * a;
    let condition = condition_number(&ata);
    if condition.is_nan() || condition > SINGULAR_CONDITION {
        return Err(Error::DegenerateAlpha);
    }
    let atb = a.transpose() * b;
    let btb = b.norm_squared();

    let unconstrained = ata.clone().lu().solve(&atb).ok_or(Error::DegenerateAlpha)?;
    let eig = symmetric_part(&unconstrained).symmetric_eigen();
    let clipped = eig.eigenvalues.map(|v| v.max(INIT_EIG_FLOOR));
    let k0 = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let mut l = symmetric_part(&k0)
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| DMatrix::identity(d, d) * INIT_EIG_FLOOR.sqrt());

    let (mut f, mut grad) = objective(&ata, &atb, btb, &l);
    // first step: inverse of a Lipschitz bound for the K-gradient scaled by |L|^2
    let lipschitz = ata.norm() * (2.0 * l.norm_squared()).max(1e-8);
    let mut step = 1.0 / lipschitz;
    let mut iterations = 0;
    while grad.norm() > GRADIENT_TOL && iterations < MAX_ITERATIONS {
        iterations += 1;
        let gnorm2 = grad.norm_squared();
        let mut t = step;
        let (l_new, f_new, grad_new) = loop {
            let trial = &l - &grad * t;
            let (ft, gt) = objective(&ata, &atb, btb, &trial);
            if ft <= f - 1e-4 * t * gnorm2 || t < 1e-300 {
                break (trial, ft, gt);
            }
            t *= 0.5;
        };
        let s = &l_new - &l;
        let y = &grad_new - &grad;
        let sy = s.dot(&y);
        step = if sy > 0.0 { s.norm_squared() / sy } else { t * 2.0 };
        if f_new >= f && (&l_new - &l).norm() == 0.0 {
            // no representable progress left
            break;
        }
        l = l_new;
        f = f_new;
        grad = grad_new;
    }

    let k = symmetric_part(&(&l * l.transpose()));
    let gradient_norm = grad.norm();
    Ok(SpdFit {
        residual: (a * &k - b).norm(),
        k,
        gradient_norm,
        iterations,
        converged: gradient_norm <= GRADIENT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack() -> DMatrix<f64> {
        // two 2x2 blocks, full column rank
        DMatrix::from_row_slice(4, 2, &[1.0, 0.2, -0.3, 2.0, 0.5, 0.5, 1.5, -0.7])
    }

    #[test]
    fn identity_target() {
        let a = stack();
        let fit = solve_spd_least_squares(&a, &a).unwrap();
        assert!(fit.converged);
        assert!((&fit.k - DMatrix::<f64>::identity(2, 2)).amax() < 1e-8);
    }

    #[test]
    fn recovers_exact_spd_factor() {
        let a = stack();
        let k0 = DMatrix::from_row_slice(2, 2, &[0.62, 0.0, 0.0, 0.88]);
        let fit = solve_spd_least_squares(&a, &(&a * &k0)).unwrap();
        assert!(fit.converged, "gradient {}", fit.gradient_norm);
        assert!((&fit.k - &k0).amax() < 1e-8);
        assert!(fit.residual < 1e-8);

        let k1 = DMatrix::from_row_slice(2, 2, &[2.0, -0.7, -0.7, 0.5]);
        let fit = solve_spd_least_squares(&a, &(&a * &k1)).unwrap();
        assert!((&fit.k - &k1).amax() < 1e-8);
    }

    /// Least squares over the three free entries of a symmetric `K`, solved as a
    /// plain linear problem; equals the SPD minimizer whenever it is positive definite.
    fn symmetric_oracle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let m = a.nrows();
        let basis = [
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        ];
        let mut design = DMatrix::zeros(2 * m, 3);
        for (j, e) in basis.iter().enumerate() {
            let col = a * e;
            for (i, v) in col.iter().enumerate() {
                design[(i, j)] = *v;
            }
        }
        let rhs = DMatrix::from_column_slice(2 * m, 1, b.as_slice());
        let theta = design.svd(true, true).solve(&rhs, 1e-14).unwrap();
        &basis[0] * theta[0] + &basis[1] * theta[1] + &basis[2] * theta[2]
    }

    #[test]
    fn inconsistent_system_matches_linear_oracle() {
        let a = stack();
        let k0 = DMatrix::from_row_slice(2, 2, &[0.62, 0.1, 0.1, 0.88]);
        let noise = DMatrix::from_row_slice(4, 2, &[0.03, -0.02, 0.01, 0.05, -0.04, 0.02, 0.0, -0.01]);
        let b = &a * &k0 + noise;
        let oracle = symmetric_oracle(&a, &b);
        assert!(crate::linalg::min_eigenvalue(&oracle) > 0.1);
        let fit = solve_spd_least_squares(&a, &b).unwrap();
        assert!(fit.converged);
        assert!((&fit.k - &oracle).amax() < 1e-6);
    }

    #[test]
    fn projects_onto_the_cone_when_needed() {
        // unconstrained optimum is indefinite; the fit stays PSD
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let fit = solve_spd_least_squares(&a, &b).unwrap();
        assert!(crate::linalg::min_eigenvalue(&fit.k) >= -1e-12);
        assert!((fit.k[(0, 0)] - 1.0).abs() < 1e-6);
        assert!(fit.k[(1, 1)].abs() < 1e-3);
    }

    #[test]
    fn degenerate_design_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            solve_spd_least_squares(&a, &a),
            Err(Error::DegenerateAlpha)
        ));
    }
}
