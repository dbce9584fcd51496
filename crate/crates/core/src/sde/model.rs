use nalgebra::DMatrix;

use super::potential::{FastPotential, SlowPotentialBasis};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, symmetric_part};

/// The data-generating multiscale Langevin model
/// `dX = -sum_i alpha_i grad V_i(X) dt - (1/eps) grad p(X/eps) dt + sqrt(2 sigma) dW`.
///
/// Dissipativity of `alpha . V` is not checked; a non-dissipative model shows
/// up as [`Error::BlowUp`] during simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleModel {
    basis: SlowPotentialBasis,
    fast: FastPotential,
    alpha: Vec<f64>,
    sigma: f64,
    epsilon: f64,
}

impl MultiscaleModel {
    pub fn new(
        basis: SlowPotentialBasis,
        fast: FastPotential,
        alpha: Vec<f64>,
        sigma: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if basis.dim() != fast.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: fast.dim(),
            });
        }
        if alpha.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: alpha.len(),
            });
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        // sigma = 0 is admitted as the deterministic limit.
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be non-negative and finite"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        Ok(Self {
            basis,
            fast,
            alpha,
            sigma,
            epsilon,
        })
    }

    pub fn basis(&self) -> &SlowPotentialBasis {
        &self.basis
    }
    pub fn fast(&self) -> &FastPotential {
        &self.fast
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Writes `b^eps(x, x/eps)` into `out`; `scratch` must hold at least `2d` values.
    pub(crate) fn drift_into(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let d = x.len();
        let inv_eps = 1.0 / self.epsilon;
        let (y, grad) = scratch.split_at_mut(d);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi * inv_eps;
        }
        self.fast.grad_into(y, out);
        for o in out.iter_mut() {
            *o *= -inv_eps;
        }
        let grad = &mut grad[..d];
        for (i, a) in self.alpha.iter().enumerate() {
            self.basis.grad_into(i, x, grad);
            for (o, g) in out.iter_mut().zip(grad.iter()) {
                *o -= a * g;
            }
        }
    }
}

/// The homogenized model `dX = -sum_i A_i grad V_i(X) dt + sqrt(2 Sigma) dW`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    basis: SlowPotentialBasis,
    a: Vec<DMatrix<f64>>,
    sigma: DMatrix<f64>,
    k: Option<DMatrix<f64>>,
}

impl EffectiveModel {
    pub fn new(
        basis: SlowPotentialBasis,
        a: Vec<DMatrix<f64>>,
        sigma: DMatrix<f64>,
        k: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let d = basis.dim();
        if a.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: a.len(),
            });
        }
        for m in a.iter().chain([&sigma]).chain(k.iter()) {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.nrows(),
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("coefficients", "must be finite"));
            }
        }
        if (&sigma - sigma.transpose()).amax() > 1e-12 {
            return Err(Error::invalid("Sigma", "must be symmetric"));
        }
        if min_eigenvalue(&sigma) < -1e-12 {
            return Err(Error::invalid("Sigma", "must be positive semidefinite"));
        }
        Ok(Self {
            basis,
            a,
            sigma: symmetric_part(&sigma),
            k,
        })
    }

    /// One-dimensional effective model with scalar coefficients.
    pub fn scalar(basis: SlowPotentialBasis, a: &[f64], sigma: f64) -> Result<Self> {
        let a = a.iter().map(|v| DMatrix::from_element(1, 1, *v)).collect();
        Self::new(basis, a, DMatrix::from_element(1, 1, sigma), None)
    }

    pub fn basis(&self) -> &SlowPotentialBasis {
        &self.basis
    }
    pub fn a(&self) -> &[DMatrix<f64>] {
        &self.a
    }
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
    pub fn k(&self) -> Option<&DMatrix<f64>> {
        self.k.as_ref()
    }
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `(A_1^T, ..., A_N^T)^T`, the `dN x d` layout returned by the drift estimators.
    pub fn stacked_a(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d * self.a.len(), d);
        for (i, ai) in self.a.iter().enumerate() {
            out.view_mut((i * d, 0), (d, d)).copy_from(&ai.transpose());
        }
        out
    }

    pub(crate) fn drift_into(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        out.fill(0.0);
        let d = x.len();
        for (i, ai) in self.a.iter().enumerate() {
            self.basis.grad_into(i, x, scratch);
            for r in 0..d {
                let mut acc = 0.0;
                for c in 0..d {
                    acc += ai[(r, c)] * scratch[c];
                }
                out[r] -= acc;
            }
        }
    }
}
