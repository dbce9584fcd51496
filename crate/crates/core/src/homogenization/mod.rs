//! Effective coefficients of the homogenized equation.
//!
//! In one dimension the homogenization factor has the closed form
//! `K = L^2 / (C+ C-)` with `C± = int_0^L exp(±p(y)/sigma) dy`. For a fast
//! potential that separates as `p(y) = sum_i p_i(y_i)`, `K` is diagonal with
//! the one-dimensional factors on the diagonal. Non-separable potentials
//! would require the cell problem and are rejected.

mod quadrature;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sde::{EffectiveModel, FastPotential, MultiscaleModel, PeriodicComponent};
use quadrature::composite_rule;

const ORDER: usize = 16;
const PANELS: usize = 256;
const REFINEMENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizationResult {
    /// Diagonal in every case this module supports.
    pub k: DMatrix<f64>,
    /// `C+` per dimension.
    pub c_plus: Vec<f64>,
    /// `C-` per dimension.
    pub c_minus: Vec<f64>,
    /// Largest change in a diagonal entry when the panel count is doubled.
    pub quad_error_estimate: f64,
}

impl HomogenizationResult {
    /// The `(0, 0)` entry.
    pub fn scalar(&self) -> f64 {
        self.k[(0, 0)]
    }
}

struct Factor {
    k: f64,
    c_plus: f64,
    c_minus: f64,
}

/// Evaluates `K` with the exponent shifted by the extreme node values so that
/// neither integral overflows.
fn factor(p: &impl Fn(f64) -> f64, sigma: f64, period: f64, panels: usize) -> Factor {
    let rule = composite_rule(0.0, period, panels, ORDER);
    let values: Vec<f64> = rule.iter().map(|(y, _)| p(*y)).collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == lo {
        return Factor {
            k: 1.0,
            c_plus: period * (hi / sigma).exp(),
            c_minus: period * (-hi / sigma).exp(),
        };
    }
    let (mut plus, mut minus) = (0.0, 0.0);
    for ((_, w), v) in rule.iter().zip(&values) {
        plus += w * ((v - hi) / sigma).exp();
        minus += w * ((lo - v) / sigma).exp();
    }
    let k = period * period / (plus * minus) * (-(hi - lo) / sigma).exp();
    Factor {
        k: k.min(1.0),
        c_plus: plus * (hi / sigma).exp(),
        c_minus: minus * (-lo / sigma).exp(),
    }
}

/// One-dimensional homogenization factor of the `period`-periodic potential `p`.
pub fn homog_k_1d(
    p: impl Fn(f64) -> f64,
    sigma: f64,
    period: f64,
) -> Result<HomogenizationResult> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", "must be positive and finite"));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::invalid("period", "must be positive and finite"));
    }
    let coarse = factor(&p, sigma, period, PANELS);
    let fine = factor(&p, sigma, period, 2 * PANELS);
    let change = (fine.k - coarse.k).abs();
    if change.is_nan() || change > REFINEMENT_TOL || !fine.k.is_finite() || fine.k <= 0.0 {
        return Err(Error::QuadratureNonConvergence { change });
    }
    Ok(HomogenizationResult {
        k: DMatrix::from_element(1, 1, fine.k),
        c_plus: vec![fine.c_plus],
        c_minus: vec![fine.c_minus],
        quad_error_estimate: change,
    })
}

/// Diagonal `K` for `p(y) = sum_i p_i(y_i)`.
pub fn homog_k_separable(
    components: &[PeriodicComponent],
    sigma: f64,
) -> Result<HomogenizationResult> {
    if components.is_empty() {
        return Err(Error::invalid("components", "must not be empty"));
    }
    let d = components.len();
    let mut out = HomogenizationResult {
        k: DMatrix::zeros(d, d),
        c_plus: Vec::with_capacity(d),
        c_minus: Vec::with_capacity(d),
        quad_error_estimate: 0.0,
    };
    for (i, c) in components.iter().enumerate() {
        let r = homog_k_1d(|y| c.eval(y), sigma, c.period())?;
        out.k[(i, i)] = r.scalar();
        out.c_plus.push(r.c_plus[0]);
        out.c_minus.push(r.c_minus[0]);
        out.quad_error_estimate = out.quad_error_estimate.max(r.quad_error_estimate);
    }
    Ok(out)
}

/// `K` for a fast potential; fails with [`Error::NonSeparable`] for joint potentials.
pub fn homog_k_fast(fast: &FastPotential, sigma: f64) -> Result<HomogenizationResult> {
    match fast.components() {
        Some(c) => homog_k_separable(c, sigma),
        None => Err(Error::NonSeparable),
    }
}

/// `A_i = alpha_i K`, `Sigma = sigma K`.
pub fn effective_from_multiscale(model: &MultiscaleModel, k: &DMatrix<f64>) -> Result<EffectiveModel> {
    let a = model.alpha().iter().map(|ai| k * *ai).collect();
    EffectiveModel::new(model.basis().clone(), a, k * model.sigma(), Some(k.clone()))
}

/// Homogenizes `model` end to end: the factor `K` and the effective model it implies.
pub fn homogenize(model: &MultiscaleModel) -> Result<(HomogenizationResult, EffectiveModel)> {
    let result = homog_k_fast(model.fast(), model.sigma())?;
    let effective = effective_from_multiscale(model, &result.k)?;
    Ok((result, effective))
}
