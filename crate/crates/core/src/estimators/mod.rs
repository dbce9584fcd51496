//! Drift and diffusion estimators for the effective dynamics.
//!
//! All stochastic integrals `int f dX` are left-point (Ito) sums
//! `sum f(X_k) (X_{k+1} - X_k)` and all `int f dt` are left-point Riemann
//! sums. Drift coefficients are returned in the stacked `dN x d` layout
//! `(A_1^T, ..., A_N^T)^T`, which is a column vector `A` when `d = 1`.

mod diffusion;
mod drift;
mod spd;
mod trace;

use std::fmt;

use nalgebra::DMatrix;

pub use diffusion::{
    hat_sigma_filtered, hat_sigma_filtered_traced, qv_sigma, qv_sigma_traced,
    subsampled_diffusion, subsampled_diffusion_traced, tilde_sigma, tilde_sigma_from_parts,
};
pub use drift::{
    filtered_drift, filtered_drift_traced, mle_drift, mle_drift_traced, subsampled_drift,
    subsampled_drift_traced,
};
pub use spd::{solve_spd_least_squares, SpdFit};
pub use trace::{checkpoint_steps, TracePoint, DEFAULT_CHECKPOINTS};

/// Fewer subsample increments than this raise the `few_samples` flag.
pub const FEW_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftMethod {
    Mle,
    Subsampled { delta: f64 },
    FilteredMa { delta: f64 },
    FilteredExp { delta: f64, beta: f64 },
}

impl DriftMethod {
    /// Short family name: `mle`, `sub`, `ma` or `exp`.
    pub fn family(&self) -> &'static str {
        match self {
            DriftMethod::Mle => "mle",
            DriftMethod::Subsampled { .. } => "sub",
            DriftMethod::FilteredMa { .. } => "ma",
            DriftMethod::FilteredExp { .. } => "exp",
        }
    }
}

impl fmt::Display for DriftMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftMethod::Mle => write!(f, "mle"),
            DriftMethod::Subsampled { delta } => write!(f, "sub(delta={delta})"),
            DriftMethod::FilteredMa { delta } => write!(f, "ma(delta={delta})"),
            DriftMethod::FilteredExp { delta, beta } => write!(f, "exp(delta={delta}, beta={beta})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionMethod {
    Qv,
    SubsampledHat { delta: f64 },
    FilteredHatMa { delta: f64 },
    FilteredHatExp { delta: f64, beta: f64 },
    Tilde(DriftMethod),
}

impl fmt::Display for DiffusionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionMethod::Qv => write!(f, "qv"),
            DiffusionMethod::SubsampledHat { delta } => write!(f, "hat_sub(delta={delta})"),
            DiffusionMethod::FilteredHatMa { delta } => write!(f, "hat_ma(delta={delta})"),
            DiffusionMethod::FilteredHatExp { delta, beta } => {
                write!(f, "hat_exp(delta={delta}, beta={beta})")
            }
            DiffusionMethod::Tilde(m) => write!(f, "tilde[{m}]"),
        }
    }
}

/// Effective drift estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    pub(crate) stacked: DMatrix<f64>,
    pub(crate) method: DriftMethod,
    pub(crate) condition_number: f64,
    pub(crate) trace: Option<Vec<TracePoint>>,
}

impl DriftEstimate {
    /// The `dN x d` stacked coefficient matrix.
    pub fn stacked(&self) -> &DMatrix<f64> {
        &self.stacked
    }

    pub fn dim(&self) -> usize {
        self.stacked.ncols()
    }

    /// The `N` matrices `A_i` such that the drift is `-sum_i A_i grad V_i`.
    pub fn blocks(&self) -> Vec<DMatrix<f64>> {
        let d = self.dim();
        (0..self.stacked.nrows() / d)
            .map(|i| self.stacked.view((i * d, 0), (d, d)).transpose())
            .collect()
    }

    /// Row-major flattening of the stacked matrix; the vector `A` when `d = 1`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.stacked.transpose().as_slice().to_vec()
    }

    pub fn method(&self) -> DriftMethod {
        self.method
    }

    /// Condition number of the solved system `M`.
    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn trace(&self) -> Option<&[TracePoint]> {
        self.trace.as_deref()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Fewer than [`FEW_SAMPLES`] increments entered the estimate.
    pub few_samples: bool,
    /// The quadratic variation was not a multiple of the identity (tilde, `d > 1`).
    pub anisotropic_qv: bool,
    /// Whether the SPD fit met its gradient tolerance (tilde, `d > 1`).
    pub spd_converged: Option<bool>,
}

/// Effective diffusion estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionEstimate {
    pub(crate) sigma: DMatrix<f64>,
    pub(crate) method: DiffusionMethod,
    pub(crate) trace: Option<Vec<TracePoint>>,
    pub(crate) diagnostics: Diagnostics,
}

impl DiffusionEstimate {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// The `(0, 0)` entry, i.e. the estimate itself when `d = 1`.
    pub fn scalar(&self) -> f64 {
        self.sigma[(0, 0)]
    }

    pub fn method(&self) -> DiffusionMethod {
        self.method
    }

    pub fn trace(&self) -> Option<&[TracePoint]> {
        self.trace.as_deref()
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }
}
