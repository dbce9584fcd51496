//! Data-driven homogenization for multiscale overdamped Langevin dynamics.
//!
//! The crate simulates multiscale and homogenized gradient SDEs with
//! Euler-Maruyama, smooths the paths with moving-average and exponential
//! kernels, and estimates the drift and diffusion coefficients of the
//! effective (homogenized) equation. Ground-truth effective coefficients
//! come from the [`homogenization`] module.
//!
//! ```
//! use homodyn::prelude::*;
//!
//! let model = presets::ModelFamily::Ou.multiscale(1.0, 0.2).unwrap();
//! let traj = simulate_multiscale(&model, 50.0, 1e-3, RandomStream::new(7, 0), &[0.0]).unwrap();
//! let z = filter_moving_average(&traj, 1.0).unwrap();
//! let drift = filtered_drift(&traj, &z, model.basis()).unwrap();
//! assert!(drift.coefficients().iter().all(|a| a.is_finite()));
//! ```

pub mod error;
pub mod estimators;
pub mod filtering;
pub mod harness;
pub mod homogenization;
pub mod linalg;
pub mod sde;

pub use error::{Error, Result};
pub use nalgebra;

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::estimators::{
        filtered_drift, hat_sigma_filtered, mle_drift, qv_sigma, solve_spd_least_squares,
        subsampled_diffusion, subsampled_drift, tilde_sigma, DiffusionEstimate, DiffusionMethod,
        DriftEstimate, DriftMethod,
    };
    pub use crate::filtering::{filter_exponential, filter_moving_average, FilterKind, FilterSpec};
    pub use crate::harness::presets;
    pub use crate::homogenization::{
        effective_from_multiscale, homog_k_1d, homog_k_separable, HomogenizationResult,
    };
    pub use crate::sde::{
        drift_multiscale, quadratic_variation, simulate_effective, simulate_multiscale,
        BasisTerm, EffectiveModel, FastPotential, MultiscaleModel, PeriodicComponent,
        RandomStream, SlowPotentialBasis, Trajectory,
    };
}
