//! Model types and Euler-Maruyama sample paths for the multiscale and
//! homogenized Langevin equations.

mod model;
mod potential;
mod rng;
mod simulate;
mod trajectory;

pub use model::{EffectiveModel, MultiscaleModel};
pub use potential::{BasisTerm, FastPotential, JointPeriodic, PeriodicComponent, SlowPotentialBasis};
pub use rng::{mix64, RandomStream};
pub use simulate::{
    drift_effective, drift_multiscale, quadratic_variation, simulate_effective,
    simulate_effective_with, simulate_multiscale, simulate_multiscale_with, SimulationOptions,
};
pub use trajectory::{grid_steps, Trajectory};
pub(crate) use trajectory::width_in_steps;
