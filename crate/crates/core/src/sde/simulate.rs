use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::model::{EffectiveModel, MultiscaleModel};
use super::rng::RandomStream;
use super::trajectory::{grid_steps, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::sym_sqrt_psd;

/// Knobs shared by both simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// A path whose component exceeds this magnitude aborts with [`Error::BlowUp`].
    pub blowup_bound: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { blowup_bound: 1e8 }
    }
}

/// `b^eps(x, x/eps) = -sum_i alpha_i grad V_i(x) - (1/eps) grad p(x/eps)`.
pub fn drift_multiscale(model: &MultiscaleModel, x: &[f64]) -> Vec<f64> {
    let d = model.dim();
    let mut out = vec![0.0; d];
    let mut scratch = vec![0.0; 2 * d];
    model.drift_into(x, &mut out, &mut scratch);
    out
}

/// `-sum_i A_i grad V_i(x)`.
pub fn drift_effective(model: &EffectiveModel, x: &[f64]) -> Vec<f64> {
    let d = model.dim();
    let mut out = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    model.drift_into(x, &mut out, &mut scratch);
    out
}

fn check_grid(horizon: f64, dt: f64, x0: &[f64], dim: usize) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive and finite"));
    }
    if !(horizon >= dt && horizon.is_finite()) {
        return Err(Error::invalid("T", "must be finite and at least dt"));
    }
    if x0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("x0", "must be finite"));
    }
    Ok(grid_steps(horizon, dt))
}

/// Euler-Maruyama loop shared by both models. `noise` maps a vector of
/// standard normals to the increment's stochastic part.
#[allow(clippy::too_many_arguments)]
fn euler_maruyama<D, N>(
    dim: usize,
    steps: usize,
    dt: f64,
    x0: &[f64],
    stream: RandomStream,
    options: SimulationOptions,
    mut drift: D,
    mut noise: N,
) -> Result<Trajectory>
where
    D: FnMut(&[f64], &mut [f64]),
    N: FnMut(&[f64], &mut [f64]),
{
    let mut rng = stream.rng();
    let mut values = Vec::with_capacity((steps + 1) * dim);
    values.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut b = vec![0.0; dim];
    let mut xi = vec![0.0; dim];
    let mut kick = vec![0.0; dim];
    for step in 1..=steps {
        drift(&x, &mut b);
        for z in xi.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        noise(&xi, &mut kick);
        for j in 0..dim {
            x[j] += b[j] * dt + kick[j];
            // also catches NaN
            if x[j].is_nan() || x[j].abs() > options.blowup_bound {
                return Err(Error::BlowUp {
                    step,
                    time: step as f64 * dt,
                    bound: options.blowup_bound,
                });
            }
        }
        values.extend_from_slice(&x);
    }
    Ok(Trajectory::new(dim, dt, values)?.with_seed(stream))
}

/// Simulates the multiscale model on `[0, T]` with step `dt`.
pub fn simulate_multiscale(
    model: &MultiscaleModel,
    horizon: f64,
    dt: f64,
    stream: RandomStream,
    x0: &[f64],
) -> Result<Trajectory> {
    simulate_multiscale_with(model, horizon, dt, stream, x0, SimulationOptions::default())
}

pub fn simulate_multiscale_with(
    model: &MultiscaleModel,
    horizon: f64,
    dt: f64,
    stream: RandomStream,
    x0: &[f64],
    options: SimulationOptions,
) -> Result<Trajectory> {
    let d = model.dim();
    let steps = check_grid(horizon, dt, x0, d)?;
    let eps = model.epsilon();
    if dt > eps * eps / 10.0 {
        log::warn!(
            "dt = {dt:e} does not resolve the fast scale (eps^2/10 = {:e}); estimates may be biased",
            eps * eps / 10.0
        );
    }
    let scale = (2.0 * model.sigma() * dt).sqrt();
    let mut scratch = vec![0.0; 2 * d];
    euler_maruyama(
        d,
        steps,
        dt,
        x0,
        stream,
        options,
        |x, out| model.drift_into(x, out, &mut scratch),
        |xi, out| {
            for (o, z) in out.iter_mut().zip(xi) {
                *o = scale * z;
            }
        },
    )
}

/// Simulates the effective model; the noise factor is the symmetric square root of `2 Sigma dt`.
pub fn simulate_effective(
    model: &EffectiveModel,
    horizon: f64,
    dt: f64,
    stream: RandomStream,
    x0: &[f64],
) -> Result<Trajectory> {
    simulate_effective_with(model, horizon, dt, stream, x0, SimulationOptions::default())
}

pub fn simulate_effective_with(
    model: &EffectiveModel,
    horizon: f64,
    dt: f64,
    stream: RandomStream,
    x0: &[f64],
    options: SimulationOptions,
) -> Result<Trajectory> {
    let d = model.dim();
    let steps = check_grid(horizon, dt, x0, d)?;
    let factor: DMatrix<f64> = sym_sqrt_psd(&(model.sigma() * (2.0 * dt)), 1e-12);
    let mut scratch = vec![0.0; d];
    euler_maruyama(
        d,
        steps,
        dt,
        x0,
        stream,
        options,
        |x, out| model.drift_into(x, out, &mut scratch),
        |xi, out| {
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..d).map(|c| factor[(r, c)] * xi[c]).sum();
            }
        },
    )
}

/// `sum_k (X_{k+1} - X_k) (X_{k+1} - X_k)^T`.
pub fn quadratic_variation(traj: &Trajectory) -> DMatrix<f64> {
    let d = traj.dim();
    let mut qv = vec![0.0; d * d];
    let mut inc = vec![0.0; d];
    for k in 0..traj.n_steps() {
        let (a, b) = (traj.point(k), traj.point(k + 1));
        for j in 0..d {
            inc[j] = b[j] - a[j];
        }
        for r in 0..d {
            for c in 0..d {
                qv[r * d + c] += inc[r] * inc[c];
            }
        }
    }
    DMatrix::from_row_slice(d, d, &qv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::potential::{FastPotential, PeriodicComponent, SlowPotentialBasis};

    fn ou_multiscale(sigma: f64, eps: f64, fast: PeriodicComponent) -> MultiscaleModel {
        MultiscaleModel::new(
            SlowPotentialBasis::quadratic_1d(),
            FastPotential::one_dim(fast),
            vec![1.0],
            sigma,
            eps,
        )
        .unwrap()
    }

    #[test]
    fn drift_at_symmetry_point() {
        let m = ou_multiscale(1.0, 0.1, PeriodicComponent::sine());
        assert_eq!(drift_multiscale(&m, &[0.0]), vec![-10.0]);
    }

    #[test]
    fn drift_at_generic_point() {
        let m = ou_multiscale(1.0, 0.05, PeriodicComponent::sine());
        // -0.3 - 20 cos(6), reference from an independent high-precision evaluation
        let expected = -19.503_405_733_007_32;
        assert!((drift_multiscale(&m, &[0.3])[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn drift_vanishes_at_joint_critical_point() {
        // V = x^2/2 has grad 0 at x = 0; with p = cos the fast force -sin(0) also vanishes.
        let cos = PeriodicComponent::new(2.0 * std::f64::consts::PI, 0.0, vec![1.0], vec![]).unwrap();
        let m = ou_multiscale(1.0, 0.1, cos);
        assert_eq!(drift_multiscale(&m, &[0.0]), vec![0.0]);
    }

    #[test]
    fn zero_noise_is_forward_euler() {
        let m = ou_multiscale(0.0, 0.1, PeriodicComponent::zero());
        let dt = 0.01;
        let t = simulate_multiscale(&m, 1.0, dt, RandomStream::new(1, 0), &[1.0]).unwrap();
        assert_eq!(t.len(), 101);
        for k in 0..t.len() {
            let euler = (1.0 - dt).powi(k as i32);
            assert!((t.point(k)[0] - euler).abs() < 1e-12);
        }
        assert!((t.point(100)[0] - (-1.0f64).exp()).abs() < dt);
    }

    #[test]
    fn deterministic_given_stream() {
        let m = ou_multiscale(1.0, 0.1, PeriodicComponent::sine());
        let a = simulate_multiscale(&m, 5.0, 1e-4, RandomStream::new(9, 3), &[0.0]).unwrap();
        let b = simulate_multiscale(&m, 5.0, 1e-4, RandomStream::new(9, 3), &[0.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed_record(), Some(RandomStream::new(9, 3)));
        let c = simulate_multiscale(&m, 5.0, 1e-4, RandomStream::new(9, 4), &[0.0]).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn blow_up_is_reported() {
        let m = MultiscaleModel::new(
            SlowPotentialBasis::quadratic_1d(),
            FastPotential::one_dim(PeriodicComponent::zero()),
            vec![-50.0],
            1.0,
            0.1,
        )
        .unwrap();
        let err = simulate_multiscale(&m, 100.0, 0.01, RandomStream::new(0, 0), &[1.0]).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn zero_diffusion_effective_is_gradient_flow() {
        let model = EffectiveModel::scalar(SlowPotentialBasis::quadratic_1d(), &[1.0], 0.0).unwrap();
        let t = simulate_effective(&model, 5.0, 0.01, RandomStream::new(0, 0), &[2.0]).unwrap();
        let energy: Vec<f64> = (0..t.len()).map(|k| 0.5 * t.point(k)[0].powi(2)).collect();
        assert!(energy.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn grid_law() {
        let m = ou_multiscale(1.0, 0.1, PeriodicComponent::sine());
        let t = simulate_multiscale(&m, 1.0, 0.3, RandomStream::new(0, 0), &[0.0]).unwrap();
        assert_eq!(t.len(), 4);
        assert!(simulate_multiscale(&m, 0.1, 0.3, RandomStream::new(0, 0), &[0.0]).is_err());
    }

    #[test]
    fn quadratic_variation_basics() {
        let flat = Trajectory::from_scalar(0.1, vec![2.0; 10]).unwrap();
        assert_eq!(quadratic_variation(&flat)[(0, 0)], 0.0);
        let zigzag = Trajectory::from_scalar(1.0, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(quadratic_variation(&zigzag)[(0, 0)], 3.0);
        let planar = Trajectory::new(2, 1.0, vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            quadratic_variation(&planar),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])
        );
    }
}
