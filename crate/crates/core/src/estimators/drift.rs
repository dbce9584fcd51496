use nalgebra::DMatrix;

use super::trace::{checkpoint_steps, TracePoint};
use super::{DriftEstimate, DriftMethod};
use crate::error::{Error, Result};
use crate::filtering::FilterKind;
use crate::linalg::solve_checked;
use crate::sde::{width_in_steps, SlowPotentialBasis, Trajectory};

/// Running sums of `M = int grad V(Z) (x) grad V(X) dt` and `v = int grad V(Z) (x) dX`.
struct DriftSums {
    p: usize,
    d: usize,
    m: Vec<f64>,
    v: Vec<f64>,
    h: f64,
    steps: usize,
}

impl DriftSums {
    fn new(p: usize, d: usize, h: f64) -> Self {
        Self {
            p,
            d,
            m: vec![0.0; p * p],
            v: vec![0.0; p * d],
            h,
            steps: 0,
        }
    }

    fn time(&self) -> f64 {
        self.steps as f64 * self.h
    }

    #[inline]
    #[allow(clippy::needless_range_loop)]
    fn push(&mut self, gz: &[f64], gx: &[f64], dx: &[f64]) {
        let h = self.h;
        for r in 0..self.p {
            let gr = gz[r];
            let row = &mut self.m[r * self.p..(r + 1) * self.p];
            for (mc, gc) in row.iter_mut().zip(gx) {
                *mc += gr * gc * h;
            }
            let vrow = &mut self.v[r * self.d..(r + 1) * self.d];
            for (vc, dc) in vrow.iter_mut().zip(dx) {
                *vc += gr * dc;
            }
        }
        self.steps += 1;
    }

    /// Solves `-M A = v` with both sides normalized by the elapsed time.
    fn solve(&self) -> Result<(DMatrix<f64>, f64)> {
        let m = DMatrix::from_row_slice(self.p, self.p, &self.m) / self.time();
        let v = DMatrix::from_row_slice(self.p, self.d, &self.v) / self.time();
        solve_checked(&m, &(-v))
    }
}

/// Shared pass for every drift estimator: `z = None` uses the raw path in
/// both slots, `stride` subsamples the grid.
fn drift_pass(
    x: &Trajectory,
    z: Option<&Trajectory>,
    basis: &SlowPotentialBasis,
    stride: usize,
    method: DriftMethod,
    checkpoints: usize,
) -> Result<DriftEstimate> {
    let d = x.dim();
    if basis.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: d,
        });
    }
    if let Some(z) = z {
        x.check_same_grid(z)?;
    }
    let increments = x.n_steps() / stride;
    if increments < basis.len() {
        return Err(Error::TrajectoryTooShort {
            points: increments + 1,
            required: basis.len() + 1,
        });
    }
    let p = d * basis.len();
    let h = stride as f64 * x.dt();
    let mut sums = DriftSums::new(p, d, h);
    let mut gx = vec![0.0; p];
    let mut gz = vec![0.0; p];
    let mut dx = vec![0.0; d];
    let marks = checkpoint_steps(increments, checkpoints);
    let mut next_mark = marks.iter().peekable();
    let mut trace = Vec::with_capacity(marks.len());
    for i in 0..increments {
        let k = i * stride;
        let xk = x.point(k);
        let xn = x.point(k + stride);
        basis.stacked_gradient_into(xk, &mut gx);
        for j in 0..d {
            dx[j] = xn[j] - xk[j];
        }
        match z {
            Some(z) => {
                basis.stacked_gradient_into(z.point(k), &mut gz);
                sums.push(&gz, &gx, &dx);
            }
            None => sums.push(&gx, &gx, &dx),
        }
        if next_mark.peek() == Some(&&(i + 1)) {
            next_mark.next();
            if let Ok((value, _)) = sums.solve() {
                trace.push(TracePoint {
                    time: sums.time(),
                    value,
                });
            }
        }
    }
    let (stacked, condition_number) = sums.solve()?;
    Ok(DriftEstimate {
        stacked,
        method,
        condition_number,
        trace: (checkpoints > 0).then_some(trace),
    })
}

/// Maximum likelihood drift estimator on the full-resolution path.
pub fn mle_drift(traj: &Trajectory, basis: &SlowPotentialBasis) -> Result<DriftEstimate> {
    mle_drift_traced(traj, basis, 0)
}

pub fn mle_drift_traced(
    traj: &Trajectory,
    basis: &SlowPotentialBasis,
    checkpoints: usize,
) -> Result<DriftEstimate> {
    drift_pass(traj, None, basis, 1, DriftMethod::Mle, checkpoints)
}

/// MLE evaluated on the grid subsampled with spacing `delta` (rounded to whole steps).
pub fn subsampled_drift(
    traj: &Trajectory,
    basis: &SlowPotentialBasis,
    delta: f64,
) -> Result<DriftEstimate> {
    subsampled_drift_traced(traj, basis, delta, 0)
}

pub fn subsampled_drift_traced(
    traj: &Trajectory,
    basis: &SlowPotentialBasis,
    delta: f64,
    checkpoints: usize,
) -> Result<DriftEstimate> {
    let stride = width_in_steps(delta, traj.dt())?;
    drift_pass(
        traj,
        None,
        basis,
        stride,
        DriftMethod::Subsampled { delta },
        checkpoints,
    )
}

/// Filtered-data drift estimator: `grad V(Z)` replaces one occurrence of `grad V(X)`
/// in `M` and the integrator in `v`; the increment stays the raw `dX`.
pub fn filtered_drift(
    traj: &Trajectory,
    filtered: &Trajectory,
    basis: &SlowPotentialBasis,
) -> Result<DriftEstimate> {
    filtered_drift_traced(traj, filtered, basis, 0)
}

pub fn filtered_drift_traced(
    traj: &Trajectory,
    filtered: &Trajectory,
    basis: &SlowPotentialBasis,
    checkpoints: usize,
) -> Result<DriftEstimate> {
    let spec = filtered.filter().ok_or_else(|| {
        Error::invalid("filtered", "trajectory carries no filter provenance")
    })?;
    let method = match spec.kind {
        FilterKind::MovingAverage => DriftMethod::FilteredMa { delta: spec.delta },
        FilterKind::Exponential => DriftMethod::FilteredExp {
            delta: spec.delta,
            beta: spec.beta,
        },
    };
    drift_pass(traj, Some(filtered), basis, 1, method, checkpoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtering::{filter_exponential, filter_moving_average};
    use crate::sde::{simulate_effective, EffectiveModel, RandomStream};

    fn ou_path(t: f64, seed: u64) -> Trajectory {
        let model = EffectiveModel::scalar(SlowPotentialBasis::quadratic_1d(), &[1.0], 1.0).unwrap();
        simulate_effective(&model, t, 1e-2, RandomStream::new(seed, 0), &[0.0]).unwrap()
    }

    #[test]
    fn stride_one_and_identity_filter_collapse_to_mle() {
        let basis = SlowPotentialBasis::polynomial_1d(3).unwrap();
        let x = ou_path(200.0, 1);
        let mle = mle_drift(&x, &basis).unwrap();
        let sub = subsampled_drift(&x, &basis, x.dt()).unwrap();
        let id = filter_moving_average(&x, x.dt()).unwrap();
        let filt = filtered_drift(&x, &id, &basis).unwrap();
        assert_eq!(mle.stacked(), sub.stacked());
        assert_eq!(mle.stacked(), filt.stacked());
        assert!(matches!(filt.method(), DriftMethod::FilteredMa { .. }));
    }

    #[test]
    fn ou_mle_closed_form() {
        // for V = x^2/2: A = -sum X_k dX_k / (dt sum X_k^2)
        let x = ou_path(100.0, 2);
        let v = x.values();
        let num: f64 = (0..x.n_steps()).map(|k| v[k] * (v[k + 1] - v[k])).sum();
        let den: f64 = (0..x.n_steps()).map(|k| v[k] * v[k] * x.dt()).sum();
        let est = mle_drift(&x, &SlowPotentialBasis::quadratic_1d()).unwrap();
        assert!((est.coefficients()[0] + num / den).abs() < 1e-10);
        assert!(est.condition_number() >= 1.0);
    }

    #[test]
    fn only_gradients_enter_the_system() {
        // Two encodings of x^2/2 that differ only in how the value is computed.
        let x = ou_path(50.0, 3);
        let a = mle_drift(&x, &SlowPotentialBasis::polynomial_1d(2).unwrap()).unwrap();
        let b = mle_drift(
            &x,
            &SlowPotentialBasis::new(
                1,
                vec![
                    crate::sde::BasisTerm::QuadraticNorm,
                    crate::sde::BasisTerm::Monomial { power: 1 },
                ],
            )
            .unwrap(),
        )
        .unwrap();
        assert!((a.stacked() - b.stacked()).amax() < 1e-12);
    }

    #[test]
    fn zero_gradient_path_is_singular() {
        let x = Trajectory::from_scalar(0.1, vec![0.0; 100]).unwrap();
        assert!(matches!(
            mle_drift(&x, &SlowPotentialBasis::quadratic_1d()),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn errors_on_short_or_mismatched_input() {
        let basis = SlowPotentialBasis::polynomial_1d(6).unwrap();
        let x = Trajectory::from_scalar(0.1, vec![0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(mle_drift(&x, &basis), Err(Error::TrajectoryTooShort { .. })));
        let y = ou_path(10.0, 1);
        let z = filter_moving_average(&ou_path(5.0, 1), 0.5).unwrap();
        assert!(matches!(
            filtered_drift(&y, &z, &SlowPotentialBasis::quadratic_1d()),
            Err(Error::GridMismatch { .. })
        ));
        assert!(filtered_drift(&y, &y, &SlowPotentialBasis::quadratic_1d()).is_err());
        assert!(matches!(
            subsampled_drift(&y, &SlowPotentialBasis::quadratic_1d(), 1e-3),
            Err(Error::TooNarrow { .. })
        ));
    }

    #[test]
    fn trace_ends_at_final_estimate() {
        let x = ou_path(100.0, 4);
        let z = filter_exponential(&x, 1.0, 1.0).unwrap();
        let est = filtered_drift_traced(&x, &z, &SlowPotentialBasis::quadratic_1d(), 50).unwrap();
        let trace = est.trace().unwrap();
        let last = trace.last().unwrap();
        assert!((last.time - x.horizon()).abs() < 1e-9);
        assert_eq!(&last.value, est.stacked());
        assert!(trace.windows(2).all(|w| w[0].time < w[1].time));
    }
}
