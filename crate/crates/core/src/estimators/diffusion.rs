use nalgebra::DMatrix;

use super::drift::mle_drift_traced;
use super::spd::solve_spd_least_squares;
use super::trace::{checkpoint_steps, lookup, TracePoint, DEFAULT_CHECKPOINTS};
use super::{Diagnostics, DiffusionEstimate, DiffusionMethod, DriftEstimate, FEW_SAMPLES};
use crate::error::{Error, Result};
use crate::filtering::FilterKind;
use crate::linalg::{sym_sqrt_psd, symmetric_part};
use crate::sde::{width_in_steps, SlowPotentialBasis, Trajectory};

/// Relative tolerance for treating the QV matrix as a multiple of the identity.
const ISOTROPY_TOL: f64 = 0.01;

/// `sum (X_{(i+1)s} - X_{is})^{(x)2} / (2 T)` over the grid with stride `s`.
fn increment_pass(
    x: &Trajectory,
    stride: usize,
    method: DiffusionMethod,
    checkpoints: usize,
) -> DiffusionEstimate {
    let d = x.dim();
    let increments = x.n_steps() / stride;
    let h = stride as f64 * x.dt();
    let mut qv = vec![0.0; d * d];
    let mut inc = vec![0.0; d];
    let marks = checkpoint_steps(increments, checkpoints);
    let mut next_mark = marks.iter().peekable();
    let mut trace = Vec::with_capacity(marks.len());
    let finish = |qv: &[f64], time: f64| {
        symmetric_part(&DMatrix::from_row_slice(d, d, qv)) / (2.0 * time)
    };
    for i in 0..increments {
        let (a, b) = (x.point(i * stride), x.point((i + 1) * stride));
        for j in 0..d {
            inc[j] = b[j] - a[j];
        }
        for r in 0..d {
            for c in 0..d {
                qv[r * d + c] += inc[r] * inc[c];
            }
        }
        if next_mark.peek() == Some(&&(i + 1)) {
            next_mark.next();
            let time = (i + 1) as f64 * h;
            trace.push(TracePoint {
                time,
                value: finish(&qv, time),
            });
        }
    }
    DiffusionEstimate {
        sigma: finish(&qv, increments as f64 * h),
        method,
        trace: (checkpoints > 0).then_some(trace),
        diagnostics: Diagnostics {
            few_samples: increments < FEW_SAMPLES,
            ..Diagnostics::default()
        },
    }
}

/// Quadratic-variation estimator `<X>_T / (2T)`.
pub fn qv_sigma(traj: &Trajectory) -> DiffusionEstimate {
    qv_sigma_traced(traj, 0)
}

pub fn qv_sigma_traced(traj: &Trajectory, checkpoints: usize) -> DiffusionEstimate {
    increment_pass(traj, 1, DiffusionMethod::Qv, checkpoints)
}

/// Quadratic variation of the path subsampled with spacing `delta`.
pub fn subsampled_diffusion(traj: &Trajectory, delta: f64) -> Result<DiffusionEstimate> {
    subsampled_diffusion_traced(traj, delta, 0)
}

pub fn subsampled_diffusion_traced(
    traj: &Trajectory,
    delta: f64,
    checkpoints: usize,
) -> Result<DiffusionEstimate> {
    let stride = width_in_steps(delta, traj.dt())?;
    if traj.n_steps() < stride {
        return Err(Error::TrajectoryTooShort {
            points: traj.len(),
            required: stride + 1,
        });
    }
    Ok(increment_pass(
        traj,
        stride,
        DiffusionMethod::SubsampledHat { delta },
        checkpoints,
    ))
}

/// Filtered diffusion estimator
/// `(1 / (delta T)) int_delta^T (X(t) - Z(t)) (X(t) - X(t - delta))^T dt`,
/// symmetrized. The integral starts at grid index `ceil(delta / dt)`.
pub fn hat_sigma_filtered(
    traj: &Trajectory,
    filtered: &Trajectory,
    delta: f64,
) -> Result<DiffusionEstimate> {
    hat_sigma_filtered_traced(traj, filtered, delta, 0)
}

pub fn hat_sigma_filtered_traced(
    traj: &Trajectory,
    filtered: &Trajectory,
    delta: f64,
    checkpoints: usize,
) -> Result<DiffusionEstimate> {
    traj.check_same_grid(filtered)?;
    let w = width_in_steps(delta, traj.dt())?;
    let spec = filtered.filter().ok_or_else(|| {
        Error::invalid("filtered", "trajectory carries no filter provenance")
    })?;
    let method = match spec.kind {
        FilterKind::MovingAverage => DiffusionMethod::FilteredHatMa { delta },
        FilterKind::Exponential => DiffusionMethod::FilteredHatExp {
            delta,
            beta: spec.beta,
        },
    };
    let dt = traj.dt();
    let start = ((delta / dt * (1.0 - 1e-12)).ceil() as usize).max(w);
    let n = traj.n_steps();
    if start >= n {
        return Err(Error::TrajectoryTooShort {
            points: traj.len(),
            required: start + 2,
        });
    }
    let d = traj.dim();
    let scale = w as f64 * dt;
    let mut acc = vec![0.0; d * d];
    let mut gap = vec![0.0; d];
    let mut inc = vec![0.0; d];
    let marks = checkpoint_steps(n - start, checkpoints);
    let mut next_mark = marks.iter().peekable();
    let mut trace = Vec::with_capacity(marks.len());
    let finish = |acc: &[f64], time: f64| {
        symmetric_part(&DMatrix::from_row_slice(d, d, acc)) * (dt / (scale * time))
    };
    for k in start..n {
        let (xk, zk, xl) = (traj.point(k), filtered.point(k), traj.point(k - w));
        for j in 0..d {
            gap[j] = xk[j] - zk[j];
            inc[j] = xk[j] - xl[j];
        }
        for r in 0..d {
            for c in 0..d {
                acc[r * d + c] += gap[r] * inc[c];
            }
        }
        let used = k + 1 - start;
        if next_mark.peek() == Some(&&used) {
            next_mark.next();
            let time = traj.time(k + 1);
            trace.push(TracePoint {
                time,
                value: finish(&acc, time),
            });
        }
    }
    Ok(DiffusionEstimate {
        sigma: finish(&acc, traj.horizon()),
        method,
        trace: (checkpoints > 0).then_some(trace),
        diagnostics: Diagnostics::default(),
    })
}

/// Diffusion estimator built from a drift estimate `A_hat`: the QV estimate
/// rescaled by the least-squares factor relating `A_hat` to the MLE.
pub fn tilde_sigma(
    traj: &Trajectory,
    basis: &SlowPotentialBasis,
    a_hat: &DriftEstimate,
) -> Result<DiffusionEstimate> {
    let checkpoints = if a_hat.trace().is_some() {
        DEFAULT_CHECKPOINTS
    } else {
        0
    };
    let mle = mle_drift_traced(traj, basis, checkpoints).map_err(|e| match e {
        Error::SingularSystem { .. } => Error::DegenerateAlpha,
        other => other,
    })?;
    let qv = qv_sigma_traced(traj, checkpoints);
    tilde_sigma_from_parts(&mle, &qv, a_hat)
}

/// [`tilde_sigma`] from precomputed MLE drift and QV diffusion estimates.
pub fn tilde_sigma_from_parts(
    mle: &DriftEstimate,
    qv: &DiffusionEstimate,
    a_hat: &DriftEstimate,
) -> Result<DiffusionEstimate> {
    if mle.stacked().shape() != a_hat.stacked().shape() {
        return Err(Error::DimensionMismatch {
            expected: mle.stacked().len(),
            found: a_hat.stacked().len(),
        });
    }
    if qv.matrix().nrows() != mle.dim() {
        return Err(Error::DimensionMismatch {
            expected: mle.dim(),
            found: qv.matrix().nrows(),
        });
    }
    if a_hat.stacked().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("A_hat", "must be finite"));
    }
    let (sigma, diagnostics) = tilde_value(mle.stacked(), qv.matrix(), a_hat.stacked())?;
    let trace = match (a_hat.trace(), mle.trace(), qv.trace()) {
        (Some(at), Some(mt), Some(qt)) => Some(
            at.iter()
                .filter_map(|p| {
                    let m = lookup(mt, p.time)?;
                    let q = lookup(qt, p.time)?;
                    let (value, _) = tilde_value(&m.value, &q.value, &p.value).ok()?;
                    Some(TracePoint {
                        time: p.time,
                        value,
                    })
                })
                .collect(),
        ),
        _ => None,
    };
    Ok(DiffusionEstimate {
        sigma,
        method: DiffusionMethod::Tilde(a_hat.method()),
        trace,
        diagnostics,
    })
}

fn tilde_value(
    mle: &DMatrix<f64>,
    qv: &DMatrix<f64>,
    a_hat: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Diagnostics)> {
    let d = mle.ncols();
    if d == 1 {
        let aa = mle.dot(mle);
        if aa.is_nan() || aa <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateAlpha);
        }
        let ratio = mle.dot(a_hat) / aa;
        return Ok((qv * ratio, Diagnostics::default()));
    }
    let fit = solve_spd_least_squares(mle, a_hat)?;
    let q = qv.trace() / d as f64;
    let isotropic = (qv - DMatrix::identity(d, d) * q).amax() <= ISOTROPY_TOL * q.abs();
    let sigma = if isotropic {
        &fit.k * q
    } else {
        let root = sym_sqrt_psd(qv, 0.0);
        symmetric_part(&(&root * &fit.k * &root))
    };
    Ok((
        sigma,
        Diagnostics {
            anisotropic_qv: !isotropic,
            spd_converged: Some(fit.converged),
            ..Diagnostics::default()
        },
    ))
}
