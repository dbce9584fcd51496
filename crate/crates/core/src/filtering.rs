//! Low-pass filtering of sample paths.
//!
//! Both kernels are causal: the filtered value at `t_k` only looks at samples
//! up to `t_k`. The moving average uses a trailing window of
//! `w = round(delta / dt)` samples with an expanding window before `t = delta`.
//! The exponential kernel `k(r) = C_beta / delta^(1/beta) exp(-r^beta / delta)`
//! is integrated exactly against the piecewise-constant (left-point) path;
//! times before zero see the initial value `X_0`, which keeps the filter
//! normalized from the first sample on.

use std::fmt;

use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::sde::{width_in_steps, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    MovingAverage,
    Exponential,
}

/// Which kernel to apply, its width `delta` and (exponential only) shape `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub delta: f64,
    pub beta: f64,
}

impl FilterSpec {
    pub fn moving_average(delta: f64) -> Result<Self> {
        check_positive("delta", delta)?;
        Ok(Self {
            kind: FilterKind::MovingAverage,
            delta,
            beta: f64::INFINITY,
        })
    }

    pub fn exponential(delta: f64, beta: f64) -> Result<Self> {
        check_positive("delta", delta)?;
        check_positive("beta", beta)?;
        Ok(Self {
            kind: FilterKind::Exponential,
            delta,
            beta,
        })
    }

    pub fn apply(&self, traj: &Trajectory) -> Result<Trajectory> {
        match self.kind {
            FilterKind::MovingAverage => filter_moving_average(traj, self.delta),
            FilterKind::Exponential => filter_exponential(traj, self.delta, self.beta),
        }
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FilterKind::MovingAverage => write!(f, "ma(delta={})", self.delta),
            FilterKind::Exponential => write!(f, "exp(delta={}, beta={})", self.delta, self.beta),
        }
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be positive and finite"))
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Trailing moving average of width `delta`, O(n).
pub fn filter_moving_average(traj: &Trajectory, delta: f64) -> Result<Trajectory> {
    let spec = FilterSpec::moving_average(delta)?;
    let w = width_in_steps(delta, traj.dt())?;
    if w == 1 {
        return Ok(traj.derived(traj.values().to_vec(), spec));
    }
    let d = traj.dim();
    let len = traj.len();
    let x = traj.values();
    let mut z = vec![0.0; x.len()];
    for axis in 0..d {
        let mut acc = CompensatedSum::default();
        for k in 0..len {
            acc.add(x[k * d + axis]);
            if k >= w {
                acc.add(-x[(k - w) * d + axis]);
            }
            let count = (k + 1).min(w);
            z[k * d + axis] = acc.value() / count as f64;
        }
    }
    Ok(traj.derived(z, spec))
}

/// Exponential-kernel filter. `beta = 1` runs the exact O(n) recursion;
/// other shapes use a truncated convolution.
pub fn filter_exponential(traj: &Trajectory, delta: f64, beta: f64) -> Result<Trajectory> {
    let spec = FilterSpec::exponential(delta, beta)?;
    let z = if beta == 1.0 {
        exponential_recursion(traj, delta)
    } else {
        exponential_convolution(traj, delta, beta)
    };
    Ok(traj.derived(z, spec))
}

fn exponential_recursion(traj: &Trajectory, delta: f64) -> Vec<f64> {
    let d = traj.dim();
    let x = traj.values();
    let decay = (-traj.dt() / delta).exp();
    let gain = -(-traj.dt() / delta).exp_m1();
    let mut z = vec![0.0; x.len()];
    z[..d].copy_from_slice(&x[..d]);
    for k in 1..traj.len() {
        for axis in 0..d {
            z[k * d + axis] = decay * z[(k - 1) * d + axis] + gain * x[(k - 1) * d + axis];
        }
    }
    z
}

/// Kernel mass beyond lag `r`: `Q(1/beta, r^beta / delta)`.
fn kernel_tail(r: f64, delta: f64, beta: f64) -> f64 {
    if r <= 0.0 {
        1.0
    } else {
        gamma_ur(1.0 / beta, r.powf(beta) / delta)
    }
}

/// Tail mass below which the kernel is truncated.
const TRUNCATION_MASS: f64 = 1e-12;

fn exponential_convolution(traj: &Trajectory, delta: f64, beta: f64) -> Vec<f64> {
    let d = traj.dim();
    let dt = traj.dt();
    let n = traj.n_steps();
    let x = traj.values();
    // tail[j] = mass of the kernel on lags > j dt
    let mut tail = vec![1.0];
    while tail.len() <= n {
        let q = kernel_tail(tail.len() as f64 * dt, delta, beta);
        tail.push(q);
        if q < TRUNCATION_MASS {
            break;
        }
    }
    let support = tail.len() - 1;
    let weights: Vec<f64> = tail.windows(2).map(|p| p[0] - p[1]).collect();
    let mut z = vec![0.0; x.len()];
    for k in 0..traj.len() {
        let reach = k.min(support);
        let oldest = k - reach;
        for axis in 0..d {
            let mut acc = CompensatedSum::default();
            for (m, w) in weights[..reach].iter().enumerate() {
                acc.add(w * x[(k - m - 1) * d + axis]);
            }
            acc.add(tail[reach] * x[oldest * d + axis]);
            z[k * d + axis] = acc.value();
        }
    }
    z
}
