use crate::error::{Error, Result};
use crate::filtering::FilterSpec;

use super::rng::RandomStream;

/// Number of grid steps `floor(T / dt)`, tolerant to round-off when `T / dt`
/// is an integer up to a few ulps (e.g. `1e4 / 0.05^3`).
pub fn grid_steps(horizon: f64, dt: f64) -> usize {
    let ratio = horizon / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.floor() as usize
    }
}

/// Number of grid samples spanned by a width `delta`, at least one.
pub(crate) fn width_in_steps(delta: f64, dt: f64) -> Result<usize> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive and finite"));
    }
    if delta < dt * (1.0 - 1e-9) {
        return Err(Error::TooNarrow { delta, dt });
    }
    Ok(((delta / dt).round() as usize).max(1))
}

/// A sample path on the uniform grid `0, dt, ..., n dt`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    dt: f64,
    values: Vec<f64>,
    seed: Option<RandomStream>,
    filter: Option<FilterSpec>,
}

impl Trajectory {
    /// `values` holds `n + 1` points of dimension `dim`, `n >= 1`.
    pub fn new(dim: usize, dt: f64, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                "values",
                format!("length {} is not a multiple of dim {dim}", values.len()),
            ));
        }
        let points = values.len() / dim;
        if points < 2 {
            return Err(Error::TrajectoryTooShort {
                points,
                required: 2,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "must be finite"));
        }
        Ok(Self {
            dim,
            dt,
            values,
            seed: None,
            filter: None,
        })
    }

    /// One-dimensional trajectory from a slice of samples.
    pub fn from_scalar(dt: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(1, dt, values)
    }

    pub(crate) fn with_seed(mut self, seed: RandomStream) -> Self {
        self.seed = Some(seed);
        self
    }

    pub(crate) fn derived(&self, values: Vec<f64>, filter: FilterSpec) -> Self {
        Self {
            dim: self.dim,
            dt: self.dt,
            values,
            seed: None,
            filter: Some(filter),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of steps `n`; the path has `n + 1` points.
    pub fn n_steps(&self) -> usize {
        self.len() - 1
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Final time `T = n dt`.
    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    /// `k dt`, computed from the index rather than accumulated.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Samples of one coordinate.
    pub fn component(&self, axis: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(axis).step_by(self.dim).copied()
    }

    pub fn seed_record(&self) -> Option<RandomStream> {
        self.seed
    }

    /// The filter that produced this trajectory, if it is a filtered path.
    pub fn filter(&self) -> Option<&FilterSpec> {
        self.filter.as_ref()
    }

    /// Drops the leading `fraction` of the path and restarts the clock at zero.
    pub fn burn_in(&self, fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::invalid("burn_in", "must lie in [0, 1)"));
        }
        let skip = (self.n_steps() as f64 * fraction).floor() as usize;
        let mut out = Self::new(self.dim, self.dt, self.values[skip * self.dim..].to_vec())?;
        out.seed = self.seed;
        out.filter = self.filter;
        Ok(out)
    }

    pub(crate) fn check_same_grid(&self, other: &Trajectory) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::GridMismatch {
                reason: format!("dimensions {} and {}", self.dim, other.dim),
            });
        }
        if self.len() != other.len() {
            return Err(Error::GridMismatch {
                reason: format!("lengths {} and {}", self.len(), other.len()),
            });
        }
        if self.dt != other.dt {
            return Err(Error::GridMismatch {
                reason: format!("dt {} and {}", self.dt, other.dt),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_steps_absorbs_roundoff() {
        let dt = 0.05f64.powi(3);
        assert_eq!(grid_steps(1e4, dt), 80_000_000);
        assert_eq!(grid_steps(1.0, 0.3), 3);
        assert_eq!(grid_steps(1.0, 0.1), 10);
    }

    #[test]
    fn rejects_short_and_nonfinite() {
        assert!(matches!(
            Trajectory::from_scalar(0.1, vec![1.0]),
            Err(Error::TrajectoryTooShort { .. })
        ));
        assert!(Trajectory::from_scalar(0.1, vec![1.0, f64::NAN]).is_err());
        assert!(Trajectory::from_scalar(0.0, vec![1.0, 2.0]).is_err());
        assert!(Trajectory::new(2, 0.1, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn times_are_index_derived() {
        let t = Trajectory::from_scalar(0.1, vec![0.0; 1001]).unwrap();
        assert_eq!(t.time(1000), 1000.0 * 0.1);
        assert_eq!(t.horizon(), 1000.0 * 0.1);
    }

    #[test]
    fn width_rounding() {
        assert_eq!(width_in_steps(2.0, 1.0).unwrap(), 2);
        assert_eq!(width_in_steps(1.0, 1.0).unwrap(), 1);
        assert_eq!(width_in_steps(0.05, 0.05f64.powi(3)).unwrap(), 400);
        assert!(matches!(width_in_steps(0.5, 1.0), Err(Error::TooNarrow { .. })));
    }

    #[test]
    fn components_and_burn_in() {
        let t = Trajectory::new(2, 1.0, vec![0.0, 10.0, 1.0, 11.0, 2.0, 12.0, 3.0, 13.0]).unwrap();
        assert_eq!(t.component(1).collect::<Vec<_>>(), vec![10.0, 11.0, 12.0, 13.0]);
        let b = t.burn_in(0.5).unwrap();
        assert_eq!(b.point(0), &[1.0, 11.0]);
        assert_eq!(b.n_steps(), 2);
    }
}
