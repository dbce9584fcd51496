//! The three reference experiments: a multiscale Ornstein-Uhlenbeck process,
//! a six-term polynomial model with three stable points, and a planar model
//! with two Gaussian wells.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use super::config::{DeltaRule, DtRule, Method, SweepConfig};
use crate::error::{Error, Result};
use crate::sde::{BasisTerm, FastPotential, MultiscaleModel, PeriodicComponent, SlowPotentialBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    /// `V = x^2/2`, `p = sin`, `alpha = 1`.
    Ou,
    /// `V = (x^6/6, ..., x)`, `p = sin`.
    Semiparam6,
    /// Two Gaussian wells, a Gaussian bump and a quartic confinement in the plane,
    /// `p(y) = sin(y_1) + sin(y_2)^2`.
    Twod,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::Ou, ModelFamily::Semiparam6, ModelFamily::Twod];

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Ou => "ou",
            ModelFamily::Semiparam6 => "semiparam6",
            ModelFamily::Twod => "twod",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelFamily::Twod => 2,
            _ => 1,
        }
    }

    pub fn basis(&self) -> SlowPotentialBasis {
        match self {
            ModelFamily::Ou => SlowPotentialBasis::quadratic_1d(),
            ModelFamily::Semiparam6 => SlowPotentialBasis::polynomial_1d(6).expect("valid degree"),
            ModelFamily::Twod => SlowPotentialBasis::new(
                2,
                vec![
                    BasisTerm::Gaussian { center: vec![2.0, 2.0] },
                    BasisTerm::Gaussian { center: vec![-2.0, -2.0] },
                    BasisTerm::Gaussian { center: vec![0.0, 0.0] },
                    BasisTerm::QuarticNorm,
                ],
            )
            .expect("valid planar basis"),
        }
    }

    pub fn alpha(&self) -> Vec<f64> {
        match self {
            ModelFamily::Ou => vec![1.0],
            ModelFamily::Semiparam6 => vec![1.0, -1.0, -5.25, 4.75, 5.0, -3.0],
            ModelFamily::Twod => vec![-15.0, -15.0, 10.0, 1.0],
        }
    }

    pub fn fast(&self) -> FastPotential {
        match self {
            ModelFamily::Ou | ModelFamily::Semiparam6 => {
                FastPotential::one_dim(PeriodicComponent::sine())
            }
            ModelFamily::Twod => FastPotential::Separable(vec![
                PeriodicComponent::sine(),
                PeriodicComponent::sine_squared(),
            ]),
        }
    }

    pub fn multiscale(&self, sigma: f64, epsilon: f64) -> Result<MultiscaleModel> {
        MultiscaleModel::new(self.basis(), self.fast(), self.alpha(), sigma, epsilon)
    }

    /// The experiment's published setup.
    pub fn default_config(&self) -> SweepConfig {
        let (sigmas, epsilons, horizon) = match self {
            ModelFamily::Ou => (vec![0.5, 0.75, 1.0], vec![0.2, 0.1, 0.05], 1e4),
            ModelFamily::Semiparam6 => (vec![1.0], vec![0.05], 5e4),
            ModelFamily::Twod => (vec![1.0], vec![0.1], 2e5),
        };
        SweepConfig {
            experiment: self.name().to_string(),
            model: *self,
            horizon,
            dt: DtRule::EpsilonMinCubed,
            epsilons,
            sigmas,
            deltas: DeltaRule::ZetaGrid,
            methods: Method::ALL.to_vec(),
            beta: 1.0,
            replicates: 1,
            base_seed: 0,
            output: None,
            trace_checkpoints: 0,
            burn_in: 0.0,
            record_wall_time: false,
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config {
                field: "preset".into(),
                reason: format!("unknown preset `{s}` (expected ou, semiparam6 or twod)"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::drift_multiscale;

    #[test]
    fn names_round_trip() {
        for m in ModelFamily::ALL {
            assert_eq!(m.name().parse::<ModelFamily>().unwrap(), m);
        }
        assert!("nope".parse::<ModelFamily>().is_err());
    }

    #[test]
    fn models_build_with_consistent_dimensions() {
        for m in ModelFamily::ALL {
            let model = m.multiscale(1.0, 0.1).unwrap();
            assert_eq!(model.dim(), m.dim());
            assert_eq!(model.alpha().len(), m.basis().len());
        }
    }

    #[test]
    fn semiparametric_slow_potential_has_three_wells() {
        // local minima of alpha . V on a fine grid
        let m = ModelFamily::Semiparam6;
        let (basis, alpha) = (m.basis(), m.alpha());
        let xs: Vec<f64> = (0..=4000).map(|i| -4.0 + 8.0 * i as f64 / 4000.0).collect();
        let v: Vec<f64> = xs.iter().map(|x| basis.weighted_value(&alpha, &[*x])).collect();
        let minima = (1..v.len() - 1).filter(|&i| v[i] < v[i - 1] && v[i] < v[i + 1]).count();
        assert_eq!(minima, 3);
    }

    #[test]
    fn planar_drift_is_symmetric_under_reflection() {
        let model = ModelFamily::Twod.multiscale(1.0, 0.1).unwrap();
        let zero = FastPotential::zero(2);
        let slow = MultiscaleModel::new(model.basis().clone(), zero, model.alpha().to_vec(), 1.0, 0.1).unwrap();
        let a = drift_multiscale(&slow, &[1.3, 0.4]);
        let b = drift_multiscale(&slow, &[-1.3, -0.4]);
        assert!((a[0] + b[0]).abs() < 1e-12 && (a[1] + b[1]).abs() < 1e-12);
    }
}
