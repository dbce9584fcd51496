//! Sweep configuration, read from a flat TOML file.
//!
//! ```toml
//! model = "ou"                 # required: ou, semiparam6 or twod
//! experiment = "ou-desk"
//! T = 1000.0
//! dt = "epsilon_min_cubed"     # or a number
//! epsilon = [0.1, 0.05]
//! sigma = [1.0]
//! delta = "zeta_grid"          # or a list of widths
//! methods = ["drift_ma", "hat_ma", "tilde_ma"]
//! beta = 1.0
//! replicates = 8
//! base_seed = 7
//! output = "results.csv"
//! trace_checkpoints = 0
//! burn_in = 0.0
//! record_wall_time = false
//! ```
//!
//! Keys left out take the value of the model's preset.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::presets::ModelFamily;
use crate::error::{Error, Result};

/// Grid spacing: a fixed value or `eps_min^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    Fixed(f64),
    EpsilonMinCubed,
}

/// Filter and subsampling widths: an explicit list or `eps^(i/10)`, `i = 0..=20`.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaRule {
    List(Vec<f64>),
    ZetaGrid,
}

impl DeltaRule {
    pub fn widths(&self, epsilon: f64) -> Vec<f64> {
        match self {
            DeltaRule::List(v) => v.clone(),
            DeltaRule::ZetaGrid => (0..=20).map(|i| epsilon.powf(i as f64 / 10.0)).collect(),
        }
    }
}

/// Estimator selected in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mle,
    Qv,
    DriftSub,
    DriftMa,
    DriftExp,
    HatSub,
    HatMa,
    HatExp,
    TildeSub,
    TildeMa,
    TildeExp,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Mle,
        Method::Qv,
        Method::DriftSub,
        Method::DriftMa,
        Method::DriftExp,
        Method::HatSub,
        Method::HatMa,
        Method::HatExp,
        Method::TildeSub,
        Method::TildeMa,
        Method::TildeExp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Qv => "qv",
            Method::DriftSub => "drift_sub",
            Method::DriftMa => "drift_ma",
            Method::DriftExp => "drift_exp",
            Method::HatSub => "hat_sub",
            Method::HatMa => "hat_ma",
            Method::HatExp => "hat_exp",
            Method::TildeSub => "tilde_sub",
            Method::TildeMa => "tilde_ma",
            Method::TildeExp => "tilde_exp",
        }
    }

    /// Whether the method takes a width `delta`.
    pub fn uses_delta(&self) -> bool {
        !matches!(self, Method::Mle | Method::Qv)
    }

    /// Whether the method estimates the drift (as opposed to the diffusion).
    pub fn is_drift(&self) -> bool {
        matches!(
            self,
            Method::Mle | Method::DriftSub | Method::DriftMa | Method::DriftExp
        )
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| config_error("methods", format!("unknown method `{s}`")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub experiment: String,
    pub model: ModelFamily,
    pub horizon: f64,
    pub dt: DtRule,
    pub epsilons: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub deltas: DeltaRule,
    pub methods: Vec<Method>,
    /// Shape of the exponential kernel.
    pub beta: f64,
    pub replicates: usize,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
    pub trace_checkpoints: usize,
    /// Leading fraction of each path discarded before estimation.
    pub burn_in: f64,
    /// Fill the `wall_time` column; off by default so reruns are byte-identical.
    pub record_wall_time: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelFamily,
    experiment: Option<String>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    dt: Option<toml::Value>,
    epsilon: Option<Vec<f64>>,
    sigma: Option<Vec<f64>>,
    delta: Option<toml::Value>,
    methods: Option<Vec<Method>>,
    beta: Option<f64>,
    replicates: Option<usize>,
    base_seed: Option<u64>,
    output: Option<PathBuf>,
    trace_checkpoints: Option<usize>,
    burn_in: Option<f64>,
    record_wall_time: Option<bool>,
}

fn config_error(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| format!("line {}", text[..s.start].matches('\n').count() + 1))
                .unwrap_or_else(|| "config".into());
            config_error(&at, e.message().to_string())
        })?;
        let mut cfg = raw.model.default_config();
        if let Some(v) = raw.experiment {
            cfg.experiment = v;
        }
        if let Some(v) = raw.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = raw.dt {
            cfg.dt = match &v {
                toml::Value::String(s) if s == "epsilon_min_cubed" => DtRule::EpsilonMinCubed,
                other => DtRule::Fixed(number(other).ok_or_else(|| {
                    config_error("dt", "expected a number or \"epsilon_min_cubed\"")
                })?),
            };
        }
        if let Some(v) = raw.epsilon {
            cfg.epsilons = v;
        }
        if let Some(v) = raw.sigma {
            cfg.sigmas = v;
        }
        if let Some(v) = raw.delta {
            cfg.deltas = match &v {
                toml::Value::String(s) if s == "zeta_grid" => DeltaRule::ZetaGrid,
                toml::Value::Array(items) => DeltaRule::List(
                    items
                        .iter()
                        .map(number)
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| config_error("delta", "list entries must be numbers"))?,
                ),
                _ => return Err(config_error("delta", "expected a list or \"zeta_grid\"")),
            };
        }
        if let Some(v) = raw.methods {
            cfg.methods = v;
        }
        if let Some(v) = raw.beta {
            cfg.beta = v;
        }
        if let Some(v) = raw.replicates {
            cfg.replicates = v;
        }
        if let Some(v) = raw.base_seed {
            cfg.base_seed = v;
        }
        cfg.output = raw.output.or(cfg.output);
        if let Some(v) = raw.trace_checkpoints {
            cfg.trace_checkpoints = v;
        }
        if let Some(v) = raw.burn_in {
            cfg.burn_in = v;
        }
        if let Some(v) = raw.record_wall_time {
            cfg.record_wall_time = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The grid spacing shared by every cell.
    pub fn dt(&self) -> f64 {
        match self.dt {
            DtRule::Fixed(v) => v,
            DtRule::EpsilonMinCubed => {
                let eps = self.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
                eps * eps * eps
            }
        }
    }

    /// Multiplies the time horizon by `factor`.
    pub fn scale_horizon(&mut self, factor: f64) -> Result<()> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(config_error("scale-T", "must be positive and finite"));
        }
        self.horizon *= factor;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(field, format!("must be positive and finite, got {v}")))
            }
        };
        if self.epsilons.is_empty() {
            return Err(config_error("epsilon", "must not be empty"));
        }
        if self.sigmas.is_empty() {
            return Err(config_error("sigma", "must not be empty"));
        }
        if self.methods.is_empty() {
            return Err(config_error("methods", "must not be empty"));
        }
        for e in &self.epsilons {
            positive("epsilon", *e)?;
        }
        for s in &self.sigmas {
            positive("sigma", *s)?;
        }
        positive("T", self.horizon)?;
        positive("dt", self.dt())?;
        positive("beta", self.beta)?;
        if self.horizon < 2.0 * self.dt() {
            return Err(config_error("T", "must span at least two grid steps"));
        }
        if let DeltaRule::List(v) = &self.deltas {
            if v.is_empty() && self.methods.iter().any(Method::uses_delta) {
                return Err(config_error("delta", "must not be empty"));
            }
            for d in v {
                positive("delta", *d)?;
                if *d < self.dt() * (1.0 - 1e-9) {
                    return Err(config_error(
                        "delta",
                        format!("width {d} is below the grid spacing {}", self.dt()),
                    ));
                }
            }
        }
        if self.replicates == 0 {
            return Err(config_error("replicates", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(config_error("burn_in", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_defaults_fill_missing_keys() {
        let cfg = SweepConfig::from_toml_str("model = \"ou\"\n").unwrap();
        assert_eq!(cfg, ModelFamily::Ou.default_config());
        assert!((cfg.dt() - 0.05f64.powi(3)).abs() < 1e-18);
        assert_eq!(cfg.deltas.widths(0.05).len(), 21);
        assert_eq!(cfg.deltas.widths(0.05)[0], 1.0);
    }

    #[test]
    fn explicit_values_override() {
        let cfg = SweepConfig::from_toml_str(
            "model = \"twod\"\nT = 10\ndt = 0.001\ndelta = [0.1, 1]\nmethods = [\"drift_ma\", \"qv\"]\nreplicates = 3\nbase_seed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.horizon, 10.0);
        assert_eq!(cfg.dt, DtRule::Fixed(0.001));
        assert_eq!(cfg.deltas, DeltaRule::List(vec![0.1, 1.0]));
        assert_eq!(cfg.methods, vec![Method::DriftMa, Method::Qv]);
        assert_eq!((cfg.replicates, cfg.base_seed), (3, 9));
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("model = \"ou\"\nsigma = []\n", "sigma"),
            ("model = \"ou\"\nreplicates = 0\n", "replicates"),
            ("model = \"ou\"\ndt = \"weekly\"\n", "dt"),
            ("model = \"ou\"\ndelta = [1e-9]\n", "delta"),
            ("model = \"ou\"\nepsilon = [-0.1]\n", "epsilon"),
        ];
        for (text, field) in cases {
            match SweepConfig::from_toml_str(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        match SweepConfig::from_toml_str("model = \"ou\"\n\nfoo = 1\n") {
            Err(Error::Config { field, reason }) => {
                assert_eq!(field, "line 3");
                assert!(reason.contains("foo"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }
}
