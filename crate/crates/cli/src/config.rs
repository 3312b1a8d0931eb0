// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sl2rmp::ensembles::{LevyModel, MatrixEnsemble};
use sl2rmp::spectral::SpectralOptions;
use thiserror::Error;

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// The message carries the line, column and offending key.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("this command needs a `[{0}]` section")]
    Missing(&'static str),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Everything a command may read from the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Lévy model for `lyapunov` and `variance`.
    pub levy: Option<LevyModel>,
    /// Matrix ensemble for `gle-mc` and `invariant-density`.
    pub ensemble: Option<MatrixEnsemble>,
    /// Energy grid; figures fall back to their own when absent.
    pub grid: Option<Grid>,
    #[serde(default)]
    pub monte_carlo: McBudget,
    #[serde(default)]
    pub spectral: SpectralOverrides,
    #[serde(default)]
    pub validate: ValidateConfig,
}

/// Either an explicit list or `points` equally spaced values on `[start, stop]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub energies: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

impl Grid {
    pub fn energies(&self) -> Result<Vec<f64>, ConfigError> {
        let values = match (&self.energies, self.start, self.stop, self.points) {
            (Some(e), None, None, None) => e.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n < 2 {
                    return Err(invalid("grid.points", "need at least 2 points"));
                }
                (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect()
            }
            _ => {
                return Err(invalid(
                    "grid",
                    "give either `energies` or all of `start`, `stop`, `points`",
                ))
            }
        };
        check_increasing("grid", &values)?;
        Ok(values)
    }
}

pub fn check_increasing(field: &'static str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(invalid(field, "empty"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(invalid(field, format!("non-finite value {v}")));
    }
    if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
        return Err(invalid(
            field,
            format!("not strictly increasing at {} -> {}", w[0], w[1]),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McBudget {
    pub replicas: usize,
    /// Product length for `gle-mc`.
    pub steps: usize,
    pub burn_in: usize,
    pub q: Vec<f64>,
    /// Riccati samples for `invariant-density`.
    pub samples: usize,
    pub bins: usize,
    pub tail_cut: f64,
}

impl Default for McBudget {
    fn default() -> Self {
        Self {
            replicas: 4000,
            steps: 50,
            burn_in: 0,
            q: vec![-1.0, -0.5, 0.5, 1.0],
            samples: 1_000_000,
            bins: 200,
            tail_cut: 20.0,
        }
    }
}

impl McBudget {
    fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("monte_carlo.replicas", self.replicas),
            ("monte_carlo.steps", self.steps),
            ("monte_carlo.samples", self.samples),
            ("monte_carlo.bins", self.bins),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be positive"));
            }
        }
        if self.replicas < 2 {
            return Err(invalid("monte_carlo.replicas", "need at least 2 replicas"));
        }
        if !(self.tail_cut > 0.0 && self.tail_cut.is_finite()) {
            return Err(invalid("monte_carlo.tail_cut", "must be positive"));
        }
        check_increasing("monte_carlo.q", &self.q)
    }

    /// Quick mode: a ninth of the samples, three times the standard error.
    pub fn quick(&self) -> Self {
        Self {
            replicas: (self.replicas / 9).max(2),
            samples: (self.samples / 9).max(1),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralOverrides {
    pub s_max: Option<f64>,
    pub ode_rtol: Option<f64>,
    pub ode_atol: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_doublings: Option<usize>,
}

impl SpectralOverrides {
    pub fn options(&self) -> SpectralOptions {
        let d = SpectralOptions::default();
        SpectralOptions {
            s_max: self.s_max.or(d.s_max),
            ode_rtol: self.ode_rtol.unwrap_or(d.ode_rtol),
            ode_atol: self.ode_atol.unwrap_or(d.ode_atol),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_doublings: self.max_doublings.unwrap_or(d.max_doublings),
            ..d
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("spectral.s_max", self.s_max),
            ("spectral.ode_rtol", self.ode_rtol),
            ("spectral.ode_atol", self.ode_atol),
            ("spectral.tolerance", self.tolerance),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(field, "must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    /// Subset of criteria to run; all twelve when absent.
    pub criteria: Option<Vec<u8>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(levy) = &self.levy {
            match levy {
                LevyModel::CompoundPoisson { rho, weights } => {
                    if !(*rho > 0.0 && rho.is_finite()) {
                        return Err(invalid("levy.rho", "must be positive"));
                    }
                    weights.validate().map_err(|e| invalid("levy.weights", e.to_string()))?;
                }
                LevyModel::GaussianWhiteNoise { sigma } => {
                    if !(*sigma > 0.0 && sigma.is_finite()) {
                        return Err(invalid("levy.sigma", "must be positive"));
                    }
                }
            }
        }
        if let Some(e) = &self.ensemble {
            e.validate().map_err(|e| invalid("ensemble", e.to_string()))?;
        }
        if let Some(g) = &self.grid {
            g.energies()?;
        }
        if let Some(ids) = &self.validate.criteria {
            if let Some(id) = ids.iter().find(|id| !(1..=12).contains(*id)) {
                return Err(invalid("validate.criteria", format!("no criterion {id}")));
            }
        }
        self.monte_carlo.validate()?;
        self.spectral.validate()
    }

    /// Canonical TOML of the effective configuration, for the output header.
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_valid() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn full_config_roundtrips() {
        let text = r#"
            seed = 7
            [levy]
            model = "compound_poisson"
            rho = 1.0
            weights = { law = "exponential", mean = 0.5 }
            [grid]
            start = -2.0
            stop = 2.0
            points = 5
            [monte_carlo]
            replicas = 100
        "#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(
            cfg.grid.as_ref().unwrap().energies().unwrap(),
            vec![-2.0, -1.0, 0.0, 1.0, 2.0]
        );
        assert_eq!(RunConfig::parse(&cfg.echo()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_report_line_and_field() {
        let err = RunConfig::parse("seed = 1\n[monte_carlo]\nreplica = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3") && err.contains("replica"), "{err}");
        let err = RunConfig::parse("[levy]\nmodel = \"gaussian_white_noise\"\nsigma = 1.0\nrho = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
    }

    #[test]
    fn grid_must_increase() {
        let err = RunConfig::parse("[grid]\nenergies = [1.0, 1.0]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "grid", .. }), "{err}");
        assert!(RunConfig::parse("[grid]\nenergies = [1.0]\nstart = 0.0\n").is_err());
    }

    #[test]
    fn budgets_must_be_positive() {
        let err = RunConfig::parse("[monte_carlo]\nreplicas = 0\n").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::Invalid {
                field: "monte_carlo.replicas",
                ..
            }
        ));
    }
}
