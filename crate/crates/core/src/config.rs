//! Model configuration, operating modes, and the JSON config file format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which model variant to fit.
///
/// `BGpLvm` is the single-cluster limit: one hyperparameter set shared by
/// every dimension, no assignment machinery. `MrdFixed` pins each dimension
/// to a known component and never updates the responsibilities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    DpGpLvm,
    BGpLvm,
    MrdFixed(Vec<usize>),
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::DpGpLvm => "dpgplvm",
            Mode::BGpLvm => "bgplvm",
            Mode::MrdFixed(_) => "mrd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_iters: usize,
    /// Relative tolerance on the bound improvement over a 25-iteration window.
    pub elbo_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 1e-2,
            momentum: 0.9,
            max_iters: 2000,
            elbo_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Latent dimensionality.
    pub q: usize,
    /// Truncation level (number of mixture components).
    pub t: usize,
    /// Number of inducing points.
    pub m: usize,
    /// Sample count of the training data.
    pub n: usize,
    /// Observed dimension count of the training data.
    pub d: usize,
    /// Gamma prior shape for the clustering parameter.
    pub s1: f64,
    /// Gamma prior rate for the clustering parameter.
    pub s2: f64,
    /// Relative diagonal jitter: `jitter * signal variance` is added to
    /// inducing-point kernel matrices before factorization.
    pub jitter: f64,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl ModelConfig {
    pub fn default_m(n: usize, q: usize) -> usize {
        n.min(10 * q)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.q < 1 {
            return fail("q must be at least 1".into());
        }
        if self.q >= self.d {
            return fail(format!(
                "q = {} must be smaller than the observed dimension count d = {}",
                self.q, self.d
            ));
        }
        if self.t < 1 || self.t > self.d {
            return fail(format!("t = {} must lie in [1, d = {}]", self.t, self.d));
        }
        if self.m < 1 || self.m > self.n {
            return fail(format!("m = {} must lie in [1, n = {}]", self.m, self.n));
        }
        for (name, v) in [
            ("s1", self.s1),
            ("s2", self.s2),
            ("jitter", self.jitter),
            ("momentum", self.optimizer.momentum),
            ("elbo_tol", self.optimizer.elbo_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.optimizer.learning_rate >= 0.0) || !self.optimizer.learning_rate.is_finite() {
            return fail(format!(
                "learning_rate must be nonnegative and finite, got {}",
                self.optimizer.learning_rate
            ));
        }
        if self.optimizer.max_iters == 0 {
            return fail("max_iters must be positive".into());
        }
        Ok(())
    }

    /// Checks mode-specific structure against this config.
    pub fn validate_mode(&self, mode: &Mode) -> Result<()> {
        match mode {
            Mode::BGpLvm if self.t != 1 => Err(Error::InvalidConfig(format!(
                "bgplvm mode requires t = 1, got t = {}",
                self.t
            ))),
            Mode::MrdFixed(assign) => {
                if assign.len() != self.d {
                    return Err(Error::InvalidConfig(format!(
                        "mrd assignment has {} labels but the data has {} dimensions",
                        assign.len(),
                        self.d
                    )));
                }
                if let Some(&bad) = assign.iter().find(|&&t| t >= self.t) {
                    return Err(Error::InvalidConfig(format!(
                        "mrd assignment references component {bad} but t = {}",
                        self.t
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// The JSON config file accepted by the CLI. Every key is optional; unknown
/// keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub q: Option<usize>,
    pub t: Option<usize>,
    pub m: Option<usize>,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub jitter: Option<f64>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub max_iters: Option<usize>,
    pub elbo_tol: Option<f64>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
}

impl FileConfig {
    pub fn parse(json: &str) -> Result<FileConfig> {
        Ok(serde_json::from_str(json)?)
    }

    /// Combine the file with the data dimensions and an optional fixed
    /// assignment (required for mrd mode) into a validated config.
    pub fn resolve(
        &self,
        n: usize,
        d: usize,
        mode_name: Option<&str>,
        groups: Option<Vec<usize>>,
    ) -> Result<(ModelConfig, Mode)> {
        let mode_name = mode_name
            .or(self.mode.as_deref())
            .unwrap_or("dpgplvm")
            .to_ascii_lowercase();
        let mode = match mode_name.as_str() {
            "dpgplvm" => Mode::DpGpLvm,
            "bgplvm" => Mode::BGpLvm,
            "mrd" => {
                let assign = groups.ok_or_else(|| {
                    Error::InvalidConfig("mrd mode requires a fixed group assignment".into())
                })?;
                Mode::MrdFixed(assign)
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown mode '{other}' (expected dpgplvm, bgplvm, or mrd)"
                )))
            }
        };
        let q = self.q.unwrap_or_else(|| 5.min(d.saturating_sub(1)).max(1));
        let t = match &mode {
            Mode::BGpLvm => match self.t {
                Some(1) | None => 1,
                Some(t) => {
                    return Err(Error::InvalidConfig(format!(
                        "bgplvm mode requires t = 1, got t = {t}"
                    )))
                }
            },
            Mode::MrdFixed(assign) => {
                let implied = assign.iter().copied().max().map_or(1, |m| m + 1);
                match self.t {
                    Some(t) if t != implied => {
                        return Err(Error::InvalidConfig(format!(
                            "config t = {t} does not match the {implied} groups in the assignment"
                        )))
                    }
                    _ => implied,
                }
            }
            Mode::DpGpLvm => self.t.unwrap_or_else(|| 10.min(d)),
        };
        let config = ModelConfig {
            q,
            t,
            m: self.m.unwrap_or_else(|| ModelConfig::default_m(n, q)),
            n,
            d,
            s1: self.s1.unwrap_or(1.0),
            s2: self.s2.unwrap_or(1.0),
            jitter: self.jitter.unwrap_or(1e-6),
            optimizer: OptimizerConfig {
                learning_rate: self.learning_rate.unwrap_or(1e-2),
                momentum: self.momentum.unwrap_or(0.9),
                max_iters: self.max_iters.unwrap_or(2000),
                elbo_tol: self.elbo_tol.unwrap_or(1e-4),
            },
            seed: self.seed.unwrap_or(0),
        };
        config.validate()?;
        config.validate_mode(&mode)?;
        Ok((config, mode))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n: usize, d: usize) -> ModelConfig {
        ModelConfig {
            q: 2,
            t: 3,
            m: 4,
            n,
            d,
            s1: 1.0,
            s2: 1.0,
            jitter: 1e-6,
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }

    #[test]
    fn validates_bounds() {
        assert!(base(10, 5).validate().is_ok());
        let mut c = base(10, 5);
        c.q = 5;
        assert!(c.validate().is_err(), "q must be < d");
        let mut c = base(10, 5);
        c.m = 11;
        assert!(c.validate().is_err(), "m must be <= n");
        let mut c = base(10, 5);
        c.t = 6;
        assert!(c.validate().is_err(), "t must be <= d");
    }

    #[test]
    fn file_config_rejects_unknown_keys() {
        assert!(FileConfig::parse(r#"{"q": 3}"#).is_ok());
        assert!(FileConfig::parse(r#"{"q": 3, "banana": 1}"#).is_err());
    }

    #[test]
    fn resolve_defaults_m_to_10q() {
        let (c, _) = FileConfig::parse(r#"{"q": 3}"#)
            .unwrap()
            .resolve(100, 20, None, None)
            .unwrap();
        assert_eq!(c.m, 30);
        let (c, _) = FileConfig::parse(r#"{"q": 3}"#)
            .unwrap()
            .resolve(12, 20, None, None)
            .unwrap();
        assert_eq!(c.m, 12);
    }

    #[test]
    fn resolve_mrd_infers_t() {
        let fc = FileConfig::default();
        let (c, mode) = fc
            .resolve(10, 4, Some("mrd"), Some(vec![0, 0, 1, 1]))
            .unwrap();
        assert_eq!(c.t, 2);
        assert!(matches!(mode, Mode::MrdFixed(_)));
        assert!(fc.resolve(10, 4, Some("mrd"), None).is_err());
    }
}
