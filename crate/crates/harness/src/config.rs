//! Declarative experiment description, read from JSON and patched by CLI flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[serde(alias = "Z2Pipeline")]
    Z2,
    #[serde(alias = "SparsePipeline")]
    Sparse,
    #[serde(alias = "SeScan")]
    SeScan,
    #[serde(alias = "KappaScan")]
    KappaScan,
    #[serde(alias = "DecompAudit")]
    DecompAudit,
    #[serde(alias = "SpectralCorrelation")]
    Spectral,
}

/// How AMP is started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// power-method start (Z2)
    Spectral,
    /// `x_1 = α_1 v⋆ + N(0, I/n)`, independent of the noise
    Informative,
    /// `x_1 = e_ŝ` with `ŝ = argmax |M_ii|` (sparse)
    DiagMax,
    /// sample-split start (sparse)
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalChoice {
    Dirac,
    Gaussian,
}

/// What `se-scan` evaluates on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanQuantity {
    /// `T₂(λ, τ)` against `[0, 1 − (λ − 1)]`
    T2,
    /// central difference of `T₂` in `τ` against 0
    Dt2,
    /// `|λ²∫tanh² − λ²∫tanh|` against `1e-8`
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default, alias = "T")]
    pub t_max: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub c_tau: Option<f64>,
    #[serde(default)]
    pub s_power: Option<usize>,
    #[serde(default)]
    pub p_split: Option<f64>,
    #[serde(default)]
    pub n_rounds: Option<usize>,
    #[serde(default)]
    pub init: Option<InitKind>,
    #[serde(default)]
    pub signal: Option<SignalChoice>,
    #[serde(default)]
    pub quantity: Option<ScanQuantity>,
    /// λ values for the scans; default `1.005, 1.010, …, 1.200`
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    /// τ points per λ on `[λ² − 1, λ²]`; default 200
    #[serde(default)]
    pub tau_points: Option<usize>,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn default_trials() -> usize {
    1
}

fn required<T: Copy>(v: Option<T>, name: &str, exp: Experiment) -> Result<T> {
    v.ok_or_else(|| HarnessError::Config(format!("{exp:?} requires `{name}`")))
}

impl ExperimentConfig {
    /// A config with only the experiment set.
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            n: None,
            lambda: None,
            k: None,
            t_max: None,
            trials: 1,
            seed: 0,
            c_tau: None,
            s_power: None,
            p_split: None,
            n_rounds: None,
            init: None,
            signal: None,
            quantity: None,
            lambda_grid: None,
            tau_points: None,
            output_path: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn n(&self) -> Result<usize> {
        required(self.n, "n", self.experiment)
    }

    pub fn lambda(&self) -> Result<f64> {
        required(self.lambda, "lambda", self.experiment)
    }

    pub fn k(&self) -> Result<usize> {
        required(self.k, "k", self.experiment)
    }

    pub fn t_max(&self) -> Result<usize> {
        required(self.t_max, "t_max", self.experiment)
    }

    pub fn c_tau(&self) -> f64 {
        self.c_tau.unwrap_or(spiked_amp::denoise::DEFAULT_C_TAU)
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        self.lambda_grid
            .clone()
            .unwrap_or_else(|| (1..=40).map(|i| 1.0 + 0.005 * i as f64).collect())
    }

    pub fn tau_points(&self) -> usize {
        self.tau_points.unwrap_or(200)
    }

    /// Checks that everything the chosen experiment needs is present and in range.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_owned()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        let exp = self.experiment;
        match exp {
            Experiment::Z2 | Experiment::DecompAudit | Experiment::Spectral | Experiment::Sparse => {
                if self.n()? < 2 {
                    return bad("n must be at least 2");
                }
                let l = self.lambda()?;
                if !(l >= 0.0 && l.is_finite()) {
                    return bad("lambda must be nonnegative");
                }
                if exp != Experiment::Spectral && self.t_max()? < 1 {
                    return bad("t_max must be at least 1");
                }
                if exp == Experiment::DecompAudit && self.t_max()? < 2 {
                    return bad("decomp-audit needs t_max >= 2");
                }
            }
            Experiment::SeScan | Experiment::KappaScan => {
                let grid = self.lambda_grid();
                if grid.is_empty() || grid.iter().any(|l| !(*l > 1.0 && l.is_finite())) {
                    return bad("lambda_grid entries must exceed 1");
                }
                if self.tau_points() < 2 {
                    return bad("tau_points must be at least 2");
                }
            }
        }
        if exp == Experiment::Sparse {
            let k = self.k()?;
            if k == 0 || k > self.n()? {
                return bad("k must lie in 1..=n");
            }
            if let Some(p) = self.p_split {
                if !(p > 0.0 && p < 1.0) {
                    return bad("p_split must lie in (0, 1)");
                }
            }
            if matches!(self.init, Some(InitKind::Spectral)) {
                return bad("sparse runs use informative, diag-max or split initialization");
            }
        }
        if matches!(exp, Experiment::Z2 | Experiment::DecompAudit)
            && matches!(self.init, Some(InitKind::DiagMax | InitKind::Split))
        {
            return bad("Z2 runs use spectral or informative initialization");
        }
        if let Some(c) = self.c_tau {
            if !(c >= 0.0 && c.is_finite()) {
                return bad("c_tau must be nonnegative");
            }
        }
        if self.s_power == Some(0) {
            return bad("s_power must be at least 1");
        }
        if self.n_rounds == Some(0) {
            return bad("n_rounds must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cli_and_enum_spellings() {
        let a = ExperimentConfig::from_json(r#"{"experiment": "se-scan"}"#).unwrap();
        let b = ExperimentConfig::from_json(r#"{"experiment": "SeScan"}"#).unwrap();
        assert_eq!(a, b);
        let c = ExperimentConfig::from_json(r#"{"experiment": "z2", "n": 10, "lambda": 1.5, "T": 4}"#).unwrap();
        assert_eq!(c.t_max, Some(4));
    }

    #[test]
    fn unknown_experiment_is_a_config_error() {
        let e = ExperimentConfig::from_json(r#"{"experiment": "nope"}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn missing_fields_are_reported() {
        let c = ExperimentConfig::new(Experiment::Sparse);
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("`n`"), "{msg}");
    }

    #[test]
    fn json_round_trip() {
        let mut c = ExperimentConfig::new(Experiment::Z2);
        c.n = Some(100);
        c.lambda = Some(1.5);
        c.t_max = Some(3);
        c.init = Some(InitKind::Informative);
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        c.validate().unwrap();
    }
}
