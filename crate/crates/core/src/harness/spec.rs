use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{load_sparse_text, Dataset, Format, GeneratorSpec, LoadOptions};
use crate::dc::EpsSchedule;
use crate::mlr::PenaltyKind;
use crate::prox::GroupNorm;

use super::{lambda_path, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dca,
    Sdca,
    Isdca,
    /// ℓ2,1-regularized stochastic proximal gradient; ignores `q`, the
    /// penalty kind and `α`.
    Spgd,
}

impl Algorithm {
    pub fn is_stochastic(self) -> bool {
        !matches!(self, Algorithm::Dca)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dca => "dca",
            Algorithm::Sdca => "sdca",
            Algorithm::Isdca => "isdca",
            Algorithm::Spgd => "spgd",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dca" => Ok(Algorithm::Dca),
            "sdca" => Ok(Algorithm::Sdca),
            "isdca" => Ok(Algorithm::Isdca),
            "spgd" => Ok(Algorithm::Spgd),
            other => Err(format!("unknown algorithm `{other}` (expected dca, sdca, isdca or spgd)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetSource {
    File {
        path: PathBuf,
        format: Format,
        #[serde(default = "default_label_column")]
        label_column: String,
        #[serde(default)]
        dim: Option<usize>,
    },
    Generator(GeneratorSpec),
}

fn default_label_column() -> String {
    "label".into()
}

impl DatasetSource {
    /// Loads or generates the data. Relative file paths are resolved against
    /// `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<Dataset, HarnessError> {
        match self {
            DatasetSource::File {
                path,
                format,
                label_column,
                dim,
            } => {
                let resolved = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let options = LoadOptions {
                    dim: *dim,
                    label_column: label_column.clone(),
                };
                Ok(load_sparse_text(&resolved, *format, &options)?)
            }
            DatasetSource::Generator(spec) => Ok(spec.generate()?),
        }
    }
}

/// The full protocol of one experiment, read from JSON. Every field but
/// `dataset` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dataset: DatasetSource,
    #[serde(default = "defaults::algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "defaults::q")]
    pub q: GroupNorm,
    #[serde(default = "defaults::penalty")]
    pub penalty: PenaltyKind,
    #[serde(default = "defaults::alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "defaults::lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "defaults::batch_fraction")]
    pub batch_fraction: f64,
    #[serde(default = "defaults::patience")]
    pub patience: usize,
    #[serde(default = "defaults::eps_stop")]
    pub eps_stop: f64,
    #[serde(default = "defaults::max_epochs")]
    pub max_epochs: usize,
    /// Per-run wall-clock cap in seconds.
    #[serde(default = "defaults::time_limit")]
    pub time_limit_secs: f64,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::yes")]
    pub standardize: bool,
    #[serde(default = "defaults::train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "defaults::validation_fraction")]
    pub validation_fraction: f64,
    /// Tolerances of the inexact algorithm.
    #[serde(default)]
    pub eps_schedule: EpsSchedule,
}

mod defaults {
    use super::*;

    pub fn algorithm() -> Algorithm {
        Algorithm::Sdca
    }
    pub fn q() -> GroupNorm {
        GroupNorm::L2
    }
    pub fn penalty() -> PenaltyKind {
        PenaltyKind::Exponential
    }
    pub fn alphas() -> Vec<f64> {
        vec![0.5, 1.0, 2.0, 5.0]
    }
    pub fn lambdas() -> Vec<f64> {
        lambda_path(1e4, 1e-3).expect("valid default path")
    }
    pub fn batch_fraction() -> f64 {
        0.1
    }
    pub fn patience() -> usize {
        5
    }
    pub fn eps_stop() -> f64 {
        1e-6
    }
    pub fn max_epochs() -> usize {
        1000
    }
    pub fn time_limit() -> f64 {
        7200.0
    }
    pub fn repetitions() -> usize {
        10
    }
    pub fn yes() -> bool {
        true
    }
    pub fn train_fraction() -> f64 {
        0.8
    }
    pub fn validation_fraction() -> f64 {
        0.2
    }
}

impl ExperimentSpec {
    /// Spec with every default and the given data source.
    pub fn new(dataset: DatasetSource) -> Self {
        ExperimentSpec {
            dataset,
            algorithm: defaults::algorithm(),
            q: defaults::q(),
            penalty: defaults::penalty(),
            alphas: defaults::alphas(),
            lambdas: defaults::lambdas(),
            batch_fraction: defaults::batch_fraction(),
            patience: defaults::patience(),
            eps_stop: defaults::eps_stop(),
            max_epochs: defaults::max_epochs(),
            time_limit_secs: defaults::time_limit(),
            repetitions: defaults::repetitions(),
            seed: 0,
            standardize: true,
            train_fraction: defaults::train_fraction(),
            validation_fraction: defaults::validation_fraction(),
            eps_schedule: EpsSchedule::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec = Self::from_json(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Spec(m));
        if self.lambdas.is_empty() {
            return bad("λ path is empty".into());
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return bad("λ values must be finite and nonnegative".into());
        }
        if !self.lambdas.windows(2).all(|w| w[0] > w[1]) {
            return bad("λ path must be strictly decreasing".into());
        }
        if self.algorithm != Algorithm::Spgd {
            if self.alphas.is_empty() {
                return bad("α grid is empty".into());
            }
            if self.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                return bad("α values must be positive".into());
            }
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return bad(format!("batch_fraction must lie in (0, 1], got {}", self.batch_fraction));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if !(self.time_limit_secs > 0.0) {
            return bad(format!("time limit must be positive, got {}", self.time_limit_secs));
        }
        if !(self.eps_stop >= 0.0) {
            return bad(format!("eps_stop must be nonnegative, got {}", self.eps_stop));
        }
        Ok(())
    }

    /// α values actually swept: the grid, or a single `None` for SPGD.
    pub fn alpha_grid(&self) -> Vec<Option<f64>> {
        if self.algorithm == Algorithm::Spgd {
            vec![None]
        } else {
            self.alphas.iter().copied().map(Some).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_gets_defaults() {
        let spec = ExperimentSpec::from_json(r#"{"dataset": {"source": "generator", "kind": "sim1", "n": 100, "d": null, "seed": 3}}"#).unwrap();
        assert_eq!(spec.algorithm, Algorithm::Sdca);
        assert_eq!(spec.alphas, vec![0.5, 1.0, 2.0, 5.0]);
        assert_eq!(spec.lambdas.len(), 15);
        assert_eq!(spec.repetitions, 10);
        assert_eq!(spec.time_limit_secs, 7200.0);
        assert!(spec.standardize);
        spec.validate().unwrap();
        let again = ExperimentSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = ExperimentSpec::new(DatasetSource::Generator(GeneratorSpec {
            kind: crate::data::SimKind::Sim1,
            n: 100,
            d: None,
            seed: 0,
        }));
        spec.lambdas = vec![1.0, 1.0];
        assert!(spec.validate().is_err());
        spec.lambdas = vec![1.0];
        spec.repetitions = 0;
        assert!(spec.validate().is_err());
        assert!(ExperimentSpec::from_json(r#"{"dataset": {"source": "generator", "kind": "sim1", "n": 10}, "colour": 1}"#).is_err());
    }
}
