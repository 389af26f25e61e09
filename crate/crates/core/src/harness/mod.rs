//! Experiment protocol: training runs with validation early stopping, the λ
//! solution path over an α grid, metrics and report files.

mod path;
mod report;
mod spec;
mod train;

pub use path::{run_path, Aggregate, Choice, Headline, RunRecord, RunReport, Stat};
pub use report::{emit_report, load_summary, parse_trace_csv, render_aggregates, trace_csv, Summary};
pub use spec::{Algorithm, DatasetSource, ExperimentSpec};
pub use train::{train, TrainOutcome, TrainSettings};

use std::path::PathBuf;

use crate::data::{DataError, Dataset};
use crate::dc::SolverError;
use crate::mlr::{MlrError, ModelState};

/// Rows with an entry above this magnitude count as selected.
pub const SPARSITY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] MlrError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl HarnessError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Data(DataError::Io { .. }) | HarnessError::Io { .. } => "io",
            HarnessError::Data(DataError::Parse { .. }) | HarnessError::Json { .. } => "parse",
            HarnessError::Data(_) => "data",
            HarnessError::Model(MlrError::Io { .. }) => "io",
            HarnessError::Model(MlrError::ModelFormat(_)) => "parse",
            HarnessError::Model(_) => "model",
            HarnessError::Solver(SolverError::NonFinite { .. }) => "solver_abort",
            HarnessError::Solver(_) | HarnessError::Spec(_) => "config",
        }
    }
}

/// `λ` values from `head` down to `tail`: `head, 3·head/10, head/10, …`.
///
/// Only values not below `tail·(1 − 10⁻⁹)` are kept.
pub fn lambda_path(head: f64, tail: f64) -> Result<Vec<f64>, HarnessError> {
    if !(head > tail && tail > 0.0 && head.is_finite()) {
        return Err(HarnessError::Spec(format!("need head > tail > 0, got head = {head}, tail = {tail}")));
    }
    let floor = tail * (1.0 - 1e-9);
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let decade = head / 10f64.powi(k);
        if decade < floor {
            break;
        }
        out.push(decade);
        let mid = 3.0 * head / 10f64.powi(k + 1);
        if mid >= floor {
            out.push(mid);
        }
        k += 1;
    }
    Ok(out)
}

/// Percentage of features whose row of `W` has an entry above 1e-8 in
/// magnitude.
pub fn sparsity_metric(model: &ModelState) -> f64 {
    if model.d == 0 {
        return 0.0;
    }
    100.0 * model.selected_rows(SPARSITY_THRESHOLD).len() as f64 / model.d as f64
}

/// Percentage of rows of `data` whose arg-max class (ties to the smallest
/// index) is the label.
pub fn accuracy_metric(model: &ModelState, data: &Dataset) -> f64 {
    100.0 * model.accuracy(data)
}

/// JSON has no NaN; missing metrics travel as `null`.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// SplitMix64 step, used to derive independent seeds for every cell of the
/// run matrix from the spec seed.
pub(crate) fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_path_has_fifteen_values() {
        let p = lambda_path(1e4, 1e-3).unwrap();
        assert_eq!(p.len(), 15);
        assert_eq!(p[0], 1e4);
        assert_eq!(p[1], 3e3);
        assert!((p[14] - 1e-3).abs() < 1e-18);
        assert!((p[13] - 3e-3).abs() < 1e-18);
        assert!(p.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn one_decade_path() {
        assert_eq!(lambda_path(10.0, 1.0).unwrap(), vec![10.0, 3.0, 1.0]);
        assert!(lambda_path(1.0, 10.0).is_err());
        assert!(lambda_path(1.0, 0.0).is_err());
    }

    #[test]
    fn sparsity_examples() {
        let mut m = ModelState::zeros(10, 3);
        assert_eq!(sparsity_metric(&m), 0.0);
        m.w[4 * 3 + 1] = 1e-7;
        assert_eq!(sparsity_metric(&m), 10.0);
        m.w.iter_mut().for_each(|w| *w = 1e-9);
        assert_eq!(sparsity_metric(&m), 0.0);
    }

    #[test]
    fn seeds_differ_per_cell() {
        let a = derive_seed(1, &[0, 0]);
        assert_ne!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 0]));
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }
}
