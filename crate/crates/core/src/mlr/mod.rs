//! Multinomial logistic regression with a group-sparsity penalty
//! `λ Σ_j η_α(‖W_j‖_q)` as a finite-sum DC program.

mod loss;
mod model;
mod penalty;
mod problem;

pub(crate) use loss::clamp_loss;
pub use loss::{nll_loss, softmax_probabilities};
pub use model::{ModelFile, ModelState};
pub use penalty::{penalty_value, PenaltyConfig, PenaltyKind};
pub use problem::{build_problem, estimate_lipschitz, ComponentSubgradient, MlrProblem, RHO_MARGIN};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum MlrError {
    #[error("non-finite logit for class {class}")]
    NonFiniteLogit { class: usize },
    #[error("label {label} outside 1..=Q{}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Label { row: Option<usize>, label: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    ModelFormat(String),
}
