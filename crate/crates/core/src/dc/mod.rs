//! Generic DC engines over finite sums `F = (1/n) Σ_i (g_i − h_i)`.
//!
//! [`run_dca`] is the full-batch scheme, [`run_sdca`] refreshes the
//! linearization of one random block of components per iteration and keeps
//! stale linearizations for the rest, and [`run_isdca`] additionally accepts
//! ε-subgradients and ε-solutions of the surrogate under a summable schedule.

mod aggregate;
mod lemma;
mod problem;
mod sampling;
mod solver;
pub mod testing;

pub use aggregate::{AggregatedSubgradient, StorageMode, PER_SAMPLE_LIMIT};
pub use lemma::{check_eps_subgradient, EpsSubgradientCheck, LEMMA_SLACK};
pub use problem::DcProblem;
pub use sampling::{block_count, sample_blocks, BlockSampler};
pub use solver::{
    run_dca, run_isdca, run_sdca, ConvergenceTrace, EarlyStopping, EpochAction, EpochMonitor,
    EpsSchedule, LemmaDiagnostics, LemmaStats, SolverConfig, SolverOutput, StopReason, StopRule,
    TraceRecord,
};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("non-finite value at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },
}
