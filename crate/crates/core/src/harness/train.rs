use std::time::Duration;

use web_time::Instant;

use crate::baselines::{run_spgd, SpgdConfig, StepRule};
use crate::data::Dataset;
use crate::dc::{
    run_dca, run_isdca, run_sdca, ConvergenceTrace, EarlyStopping, EpochAction, EpochMonitor, EpsSchedule, SolverConfig,
    StopReason,
};
use crate::mlr::{build_problem, MlrError, ModelState, PenaltyConfig, PenaltyKind};
use crate::prox::GroupNorm;

use super::{accuracy_metric, Algorithm, HarnessError};

/// Everything one training run needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub algorithm: Algorithm,
    pub q: GroupNorm,
    pub penalty: PenaltyKind,
    pub alpha: f64,
    pub lambda: f64,
    pub batch_fraction: f64,
    pub patience: usize,
    pub eps_stop: f64,
    pub max_epochs: usize,
    pub time_limit: Option<Duration>,
    pub eps_schedule: EpsSchedule,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            algorithm: Algorithm::Sdca,
            q: GroupNorm::L2,
            penalty: PenaltyKind::Exponential,
            alpha: 1.0,
            lambda: 0.0,
            batch_fraction: 0.1,
            patience: 5,
            eps_stop: 1e-6,
            max_epochs: 1000,
            time_limit: None,
            eps_schedule: EpsSchedule::Auto,
            seed: 0,
        }
    }
}

impl TrainSettings {
    /// Penalty description stored alongside the model. SPGD models record
    /// `q = 2`.
    pub fn penalty_config(&self) -> Result<PenaltyConfig, MlrError> {
        let q = if self.algorithm == Algorithm::Spgd { GroupNorm::L2 } else { self.q };
        PenaltyConfig::new(self.penalty, self.alpha, self.lambda, q)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelState,
    pub trace: ConvergenceTrace,
    pub seconds: f64,
    /// Epoch of the returned snapshot when early stopping fired.
    pub best_epoch: Option<usize>,
    /// Percentage, when validation data was given.
    pub validation_accuracy: Option<f64>,
    /// Proximal weight of the DC decomposition; 0 for SPGD.
    pub rho: f64,
}

impl TrainOutcome {
    pub fn stop_reason(&self) -> Option<StopReason> {
        self.trace.stop_reason
    }
}

/// Trains one model on `train` from `init` (zeros when absent).
///
/// With validation data, the stochastic algorithms stop once validation
/// accuracy has not improved for `patience` epochs and return the best
/// snapshot. DCA always runs to `eps_stop`, `max_epochs` or the time limit.
pub fn train(
    train: &Dataset,
    validation: Option<&Dataset>,
    settings: &TrainSettings,
    init: Option<&ModelState>,
) -> Result<TrainOutcome, HarnessError> {
    let start = Instant::now();
    let (d, classes) = (train.dim(), train.classes());
    if let Some(v) = validation {
        if v.dim() != d {
            return Err(MlrError::Dimension { expected: d, found: v.dim() }.into());
        }
    }
    let mut x0 = match init {
        Some(m) => {
            if m.d != d {
                return Err(MlrError::Dimension { expected: d, found: m.d }.into());
            }
            if m.classes != classes {
                return Err(MlrError::Dimension {
                    expected: classes,
                    found: m.classes,
                }
                .into());
            }
            m.clone()
        }
        None => ModelState::zeros(d, classes),
    };
    let penalty = settings.penalty_config()?;

    let mut stopper = EarlyStopping::new(settings.patience);
    let watch = validation.filter(|_| settings.algorithm.is_stochastic());
    let mut on_epoch = |epoch: usize, x: &[f64]| match watch {
        Some(v) => {
            let m = ModelState::from_flat(d, classes, x);
            stopper.observe(epoch, accuracy_metric(&m, v), x)
        }
        None => EpochAction::Continue,
    };
    let monitor: Option<&mut dyn EpochMonitor> = if watch.is_some() { Some(&mut on_epoch) } else { None };

    let (point, trace, rho) = match settings.algorithm {
        Algorithm::Spgd => {
            x0.refresh_t(GroupNorm::L2);
            let config = SpgdConfig {
                batch_fraction: settings.batch_fraction,
                lambda: settings.lambda,
                step: StepRule::InverseLinear,
                max_epochs: settings.max_epochs,
                patience: settings.patience,
                seed: settings.seed,
                time_limit: settings.time_limit,
            };
            let out = run_spgd(train, &config, &x0, monitor)?;
            (out.model.to_flat(), out.trace, 0.0)
        }
        algorithm => {
            x0.refresh_t(penalty.q);
            let problem = build_problem(train, penalty)?;
            let config = SolverConfig {
                batch_fraction: if algorithm == Algorithm::Dca { 1.0 } else { settings.batch_fraction },
                max_epochs: settings.max_epochs,
                patience: settings.patience,
                eps_stop: settings.eps_stop,
                eps_schedule: if algorithm == Algorithm::Isdca {
                    settings.eps_schedule.clone()
                } else {
                    EpsSchedule::Zero
                },
                seed: settings.seed,
                time_limit: settings.time_limit,
                ..SolverConfig::default()
            };
            let x = x0.to_flat();
            let out = match algorithm {
                Algorithm::Dca => run_dca(&problem, &x, &config, monitor)?,
                Algorithm::Sdca => run_sdca(&problem, &x, &config, monitor)?,
                _ => run_isdca(&problem, &x, &config, monitor)?,
            };
            (out.point, out.trace, problem.rho())
        }
    };

    let early = trace.stop_reason == Some(StopReason::EarlyStopped);
    let best_epoch = if early { stopper.best_epoch() } else { None };
    let point = match (early, stopper.into_best_point()) {
        (true, Some(best)) => best,
        _ => point,
    };
    let mut model = ModelState::from_flat(d, classes, &point);
    if settings.algorithm == Algorithm::Spgd {
        model.refresh_t(GroupNorm::L2);
    }
    let validation_accuracy = validation.map(|v| accuracy_metric(&model, v));
    Ok(TrainOutcome {
        model,
        trace,
        seconds: start.elapsed().as_secs_f64(),
        best_epoch,
        validation_accuracy,
        rho,
    })
}
