use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::data::{split, standardize, SplitSpec};
use crate::dc::ConvergenceTrace;
use crate::mlr::ModelState;

use super::{accuracy_metric, derive_seed, sparsity_metric, train, ExperimentSpec, HarnessError, TrainSettings, SPARSITY_THRESHOLD};

/// One solve: a repetition, an `α` (absent for SPGD) and a `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repetition: usize,
    pub alpha: Option<f64>,
    pub lambda: f64,
    pub seed: u64,
    /// Percentages; NaN after a solver abort.
    #[serde(with = "super::nan_as_null")]
    pub test_accuracy: f64,
    #[serde(with = "super::nan_as_null")]
    pub validation_accuracy: f64,
    #[serde(with = "super::nan_as_null")]
    pub sparsity: f64,
    pub seconds: f64,
    pub epochs: usize,
    pub iterations: usize,
    pub final_objective: Option<f64>,
    /// Stop reason in snake case, or `aborted`.
    pub stop_reason: String,
    pub error: Option<String>,
    /// Zero-based indices of the features with a nonzero row in `W`.
    pub selected: Vec<usize>,
    /// Trace file name relative to the report directory.
    pub trace_file: Option<String>,
}

impl RunRecord {
    pub fn aborted(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    #[serde(with = "super::nan_as_null")]
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    #[serde(with = "super::nan_as_null")]
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, std }
    }
}

/// Mean and spread over repetitions of one `(α, λ)` cell, skipping aborted
/// runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub alpha: Option<f64>,
    pub lambda: f64,
    pub completed: usize,
    pub aborted: usize,
    pub test_accuracy: Stat,
    pub validation_accuracy: Stat,
    pub sparsity: Stat,
    pub seconds: Stat,
}

/// The cell picked for one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub repetition: usize,
    pub alpha: Option<f64>,
    pub lambda: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    pub sparsity: f64,
    pub seconds: f64,
    /// Index into [`RunReport::runs`].
    pub run: usize,
}

/// Per repetition, the `(α, λ)` with the best validation accuracy (ties go
/// to the larger `λ`, then to the earlier `α`), and the test metrics there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub choices: Vec<Choice>,
    pub test_accuracy: Stat,
    pub sparsity: Stat,
    pub seconds: Stat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub spec: ExperimentSpec,
    pub split_seeds: Vec<u64>,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
    pub headline: Headline,
    /// One per run, empty for aborted runs.
    #[serde(skip)]
    pub traces: Vec<ConvergenceTrace>,
    /// Final model of every run, parallel to `runs`.
    #[serde(skip)]
    pub models: Vec<ModelState>,
}

/// Runs the whole protocol of `spec`.
///
/// For every repetition the data is split afresh (stratified 64/16/20 by
/// default) and standardized on the training part. Each `α` walks the `λ`
/// path from the largest value, warm-starting every solve from the previous
/// one and the first from zero. A solver abort is recorded and the walk goes
/// on from the last good point.
pub fn run_path(spec: &ExperimentSpec, base_dir: Option<&Path>) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    let data = spec.dataset.load(base_dir)?;
    let time_limit = Some(Duration::from_secs_f64(spec.time_limit_secs));
    let alphas = spec.alpha_grid();

    let mut runs = Vec::new();
    let mut traces = Vec::new();
    let mut models = Vec::new();
    let mut split_seeds = Vec::new();
    for rep in 0..spec.repetitions {
        let split_seed = derive_seed(spec.seed, &[0, rep as u64]);
        split_seeds.push(split_seed);
        let parts = split(
            &data,
            &SplitSpec {
                train_fraction: spec.train_fraction,
                validation_fraction: spec.validation_fraction,
                seed: split_seed,
            },
        )?;
        let (tr, va, te) = if spec.standardize {
            let (tr, mut rest, _) = standardize(&parts.train, &[&parts.validation, &parts.test])?;
            let te = rest.pop().expect("two sets");
            let va = rest.pop().expect("two sets");
            (tr, va, te)
        } else {
            (parts.train, parts.validation, parts.test)
        };

        for (ai, alpha) in alphas.iter().enumerate() {
            let mut warm: Option<ModelState> = None;
            for (li, &lambda) in spec.lambdas.iter().enumerate() {
                let seed = derive_seed(spec.seed, &[1, rep as u64, ai as u64, li as u64]);
                let settings = TrainSettings {
                    algorithm: spec.algorithm,
                    q: spec.q,
                    penalty: spec.penalty,
                    alpha: alpha.unwrap_or(1.0),
                    lambda,
                    batch_fraction: spec.batch_fraction,
                    patience: spec.patience,
                    eps_stop: spec.eps_stop,
                    max_epochs: spec.max_epochs,
                    time_limit,
                    eps_schedule: spec.eps_schedule.clone(),
                    seed,
                };
                let trace_file = format!("rep{rep:02}_a{ai:02}_l{li:02}.csv");
                let mut record = RunRecord {
                    repetition: rep,
                    alpha: *alpha,
                    lambda,
                    seed,
                    test_accuracy: f64::NAN,
                    validation_accuracy: f64::NAN,
                    sparsity: f64::NAN,
                    seconds: 0.0,
                    epochs: 0,
                    iterations: 0,
                    final_objective: None,
                    stop_reason: "aborted".into(),
                    error: None,
                    selected: Vec::new(),
                    trace_file: None,
                };
                match train(&tr, Some(&va), &settings, warm.as_ref()) {
                    Ok(out) => {
                        record.test_accuracy = accuracy_metric(&out.model, &te);
                        record.validation_accuracy = out.validation_accuracy.unwrap_or(f64::NAN);
                        record.sparsity = sparsity_metric(&out.model);
                        record.seconds = out.seconds;
                        record.epochs = out.trace.epochs;
                        record.iterations = out.trace.iterations();
                        record.final_objective = out.trace.final_objective();
                        record.stop_reason = out.trace.stop_reason.map(|s| s.to_string()).unwrap_or_default();
                        record.selected = out.model.selected_rows(SPARSITY_THRESHOLD);
                        record.trace_file = Some(trace_file);
                        traces.push(out.trace);
                        models.push(out.model.clone());
                        warm = Some(out.model);
                    }
                    Err(HarnessError::Solver(e)) => {
                        record.error = Some(e.to_string());
                        traces.push(ConvergenceTrace::default());
                        models.push(warm.clone().unwrap_or_else(|| ModelState::zeros(tr.dim(), tr.classes())));
                    }
                    Err(e) => return Err(e),
                }
                runs.push(record);
            }
        }
    }

    let aggregates = aggregate(&runs, &alphas, &spec.lambdas);
    let headline = headline(&runs, spec.repetitions);
    Ok(RunReport {
        spec: spec.clone(),
        split_seeds,
        runs,
        aggregates,
        headline,
        traces,
        models,
    })
}

pub(super) fn aggregate(runs: &[RunRecord], alphas: &[Option<f64>], lambdas: &[f64]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for alpha in alphas {
        for &lambda in lambdas {
            let cell: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.alpha == *alpha && r.lambda == lambda && !r.aborted())
                .collect();
            let aborted = runs
                .iter()
                .filter(|r| r.alpha == *alpha && r.lambda == lambda && r.aborted())
                .count();
            let col = |f: fn(&RunRecord) -> f64| Stat::of(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
            out.push(Aggregate {
                alpha: *alpha,
                lambda,
                completed: cell.len(),
                aborted,
                test_accuracy: col(|r| r.test_accuracy),
                validation_accuracy: col(|r| r.validation_accuracy),
                sparsity: col(|r| r.sparsity),
                seconds: col(|r| r.seconds),
            });
        }
    }
    out
}

pub(super) fn headline(runs: &[RunRecord], repetitions: usize) -> Headline {
    let mut choices = Vec::new();
    for rep in 0..repetitions {
        let mut best: Option<usize> = None;
        for (idx, r) in runs.iter().enumerate() {
            if r.repetition != rep || r.aborted() || r.validation_accuracy.is_nan() {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    let cur = &runs[b];
                    r.validation_accuracy > cur.validation_accuracy
                        || (r.validation_accuracy == cur.validation_accuracy && r.lambda > cur.lambda)
                }
            };
            if better {
                best = Some(idx);
            }
        }
        if let Some(idx) = best {
            let r = &runs[idx];
            choices.push(Choice {
                repetition: rep,
                alpha: r.alpha,
                lambda: r.lambda,
                validation_accuracy: r.validation_accuracy,
                test_accuracy: r.test_accuracy,
                sparsity: r.sparsity,
                seconds: r.seconds,
                run: idx,
            });
        }
    }
    let col = |f: fn(&Choice) -> f64| Stat::of(&choices.iter().map(f).collect::<Vec<_>>());
    Headline {
        test_accuracy: col(|c| c.test_accuracy),
        sparsity: col(|c| c.sparsity),
        seconds: col(|c| c.seconds),
        choices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(rep: usize, alpha: f64, lambda: f64, val: f64) -> RunRecord {
        RunRecord {
            repetition: rep,
            alpha: Some(alpha),
            lambda,
            seed: 0,
            test_accuracy: val - 1.0,
            validation_accuracy: val,
            sparsity: 50.0,
            seconds: 1.0,
            epochs: 1,
            iterations: 1,
            final_objective: None,
            stop_reason: "max_epochs".into(),
            error: None,
            selected: vec![],
            trace_file: None,
        }
    }

    #[test]
    fn ties_go_to_the_larger_lambda() {
        let runs = vec![
            record(0, 1.0, 10.0, 80.0),
            record(0, 1.0, 1.0, 90.0),
            record(0, 1.0, 0.1, 90.0),
            record(0, 2.0, 3.0, 90.0),
        ];
        let h = headline(&runs, 1);
        assert_eq!(h.choices.len(), 1);
        assert_eq!(h.choices[0].lambda, 3.0);
        assert_eq!(h.choices[0].alpha, Some(2.0));
        assert_eq!(h.test_accuracy.mean, 89.0);
    }

    #[test]
    fn equal_lambda_tie_keeps_first_alpha() {
        let runs = vec![record(0, 1.0, 1.0, 90.0), record(0, 2.0, 1.0, 90.0)];
        assert_eq!(headline(&runs, 1).choices[0].alpha, Some(1.0));
    }

    #[test]
    fn stat_examples() {
        let s = Stat::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Stat::of(&[4.0]).std, 0.0);
        assert!(Stat::of(&[]).mean.is_nan());
    }

    #[test]
    fn aggregates_skip_aborted_runs() {
        let mut bad = record(1, 1.0, 1.0, 0.0);
        bad.error = Some("boom".into());
        let runs = vec![record(0, 1.0, 1.0, 90.0), bad];
        let a = aggregate(&runs, &[Some(1.0)], &[1.0]);
        assert_eq!(a[0].completed, 1);
        assert_eq!(a[0].aborted, 1);
        assert_eq!(a[0].validation_accuracy.mean, 90.0);
    }
}
