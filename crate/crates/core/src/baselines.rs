//! Stochastic proximal gradient descent for ℓ2,1-regularized multinomial
//! logistic regression,
//!
//! ```text
//! min (1/n) Σ ℓ_i(W, b) + λ Σ_j ‖W_j‖₂
//! ```
//!
//! Each iteration takes a gradient step on a minibatch and applies the group
//! soft-threshold to every row of `W`.

use std::time::Duration;

use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dc::{BlockSampler, ConvergenceTrace, EpochAction, EpochMonitor, SolverError, StopReason, TraceRecord};
use crate::mlr::{clamp_loss, ModelState};
use crate::prox::{prox_l2_into, GroupNorm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// `α_l = n/(10l)` with `n` the number of training rows and `l >= 1`.
    InverseLinear,
    Constant(f64),
}

impl StepRule {
    pub fn step(&self, n: usize, l: usize) -> f64 {
        match *self {
            StepRule::InverseLinear => n as f64 / (10.0 * l as f64),
            StepRule::Constant(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpgdConfig {
    pub batch_fraction: f64,
    pub lambda: f64,
    pub step: StepRule,
    pub max_epochs: usize,
    /// Read by score-based monitors, not by the loop itself.
    pub patience: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
}

impl Default for SpgdConfig {
    fn default() -> Self {
        SpgdConfig {
            batch_fraction: 0.1,
            lambda: 0.0,
            step: StepRule::InverseLinear,
            max_epochs: 100,
            patience: 5,
            seed: 0,
            time_limit: None,
        }
    }
}

impl SpgdConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(SolverError::Config(format!(
                "batch_fraction must lie in (0, 1], got {}",
                self.batch_fraction
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SolverError::Config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if let StepRule::Constant(a) = self.step {
            if !(a > 0.0 && a.is_finite()) {
                return Err(SolverError::Config(format!("step must be positive, got {a}")));
            }
        }
        if self.max_epochs == 0 {
            return Err(SolverError::Config("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SpgdOutput {
    pub model: ModelState,
    pub trace: ConvergenceTrace,
}

/// `(1/n) Σ ℓ_i + λ‖W‖_{2,1}`.
pub fn l21_objective(data: &Dataset, model: &ModelState, lambda: f64) -> f64 {
    let q = model.classes;
    let mut s = vec![0.0; q];
    let mut loss = 0.0;
    for i in 0..data.n() {
        let row = data.row(i);
        s.copy_from_slice(&model.b);
        for (j, v) in row.iter() {
            for (sk, wk) in s.iter_mut().zip(&model.w[j * q..(j + 1) * q]) {
                *sk += v * wk;
            }
        }
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += clamp_loss(lse - s[data.class_index(i)]);
    }
    let group: f64 = (0..model.d).map(|j| GroupNorm::L2.norm(model.row(j))).sum();
    loss / data.n() as f64 + lambda * group
}

/// `(‖u‖₂ − c)_+ · u/‖u‖₂`, written out directly.
pub fn group_soft_threshold(u: &[f64], c: f64, out: &mut [f64]) {
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= c || norm == 0.0 {
        out.fill(0.0);
    } else {
        let scale = (norm - c) / norm;
        for (o, v) in out.iter_mut().zip(u) {
            *o = scale * v;
        }
    }
}

/// Runs SPGD from `model0`.
///
/// Minibatches are the blocks of a random partition reshuffled every epoch.
/// The trace holds one record per iteration with the ℓ2,1 objective at epoch
/// boundaries. The monitor receives the flat `[W | b | t]` layout with
/// `t_j = ‖W_j‖₂`.
pub fn run_spgd(
    data: &Dataset,
    config: &SpgdConfig,
    model0: &ModelState,
    mut monitor: Option<&mut dyn EpochMonitor>,
) -> Result<SpgdOutput, SolverError> {
    config.validate()?;
    let (n, d, q) = (data.n(), data.dim(), data.classes());
    if model0.d != d || model0.classes != q {
        return Err(SolverError::Config(format!(
            "initial model is {}×{}, data needs {d}×{q}",
            model0.d, model0.classes
        )));
    }
    let start = Instant::now();
    let sampler = BlockSampler::new(n, config.batch_fraction, config.seed);
    let mut model = model0.clone();
    model.refresh_t(GroupNorm::L2);
    let mut trace = ConvergenceTrace::default();
    trace.records.push(TraceRecord {
        iteration: 0,
        epoch: 0,
        objective: Some(finite(l21_objective(data, &model, config.lambda), 0)?),
        surrogate: None,
        step_norm: 0.0,
        eps: 0.0,
        elapsed: 0.0,
    });

    let mut grad_w = vec![0.0; d * q];
    let mut grad_b = vec![0.0; q];
    let mut u_bar = vec![0.0; d * q];
    let mut r = vec![0.0; q];
    let mut l = 0;
    let mut epoch = 1;
    let mut stop = None;
    while stop.is_none() {
        let order = sampler.epoch_order(epoch as u64);
        for (pos, &k) in order.iter().enumerate() {
            l += 1;
            let batch = sampler.block(k);
            let alpha = config.step.step(n, l);
            minibatch_gradient(data, &model, batch, &mut r, &mut grad_w, &mut grad_b);
            for ((u, w), g) in u_bar.iter_mut().zip(&model.w).zip(&grad_w) {
                *u = w - alpha * g;
            }
            let before: Vec<f64> = model.w.iter().chain(&model.b).copied().collect();
            for j in 0..d {
                prox_l2_into(&u_bar[j * q..(j + 1) * q], alpha * config.lambda, 1.0, &mut model.w[j * q..(j + 1) * q]);
            }
            for (b, g) in model.b.iter_mut().zip(&grad_b) {
                *b -= alpha * g;
            }
            if let Some(pos) = model.w.iter().chain(&model.b).position(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite {
                    iteration: l,
                    what: format!("parameter {pos}"),
                });
            }
            model.refresh_t(GroupNorm::L2);
            let step = before
                .iter()
                .zip(model.w.iter().chain(&model.b))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();

            let boundary = pos + 1 == order.len();
            let objective = if boundary {
                Some(finite(l21_objective(data, &model, config.lambda), l)?)
            } else {
                None
            };
            trace.records.push(TraceRecord {
                iteration: l,
                epoch,
                objective,
                surrogate: None,
                step_norm: step,
                eps: 0.0,
                elapsed: start.elapsed().as_secs_f64(),
            });
            if boundary {
                trace.epochs = epoch;
                if let Some(m) = monitor.as_deref_mut() {
                    if m.on_epoch(epoch, &model.to_flat()) == EpochAction::Stop {
                        stop = Some(StopReason::EarlyStopped);
                    }
                }
                if stop.is_none() && epoch >= config.max_epochs {
                    stop = Some(StopReason::MaxEpochs);
                }
            }
            if stop.is_none() && config.time_limit.is_some_and(|t| start.elapsed() >= t) {
                stop = Some(StopReason::TimeLimit);
            }
            if stop.is_some() {
                break;
            }
        }
        epoch += 1;
    }
    trace.stop_reason = stop;
    Ok(SpgdOutput { model, trace })
}

/// Mean over `batch` of `x_i r_iᵀ` and `r_i`, with `r_i = p(x_i) − e_{y_i}`.
fn minibatch_gradient(
    data: &Dataset,
    model: &ModelState,
    batch: &[usize],
    r: &mut [f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
) {
    let q = model.classes;
    grad_w.fill(0.0);
    grad_b.fill(0.0);
    for &i in batch {
        let row = data.row(i);
        r.copy_from_slice(&model.b);
        for (j, v) in row.iter() {
            for (rk, wk) in r.iter_mut().zip(&model.w[j * q..(j + 1) * q]) {
                *rk += v * wk;
            }
        }
        let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for rk in r.iter_mut() {
            *rk = (*rk - m).exp();
            z += *rk;
        }
        for rk in r.iter_mut() {
            *rk /= z;
        }
        r[data.class_index(i)] -= 1.0;
        for (j, v) in row.iter() {
            for (g, rk) in grad_w[j * q..(j + 1) * q].iter_mut().zip(r.iter()) {
                *g += v * rk;
            }
        }
        for (g, rk) in grad_b.iter_mut().zip(r.iter()) {
            *g += rk;
        }
    }
    let inv = 1.0 / batch.len() as f64;
    grad_w.iter_mut().chain(grad_b.iter_mut()).for_each(|g| *g *= inv);
}

fn finite(f: f64, iteration: usize) -> Result<f64, SolverError> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(SolverError::NonFinite {
            iteration,
            what: format!("objective = {f}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_linear_step_rule() {
        assert_eq!(StepRule::InverseLinear.step(1000, 10), 10.0);
        assert_eq!(StepRule::InverseLinear.step(1000, 1), 100.0);
        assert_eq!(StepRule::Constant(0.5).step(1000, 7), 0.5);
    }

    #[test]
    fn soft_threshold_matches_prox() {
        let u = [3.0, -4.0];
        let mut a = [0.0; 2];
        let mut b = [0.0; 2];
        group_soft_threshold(&u, 2.5, &mut a);
        prox_l2_into(&u, 2.5, 1.0, &mut b);
        assert_eq!(a, [1.5, -2.0]);
        assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        group_soft_threshold(&u, 5.0, &mut a);
        assert_eq!(a, [0.0, 0.0]);
    }
}
