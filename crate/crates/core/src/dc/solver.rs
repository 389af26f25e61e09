use std::time::Duration;

use web_time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::aggregate::{average_into, AggregatedSubgradient, StorageMode};
use super::lemma::check_eps_subgradient;
use super::problem::DcProblem;
use super::sampling::BlockSampler;
use super::SolverError;

/// Tolerances `ε^l` used by the inexact engine at iteration `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EpsSchedule {
    /// `ε^l = 0`: the inexact engine then runs exactly like SDCA.
    Zero,
    /// `ε^l = ε₀/(l+1)²` with `ε₀ = 1e-2·(1 + |F(x⁰)|)`.
    Auto,
    /// `ε^l = scale/(l+1)²`.
    InverseSquare { scale: f64 },
    /// `ε^l = scale·ratio^l` with `0 <= ratio < 1`.
    Geometric { scale: f64, ratio: f64 },
    /// `ε^l = scale/(l+1)`. Not summable.
    Harmonic { scale: f64 },
    /// Listed values, zero afterwards.
    Explicit(Vec<f64>),
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::Auto
    }
}

impl EpsSchedule {
    pub fn is_summable(&self) -> bool {
        match self {
            EpsSchedule::Harmonic { scale } => *scale == 0.0,
            EpsSchedule::Geometric { ratio, .. } => *ratio < 1.0,
            _ => true,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::Config(format!("negative ε in schedule: {what}")));
        match self {
            EpsSchedule::Zero | EpsSchedule::Auto => Ok(()),
            EpsSchedule::InverseSquare { scale } | EpsSchedule::Harmonic { scale } => {
                if *scale < 0.0 || !scale.is_finite() {
                    bad(&format!("scale {scale}"))
                } else {
                    Ok(())
                }
            }
            EpsSchedule::Geometric { scale, ratio } => {
                if *scale < 0.0 || !scale.is_finite() || *ratio < 0.0 {
                    bad(&format!("scale {scale}, ratio {ratio}"))
                } else {
                    Ok(())
                }
            }
            EpsSchedule::Explicit(values) => match values.iter().position(|e| !(*e >= 0.0) || !e.is_finite()) {
                Some(l) => bad(&format!("ε^{l} = {}", values[l])),
                None => Ok(()),
            },
        }
    }

    /// `ε^l`, given `F(x⁰)` for the scale-aware default.
    pub fn value(&self, l: usize, initial_objective: f64) -> f64 {
        let sq = ((l + 1) as f64).powi(2);
        match self {
            EpsSchedule::Zero => 0.0,
            EpsSchedule::Auto => 1e-2 * (1.0 + initial_objective.abs()) / sq,
            EpsSchedule::InverseSquare { scale } => scale / sq,
            EpsSchedule::Geometric { scale, ratio } => scale * ratio.powi(l.min(i32::MAX as usize) as i32),
            EpsSchedule::Harmonic { scale } => scale / (l + 1) as f64,
            EpsSchedule::Explicit(values) => values.get(l).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StopRule {
    /// `|F^{e} − F^{e−1}| <= eps_stop` between epoch boundaries.
    #[default]
    Absolute,
    /// `|F^{e} − F^{e−1}| <= eps_stop · max(1, |F^{e}|)`.
    Relative,
}

/// Spot checks of the ε-subgradient inequality on every linearization the
/// engine consumes. Expensive; meant for tests and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaDiagnostics {
    /// Random probe points drawn per iteration.
    pub probes_per_iteration: usize,
    /// Probes are drawn uniformly in norm up to this radius around the iterate.
    pub probe_radius: f64,
    pub seed: u64,
}

impl Default for LemmaDiagnostics {
    fn default() -> Self {
        LemmaDiagnostics {
            probes_per_iteration: 10,
            probe_radius: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Block size as a fraction of `n`; `1.0` is full-batch DCA.
    pub batch_fraction: f64,
    /// Epoch 0 is the initial full refresh and counts toward this limit.
    pub max_epochs: usize,
    /// Non-improving epochs tolerated by score-based monitors (see
    /// [`EarlyStopping`]); the engine itself never reads it.
    pub patience: usize,
    pub eps_stop: f64,
    pub stop_rule: StopRule,
    pub eps_schedule: EpsSchedule,
    /// Accept a non-summable ε schedule (a warning is recorded).
    pub allow_nonsummable: bool,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    pub storage: StorageMode,
    pub diagnostics: Option<LemmaDiagnostics>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            batch_fraction: 0.1,
            max_epochs: 100,
            patience: 5,
            eps_stop: 1e-6,
            stop_rule: StopRule::Absolute,
            eps_schedule: EpsSchedule::Auto,
            allow_nonsummable: false,
            seed: 0,
            time_limit: None,
            storage: StorageMode::Blocked,
            diagnostics: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(SolverError::Config(format!(
                "batch_fraction must lie in (0, 1], got {}",
                self.batch_fraction
            )));
        }
        if self.max_epochs == 0 {
            return Err(SolverError::Config("max_epochs must be at least 1".into()));
        }
        if !(self.eps_stop >= 0.0) {
            return Err(SolverError::Config(format!("eps_stop must be nonnegative, got {}", self.eps_stop)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Objective difference between epoch boundaries fell below `eps_stop`.
    ObjectiveConverged,
    /// The epoch monitor asked to stop.
    EarlyStopped,
    MaxEpochs,
    TimeLimit,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::ObjectiveConverged => "objective_converged",
            StopReason::EarlyStopped => "early_stopped",
            StopReason::MaxEpochs => "max_epochs",
            StopReason::TimeLimit => "time_limit",
        })
    }
}

/// One iterate `x^l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Epoch during which the iterate was produced (0 for `x⁰` and `x¹`).
    pub epoch: usize,
    /// `F(x^l)`; exact and present only at epoch boundaries.
    pub objective: Option<f64>,
    /// `T^{l−1}(x^l)`, the surrogate that produced this iterate, at the iterate.
    pub surrogate: Option<f64>,
    /// `‖x^l − x^{l−1}‖`.
    pub step_norm: f64,
    /// Tolerance `ε^{l−1}` used to produce this iterate.
    pub eps: f64,
    /// Seconds since the solver started.
    pub elapsed: f64,
}

impl TraceRecord {
    /// `T^{l−1}(x^l) − F(x^l)` when both are known.
    pub fn surrogate_gap(&self) -> Option<f64> {
        Some(self.surrogate? - self.objective?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaStats {
    pub checked: usize,
    pub failed: usize,
    pub skipped_probes: usize,
    pub worst_violation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub stop_reason: Option<StopReason>,
    /// Completed epochs, epoch 0 included.
    pub epochs: usize,
    pub warnings: Vec<String>,
    pub lemma: Option<LemmaStats>,
}

impl ConvergenceTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    /// Records carrying an exact objective, i.e. `x⁰` and every epoch boundary.
    pub fn epoch_records(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.objective.is_some())
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.epoch_records().last().and_then(|r| r.objective)
    }

    pub fn min_surrogate_gap(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(TraceRecord::surrogate_gap)
            .reduce(f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub point: Vec<f64>,
    pub trace: ConvergenceTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochAction {
    Continue,
    Stop,
}

/// Called at every epoch boundary with the current iterate.
pub trait EpochMonitor {
    fn on_epoch(&mut self, epoch: usize, x: &[f64]) -> EpochAction;
}

impl<F: FnMut(usize, &[f64]) -> EpochAction> EpochMonitor for F {
    fn on_epoch(&mut self, epoch: usize, x: &[f64]) -> EpochAction {
        self(epoch, x)
    }
}

/// Patience-based early stopping on a score to maximize.
///
/// Stops once `patience` consecutive epochs fail to improve on the best score
/// seen so far, and keeps the best iterate.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    best_point: Option<Vec<f64>>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            best_point: None,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64, x: &[f64]) -> EpochAction {
        match self.best {
            Some((_, best)) if score <= best => {
                self.stale += 1;
            }
            _ => {
                self.best = Some((epoch, score));
                self.best_point = Some(x.to_vec());
                self.stale = 0;
            }
        }
        if self.stale >= self.patience {
            EpochAction::Stop
        } else {
            EpochAction::Continue
        }
    }

    pub fn best_score(&self) -> Option<f64> {
        self.best.map(|(_, s)| s)
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|(e, _)| e)
    }

    pub fn best_point(&self) -> Option<&[f64]> {
        self.best_point.as_deref()
    }

    pub fn into_best_point(self) -> Option<Vec<f64>> {
        self.best_point
    }

    /// Consecutive non-improving epochs so far.
    pub fn stale_epochs(&self) -> usize {
        self.stale
    }
}

/// Full-batch DCA: every iteration linearizes all `h_i` at the current
/// iterate and minimizes the resulting convex surrogate exactly.
///
/// Every iteration is an epoch boundary.
pub fn run_dca<P: DcProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    config: &SolverConfig,
    mut monitor: Option<&mut dyn EpochMonitor>,
) -> Result<SolverOutput, SolverError> {
    config.validate()?;
    let n = problem.n();
    if n == 0 {
        return Err(SolverError::Config("problem has no components".into()));
    }
    let dim = problem.dim();
    check_start(x0, dim)?;
    let start = Instant::now();
    let all: Vec<usize> = (0..n).collect();

    let mut x = x0.to_vec();
    let mut next = vec![0.0; dim];
    let mut sum = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut trace = ConvergenceTrace::default();
    let mut f_prev = finite_objective(problem, &x, 0)?;
    trace.records.push(initial_record(f_prev));

    let mut l = 0;
    loop {
        let h_sum = problem.linearize_block(&all, &x, &mut sum);
        average_into(&sum, n, &mut v);
        problem.solve_surrogate(&v, 0.0, &mut next);
        check_iterate(&next, l + 1)?;

        let constant = h_sum - super::aggregate::dot(&x, &sum);
        let surrogate = problem.g_value(&next) - (constant + super::aggregate::dot(&next, &sum)) / n as f64;
        let step = distance(&next, &x);
        std::mem::swap(&mut x, &mut next);
        l += 1;

        let f = finite_objective(problem, &x, l)?;
        trace.records.push(TraceRecord {
            iteration: l,
            epoch: l - 1,
            objective: Some(f),
            surrogate: Some(surrogate),
            step_norm: step,
            eps: 0.0,
            elapsed: start.elapsed().as_secs_f64(),
        });
        trace.epochs = l;

        if let Some(reason) = boundary_stop(config, f_prev, f, l, &x, monitor.as_deref_mut()) {
            trace.stop_reason = Some(reason);
            break;
        }
        if past_limit(config, start) {
            trace.stop_reason = Some(StopReason::TimeLimit);
            break;
        }
        f_prev = f;
    }
    Ok(SolverOutput { point: x, trace })
}

/// Stochastic DCA.
///
/// Iteration 0 linearizes every component at `x0`; every later iteration
/// re-linearizes exactly one block of the fixed partition, visiting blocks in
/// a fresh random order each epoch, and keeps the stale linearizations of the
/// others. `F` is evaluated exactly only at epoch boundaries; every iteration
/// records the surrogate value at the new iterate.
pub fn run_sdca<P: DcProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    config: &SolverConfig,
    monitor: Option<&mut dyn EpochMonitor>,
) -> Result<SolverOutput, SolverError> {
    run_stochastic(problem, x0, config, monitor, false)
}

/// Inexact stochastic DCA: as [`run_sdca`] but linearizations use
/// `ε^l`-subgradients and each surrogate is solved to `ε^l` accuracy, with
/// `ε^l` taken from `config.eps_schedule`.
pub fn run_isdca<P: DcProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    config: &SolverConfig,
    monitor: Option<&mut dyn EpochMonitor>,
) -> Result<SolverOutput, SolverError> {
    run_stochastic(problem, x0, config, monitor, true)
}

fn run_stochastic<P: DcProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    config: &SolverConfig,
    mut monitor: Option<&mut dyn EpochMonitor>,
    inexact: bool,
) -> Result<SolverOutput, SolverError> {
    config.validate()?;
    let n = problem.n();
    if n == 0 {
        return Err(SolverError::Config("problem has no components".into()));
    }
    let dim = problem.dim();
    check_start(x0, dim)?;
    let mut trace = ConvergenceTrace::default();
    if inexact {
        config.eps_schedule.validate()?;
        if !config.eps_schedule.is_summable() {
            if !config.allow_nonsummable {
                return Err(SolverError::Config(format!(
                    "ε schedule {:?} is not summable; set allow_nonsummable to run it anyway",
                    config.eps_schedule
                )));
            }
            trace
                .warnings
                .push("ε schedule is not summable; convergence guarantees do not apply".into());
        }
    }

    let start = Instant::now();
    let sampler = BlockSampler::new(n, config.batch_fraction, config.seed);
    let mut table = AggregatedSubgradient::new(sampler.blocks().to_vec(), n, dim, config.storage)?;
    let rho = problem.strong_convexity_modulus();
    let mut diag = config.diagnostics.map(|d| Diagnostics::new(d, dim));

    let mut x = x0.to_vec();
    let mut next = vec![0.0; dim];
    let f0 = finite_objective(problem, &x, 0)?;
    let mut f_prev = f0;
    trace.records.push(initial_record(f0));
    let eps_at = |l: usize| if inexact { config.eps_schedule.value(l, f0) } else { 0.0 };

    let mut l = 0;
    let mut epoch = 0;
    let mut stop = None;
    while stop.is_none() {
        let order: Vec<usize> = if epoch == 0 {
            (0..sampler.num_blocks()).collect()
        } else {
            sampler.epoch_order(epoch as u64)
        };
        // Epoch 0 is the single iteration refreshing every block.
        let groups: Vec<Vec<usize>> = if epoch == 0 { vec![order] } else { order.into_iter().map(|k| vec![k]).collect() };

        for (pos, group) in groups.iter().enumerate() {
            let eps = eps_at(l);
            if let Some(d) = diag.as_mut() {
                d.draw_probes(&x);
            }
            for &k in group {
                match diag.as_mut() {
                    Some(d) => {
                        let mut check = |i: usize, v: &[f64]| d.check(problem, i, &x, v, eps, rho);
                        table.refresh_block(problem, k, l, &x, eps, Some(&mut check));
                    }
                    None => table.refresh_block(problem, k, l, &x, eps, None),
                }
            }
            problem.solve_surrogate(table.aggregate(), eps, &mut next);
            check_iterate(&next, l + 1)?;
            let surrogate = table.surrogate_value(problem, &next);
            let step = distance(&next, &x);
            std::mem::swap(&mut x, &mut next);
            l += 1;

            let boundary = pos + 1 == groups.len();
            let objective = if boundary { Some(finite_objective(problem, &x, l)?) } else { None };
            trace.records.push(TraceRecord {
                iteration: l,
                epoch,
                objective,
                surrogate: Some(surrogate),
                step_norm: step,
                eps,
                elapsed: start.elapsed().as_secs_f64(),
            });

            if let Some(f) = objective {
                trace.epochs = epoch + 1;
                stop = boundary_stop(config, f_prev, f, epoch + 1, &x, monitor.as_deref_mut());
                f_prev = f;
            }
            if stop.is_none() && past_limit(config, start) {
                stop = Some(StopReason::TimeLimit);
            }
            if stop.is_some() {
                break;
            }
        }
        epoch += 1;
    }

    trace.stop_reason = stop;
    trace.lemma = diag.map(|d| d.stats);
    Ok(SolverOutput { point: x, trace })
}

struct Diagnostics {
    config: LemmaDiagnostics,
    rng: ChaCha8Rng,
    probes: Vec<Vec<f64>>,
    dim: usize,
    stats: LemmaStats,
}

impl Diagnostics {
    fn new(config: LemmaDiagnostics, dim: usize) -> Self {
        Diagnostics {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            probes: Vec::new(),
            dim,
            stats: LemmaStats {
                worst_violation: f64::NEG_INFINITY,
                ..LemmaStats::default()
            },
        }
    }

    fn draw_probes(&mut self, x: &[f64]) {
        self.probes.clear();
        for _ in 0..self.config.probes_per_iteration {
            let dir: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut self.rng)).collect();
            let norm = dir.iter().map(|d: &f64| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let radius = self.config.probe_radius * rand::Rng::random::<f64>(&mut self.rng);
            self.probes
                .push(x.iter().zip(&dir).map(|(xk, dk)| xk + radius * dk / norm).collect());
        }
    }

    fn check<P: DcProblem + ?Sized>(&mut self, problem: &P, i: usize, x: &[f64], v: &[f64], eps: f64, rho: f64) {
        let r = check_eps_subgradient(|y| problem.h_value(i, y), x, v, eps, rho, &self.probes);
        self.stats.checked += 1;
        self.stats.skipped_probes += r.skipped.len();
        if !r.holds {
            self.stats.failed += 1;
        }
        self.stats.worst_violation = self.stats.worst_violation.max(r.worst_violation);
    }
}

fn boundary_stop<'m>(
    config: &SolverConfig,
    f_prev: f64,
    f: f64,
    epochs_done: usize,
    x: &[f64],
    monitor: Option<&mut (dyn EpochMonitor + 'm)>,
) -> Option<StopReason> {
    let diff = (f - f_prev).abs();
    let threshold = match config.stop_rule {
        StopRule::Absolute => config.eps_stop,
        StopRule::Relative => config.eps_stop * f.abs().max(1.0),
    };
    if diff <= threshold {
        return Some(StopReason::ObjectiveConverged);
    }
    if let Some(m) = monitor {
        if m.on_epoch(epochs_done, x) == EpochAction::Stop {
            return Some(StopReason::EarlyStopped);
        }
    }
    if epochs_done >= config.max_epochs {
        return Some(StopReason::MaxEpochs);
    }
    None
}

fn past_limit(config: &SolverConfig, start: Instant) -> bool {
    config.time_limit.is_some_and(|limit| start.elapsed() >= limit)
}

fn initial_record(f0: f64) -> TraceRecord {
    TraceRecord {
        iteration: 0,
        epoch: 0,
        objective: Some(f0),
        surrogate: None,
        step_norm: 0.0,
        eps: 0.0,
        elapsed: 0.0,
    }
}

fn check_start(x0: &[f64], dim: usize) -> Result<(), SolverError> {
    if x0.len() != dim {
        return Err(SolverError::Config(format!(
            "starting point has length {}, problem dimension is {dim}",
            x0.len()
        )));
    }
    check_iterate(x0, 0)
}

fn check_iterate(x: &[f64], iteration: usize) -> Result<(), SolverError> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(coord) => Err(SolverError::NonFinite {
            iteration,
            what: format!("iterate coordinate {coord} = {}", x[coord]),
        }),
        None => Ok(()),
    }
}

fn finite_objective<P: DcProblem + ?Sized>(problem: &P, x: &[f64], iteration: usize) -> Result<f64, SolverError> {
    let f = problem.objective(x);
    if f.is_finite() {
        Ok(f)
    } else {
        Err(SolverError::NonFinite {
            iteration,
            what: format!("objective = {f}"),
        })
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
