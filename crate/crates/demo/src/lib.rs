//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export is a thin wrapper over a plain Rust function of the same name
//! with a `_values` suffix, so the numerics are testable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sdca::data::generate_sim1;
use sdca::dc::{run_dca, run_sdca, ConvergenceTrace, EpsSchedule, SolverConfig};
use sdca::mlr::{build_problem, ModelState, PenaltyConfig, PenaltyKind};
use sdca::prox::{GroupNorm, ProxQuery};

fn norm(q: &str) -> Result<GroupNorm, String> {
    q.parse()
}

/// Prox of the 2-D point `u`: `argmin_w (ρ/2)‖w‖² + c‖w‖_q − ⟨u, w⟩`.
pub fn prox_point_values(ux: f64, uy: f64, c: f64, rho: f64, q: &str) -> Result<Vec<f64>, String> {
    if !(c >= 0.0 && rho > 0.0) {
        return Err(format!("need c >= 0 and rho > 0, got c = {c}, rho = {rho}"));
    }
    let u = [ux, uy];
    Ok(ProxQuery::new(&u, c, rho, norm(q)?).solve())
}

/// Prox of every point of a `steps × steps` grid over `[−extent, extent]²`,
/// flattened as `[ux, uy, wx, wy]` per point in row-major grid order.
pub fn prox_field_values(q: &str, c: f64, rho: f64, extent: f64, steps: usize) -> Result<Vec<f64>, String> {
    if steps < 2 || steps > 200 {
        return Err(format!("steps must lie in 2..=200, got {steps}"));
    }
    let q = norm(q)?;
    if !(c >= 0.0 && rho > 0.0 && extent > 0.0) {
        return Err("need c >= 0, rho > 0 and extent > 0".into());
    }
    let mut out = Vec::with_capacity(4 * steps * steps);
    let mut w = [0.0; 2];
    for r in 0..steps {
        for s in 0..steps {
            let u = [
                -extent + 2.0 * extent * s as f64 / (steps - 1) as f64,
                extent - 2.0 * extent * r as f64 / (steps - 1) as f64,
            ];
            ProxQuery::new(&u, c, rho, q).solve_into(&mut w);
            out.extend_from_slice(&[u[0], u[1], w[0], w[1]]);
        }
    }
    Ok(out)
}

/// `η(t)` on `samples` evenly spaced points of `[0, t_max]`.
pub fn penalty_curve_values(kind: &str, alpha: f64, t_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    let kind: PenaltyKind = kind.parse()?;
    let cfg = PenaltyConfig::new(kind, alpha, 1.0, GroupNorm::L2).map_err(|e| e.to_string())?;
    if !(t_max > 0.0) || samples < 2 {
        return Err("need t_max > 0 and at least two samples".into());
    }
    Ok((0..samples)
        .map(|k| cfg.eta(t_max * k as f64 / (samples - 1) as f64))
        .collect())
}

#[derive(Debug, Serialize)]
pub struct TracePoint {
    pub epoch: usize,
    pub iteration: usize,
    pub objective: f64,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct TraceComparison {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub dca: Vec<TracePoint>,
    pub sdca: Vec<TracePoint>,
    pub dca_sparsity: f64,
    pub sdca_sparsity: f64,
}

fn points(trace: &ConvergenceTrace) -> Vec<TracePoint> {
    trace
        .records
        .iter()
        .filter_map(|r| {
            r.objective.map(|objective| TracePoint {
                epoch: r.epoch,
                iteration: r.iteration,
                objective,
                seconds: r.elapsed,
            })
        })
        .collect()
}

fn selected_share(data_dim: usize, classes: usize, x: &[f64]) -> f64 {
    let m = ModelState::from_flat(data_dim, classes, x);
    100.0 * m.selected_rows(1e-8).len() as f64 / data_dim as f64
}

/// Objective per epoch of DCA and SDCA on the same generated sim1 sample.
#[allow(clippy::too_many_arguments)]
pub fn objective_trace_values(
    n: usize,
    lambda: f64,
    alpha: f64,
    q: &str,
    batch_fraction: f64,
    epochs: usize,
    seed: u64,
) -> Result<TraceComparison, String> {
    if !(4..=20_000).contains(&n) {
        return Err(format!("n must lie in 4..=20000, got {n}"));
    }
    if epochs == 0 || epochs > 500 {
        return Err(format!("epochs must lie in 1..=500, got {epochs}"));
    }
    let data = generate_sim1(n, seed).map_err(|e| e.to_string())?;
    let cfg = PenaltyConfig::new(PenaltyKind::Exponential, alpha, lambda, norm(q)?).map_err(|e| e.to_string())?;
    let problem = build_problem(&data, cfg).map_err(|e| e.to_string())?;
    let x0 = ModelState::zeros(data.dim(), data.classes()).to_flat();
    let base = SolverConfig {
        max_epochs: epochs,
        eps_stop: 0.0,
        eps_schedule: EpsSchedule::Zero,
        seed,
        ..SolverConfig::default()
    };
    let dca = run_dca(&problem, &x0, &SolverConfig { batch_fraction: 1.0, ..base.clone() }, None)
        .map_err(|e| e.to_string())?;
    let sdca = run_sdca(&problem, &x0, &SolverConfig { batch_fraction, ..base }, None).map_err(|e| e.to_string())?;
    Ok(TraceComparison {
        n,
        d: data.dim(),
        rho: problem.rho(),
        dca: points(&dca.trace),
        sdca: points(&sdca.trace),
        dca_sparsity: selected_share(data.dim(), data.classes(), &dca.point),
        sdca_sparsity: selected_share(data.dim(), data.classes(), &sdca.point),
    })
}

#[wasm_bindgen]
pub fn prox_point(ux: f64, uy: f64, c: f64, rho: f64, q: &str) -> Result<Vec<f64>, JsError> {
    prox_point_values(ux, uy, c, rho, q).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn prox_field(q: &str, c: f64, rho: f64, extent: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    prox_field_values(q, c, rho, extent, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn penalty_curve(kind: &str, alpha: f64, t_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    penalty_curve_values(kind, alpha, t_max, samples).map_err(|e| JsError::new(&e))
}

/// JSON-encoded [`TraceComparison`].
#[wasm_bindgen]
pub fn objective_trace(
    n: usize,
    lambda: f64,
    alpha: f64,
    q: &str,
    batch_fraction: f64,
    epochs: usize,
    seed: u32,
) -> Result<String, JsError> {
    let out = objective_trace_values(n, lambda, alpha, q, batch_fraction, epochs, seed as u64).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&out).map_err(|e| JsError::new(&e.to_string()))
}
