use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dc::{ConvergenceTrace, TraceRecord};

use super::path::{Aggregate, Headline, RunRecord, RunReport};
use super::{ExperimentSpec, HarnessError};

const TRACE_HEADER: &str = "iteration,epoch,objective,surrogate,gap,step_norm,eps,time";
const RUNS_HEADER: &str = "algorithm,q,penalty,repetition,alpha,lambda,seed,test_accuracy,validation_accuracy,sparsity,seconds,epochs,iterations,final_objective,stop_reason,error";
const AGGREGATES_HEADER: &str = "algorithm,q,penalty,alpha,lambda,completed,aborted,test_accuracy_mean,test_accuracy_std,validation_accuracy_mean,validation_accuracy_std,sparsity_mean,sparsity_std,seconds_mean,seconds_std";

/// Machine-readable summary, `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub spec: ExperimentSpec,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
    pub headline: Headline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    crate_version: String,
    spec: ExperimentSpec,
    split_seeds: Vec<u64>,
    run_seeds: Vec<u64>,
    traces: Vec<Option<String>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn alpha_text(a: Option<f64>) -> String {
    opt(a)
}

/// One row per iterate; empty cells for values only known at epoch
/// boundaries. Floats use the shortest representation that parses back to
/// the same bits.
pub fn trace_csv(trace: &ConvergenceTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iteration,
            r.epoch,
            opt(r.objective),
            opt(r.surrogate),
            opt(r.surrogate_gap()),
            r.step_norm,
            r.eps,
            r.elapsed
        );
    }
    out
}

/// Inverse of [`trace_csv`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRACE_HEADER => {}
        other => {
            return Err(HarnessError::Spec(format!(
                "trace header mismatch: {:?}",
                other.unwrap_or_default()
            )))
        }
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| HarnessError::Spec(format!("trace line {}: {m}", k + 2));
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 {
            return Err(bad(format!("expected 8 fields, found {}", cells.len())));
        }
        let num = |c: &str| c.parse::<f64>().map_err(|e| bad(format!("`{c}`: {e}")));
        let maybe = |c: &str| if c.is_empty() { Ok(None) } else { num(c).map(Some) };
        let int = |c: &str| c.parse::<usize>().map_err(|e| bad(format!("`{c}`: {e}")));
        out.push(TraceRecord {
            iteration: int(cells[0])?,
            epoch: int(cells[1])?,
            objective: maybe(cells[2])?,
            surrogate: maybe(cells[3])?,
            step_norm: num(cells[5])?,
            eps: num(cells[6])?,
            elapsed: num(cells[7])?,
        });
    }
    Ok(out)
}

fn runs_csv(spec: &ExperimentSpec, runs: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            spec.algorithm,
            spec.q,
            spec.penalty,
            r.repetition,
            alpha_text(r.alpha),
            r.lambda,
            r.seed,
            r.test_accuracy,
            r.validation_accuracy,
            r.sparsity,
            r.seconds,
            r.epochs,
            r.iterations,
            opt(r.final_objective),
            r.stop_reason,
            r.error.as_deref().map(csv_quote).unwrap_or_default()
        );
    }
    out
}

fn aggregates_csv(spec: &ExperimentSpec, aggregates: &[Aggregate]) -> String {
    let mut out = String::from(AGGREGATES_HEADER);
    out.push('\n');
    for a in aggregates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            spec.algorithm,
            spec.q,
            spec.penalty,
            alpha_text(a.alpha),
            a.lambda,
            a.completed,
            a.aborted,
            a.test_accuracy.mean,
            a.test_accuracy.std,
            a.validation_accuracy.mean,
            a.validation_accuracy.std,
            a.sparsity.mean,
            a.sparsity.std,
            a.seconds.mean,
            a.seconds.std
        );
    }
    out
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\"").replace(['\n', '\r'], " "))
}

/// Writes the report into `dir`:
///
/// - `traces/*.csv`, one objective trace per completed run,
/// - `runs.csv` and `aggregates.csv`,
/// - `manifest.json` with the spec and every seed,
/// - `summary.json`, written last through a temporary file and a rename.
///
/// A failure before the final rename leaves no `summary.json` behind.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<(), HarnessError> {
    let traces_dir = dir.join("traces");
    fs::create_dir_all(&traces_dir).map_err(io_err(&traces_dir))?;
    for (run, trace) in report.runs.iter().zip(&report.traces) {
        if let Some(name) = &run.trace_file {
            write_file(&traces_dir.join(name), trace_csv(trace).as_bytes())?;
        }
    }
    write_file(&dir.join("runs.csv"), runs_csv(&report.spec, &report.runs).as_bytes())?;
    write_file(
        &dir.join("aggregates.csv"),
        aggregates_csv(&report.spec, &report.aggregates).as_bytes(),
    )?;
    let manifest = Manifest {
        format: 1,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        spec: report.spec.clone(),
        split_seeds: report.split_seeds.clone(),
        run_seeds: report.runs.iter().map(|r| r.seed).collect(),
        traces: report.runs.iter().map(|r| r.trace_file.clone()).collect(),
    };
    let manifest_path = dir.join("manifest.json");
    write_file(&manifest_path, &to_json(&manifest, &manifest_path)?)?;

    let summary = Summary {
        spec: report.spec.clone(),
        runs: report.runs.clone(),
        aggregates: report.aggregates.clone(),
        headline: report.headline.clone(),
    };
    let final_path = dir.join("summary.json");
    let tmp = dir.join(".summary.json.tmp");
    write_file(&tmp, &to_json(&summary, &final_path)?)?;
    fs::rename(&tmp, &final_path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(&final_path)(e)
    })
}

fn to_json<T: Serialize>(value: &T, path: &Path) -> Result<Vec<u8>, HarnessError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Reads `summary.json` from a report directory (or the file itself).
pub fn load_summary(path: &Path) -> Result<Summary, HarnessError> {
    let file: PathBuf = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(io_err(&file))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: file, source })
}

/// Fixed-width table of the aggregates and the headline.
pub fn render_aggregates(summary: &Summary) -> String {
    let spec = &summary.spec;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} q={} penalty={} repetitions={}",
        spec.algorithm, spec.q, spec.penalty, spec.repetitions
    );
    let _ = writeln!(
        out,
        "{:>8} {:>10} {:>18} {:>18} {:>18} {:>14}",
        "alpha", "lambda", "val acc %", "test acc %", "sparsity %", "seconds"
    );
    let pm = |s: &super::Stat, p: usize| format!("{:.p$} ± {:.p$}", s.mean, s.std);
    for a in &summary.aggregates {
        let _ = writeln!(
            out,
            "{:>8} {:>10} {:>18} {:>18} {:>18} {:>14}",
            a.alpha.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
            a.lambda,
            pm(&a.validation_accuracy, 2),
            pm(&a.test_accuracy, 2),
            pm(&a.sparsity, 2),
            pm(&a.seconds, 3)
        );
    }
    let h = &summary.headline;
    let _ = writeln!(
        out,
        "best by validation: test acc {} %, sparsity {} %, {} s",
        pm(&h.test_accuracy, 2),
        pm(&h.sparsity, 2),
        pm(&h.seconds, 3)
    );
    out
}
