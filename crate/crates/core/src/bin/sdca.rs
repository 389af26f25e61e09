use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sdca::data::{holdout, load_sparse_text, write_sparse_text, Format, GeneratorSpec, LoadOptions, SimKind};
use sdca::harness::{
    accuracy_metric, emit_report, load_summary, render_aggregates, run_path, sparsity_metric, train, trace_csv,
    Algorithm, DatasetSource, ExperimentSpec, HarnessError, Summary, TrainSettings,
};
use sdca::mlr::{ModelFile, PenaltyKind};
use sdca::prox::GroupNorm;

#[derive(Parser)]
#[command(name = "sdca", version, about = "Stochastic DCA for group-sparse multinomial logistic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Train one model.
    Train(TrainArgs),
    /// Run the full λ-path protocol of an experiment spec.
    Path(PathArgs),
    /// Print the summary of a finished run, or replay it from its manifest.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Generator spec file with `kind`, `n`, `d` and `seed` keys.
    #[arg(long, conflicts_with_all = ["kind", "n", "d", "seed"])]
    spec: Option<PathBuf>,
    #[arg(long, required_unless_present = "spec")]
    kind: Option<SimKind>,
    /// Number of rows (sim3: total over the four classes).
    #[arg(long, required_unless_present = "spec")]
    n: Option<usize>,
    /// Feature count (sim3 only).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "libsvm")]
    format: Format,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "libsvm")]
    format: Format,
    #[arg(long, default_value = "sdca")]
    algo: Algorithm,
    #[arg(long, default_value = "2")]
    q: GroupNorm,
    #[arg(long, default_value = "exp")]
    penalty: PenaltyKind,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    batch_frac: f64,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    #[arg(long, default_value_t = 1e-6)]
    eps_stop: f64,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    /// Wall-clock cap in seconds.
    #[arg(long, default_value_t = 7200.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Share of rows held out for early stopping; 0 trains on everything
    /// without early stopping.
    #[arg(long, default_value_t = 0.2)]
    validation_fraction: f64,
    /// Model output file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the objective trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Report directory or summary file.
    #[arg(long)]
    dir: PathBuf,
    /// Re-run the spec recorded in the manifest and write a fresh report here.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Print the summary as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train_cmd(a),
        Command::Path(a) => path_cmd(a),
        Command::Report(a) => report_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn gen(a: GenArgs) -> Result<(), HarnessError> {
    let spec = match &a.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_error(path))?;
            GeneratorSpec::parse(&text)?
        }
        None => GeneratorSpec {
            kind: a.kind.expect("required by clap"),
            n: a.n.expect("required by clap"),
            d: a.d,
            seed: a.seed.unwrap_or(0),
        },
    };
    let data = spec.generate()?;
    write_sparse_text(&data, &a.out, a.format)?;
    println!(
        "{}",
        json!({ "out": a.out, "n": data.n(), "d": data.dim(), "classes": data.classes(), "class_counts": data.class_counts() })
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<(), HarnessError> {
    let data = load_sparse_text(&a.data, a.format, &LoadOptions::default())?;
    let (tr, va) = if a.validation_fraction > 0.0 {
        let (tr, va) = holdout(&data, a.validation_fraction, a.seed)?;
        (tr, Some(va))
    } else {
        (data, None)
    };
    if !(a.time_limit > 0.0) {
        return Err(HarnessError::Spec(format!("time limit must be positive, got {}", a.time_limit)));
    }
    let settings = TrainSettings {
        algorithm: a.algo,
        q: a.q,
        penalty: a.penalty,
        alpha: a.alpha,
        lambda: a.lambda,
        batch_fraction: a.batch_frac,
        patience: a.patience,
        eps_stop: a.eps_stop,
        max_epochs: a.max_epochs,
        time_limit: Some(Duration::from_secs_f64(a.time_limit)),
        seed: a.seed,
        ..TrainSettings::default()
    };
    let out = train(&tr, va.as_ref(), &settings, None)?;
    ModelFile {
        model: out.model.clone(),
        penalty: settings.penalty_config()?,
        rho: out.rho,
    }
    .save(&a.out)?;
    if let Some(path) = &a.trace {
        std::fs::write(path, trace_csv(&out.trace)).map_err(io_error(path))?;
    }
    println!(
        "{}",
        json!({
            "model": a.out,
            "algorithm": a.algo.to_string(),
            "objective": out.trace.final_objective(),
            "epochs": out.trace.epochs,
            "iterations": out.trace.iterations(),
            "stop_reason": out.trace.stop_reason.map(|s| s.to_string()),
            "best_epoch": out.best_epoch,
            "train_accuracy": accuracy_metric(&out.model, &tr),
            "validation_accuracy": out.validation_accuracy,
            "sparsity": sparsity_metric(&out.model),
            "seconds": out.seconds,
        })
    );
    Ok(())
}

fn path_cmd(a: PathArgs) -> Result<(), HarnessError> {
    let mut spec = ExperimentSpec::load(&a.spec)?;
    // Relative data paths are taken relative to the spec file; the manifest
    // records the resolved path so a replay works from anywhere.
    if let DatasetSource::File { path, .. } = &mut spec.dataset {
        if path.is_relative() {
            if let Some(dir) = a.spec.parent() {
                *path = dir.join(&*path);
            }
        }
    }
    let report = run_path(&spec, None)?;
    emit_report(&report, &a.out)?;
    let summary = load_summary(&a.out)?;
    print!("{}", render_aggregates(&summary));
    Ok(())
}

fn report_cmd(a: ReportArgs) -> Result<(), HarnessError> {
    let summary: Summary = load_summary(&a.dir)?;
    let summary = match &a.replay {
        Some(out) => {
            let manifest = if a.dir.is_dir() { a.dir.join("manifest.json") } else { a.dir.with_file_name("manifest.json") };
            let text = std::fs::read_to_string(&manifest).map_err(io_error(&manifest))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| HarnessError::Json {
                path: manifest.clone(),
                source,
            })?;
            let spec: ExperimentSpec = serde_json::from_value(value["spec"].clone()).map_err(|source| {
                HarnessError::Json {
                    path: manifest.clone(),
                    source,
                }
            })?;
            if spec != summary.spec {
                return Err(HarnessError::Spec("manifest and summary disagree on the spec".into()));
            }
            let report = run_path(&spec, None)?;
            emit_report(&report, out)?;
            load_summary(out)?
        }
        None => summary,
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    } else {
        print!("{}", render_aggregates(&summary));
    }
    Ok(())
}
