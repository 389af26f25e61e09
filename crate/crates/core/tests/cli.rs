use std::path::Path;
use std::process::{Command, Output};

use sdca::data::{load_sparse_text, Format, LoadOptions};
use sdca::mlr::ModelFile;

fn sdca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdca")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not an error record ({e}): {stderr}"))
}

#[test]
fn gen_then_train_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sim1.svm");
    let out = sdca(&["gen", "--kind", "sim1", "--n", "200", "--seed", "4", "--out", s(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ds = load_sparse_text(&data, Format::Libsvm, &LoadOptions::default()).unwrap();
    assert_eq!((ds.n(), ds.classes()), (200, 4));

    let model = dir.path().join("m.bin");
    let trace = dir.path().join("trace.csv");
    for algo in ["dca", "sdca", "isdca", "spgd"] {
        let out = sdca(&[
            "train", "--data", s(&data), "--algo", algo, "--q", "inf", "--penalty", "capl1", "--alpha", "2",
            "--lambda", "0.01", "--max-epochs", "10", "--out", s(&model), "--trace", s(&trace),
        ]);
        assert!(out.status.success(), "{algo}: {}", String::from_utf8_lossy(&out.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(summary["algorithm"], algo);
        let file = ModelFile::load(&model).unwrap();
        assert_eq!((file.model.d, file.model.classes), (50, 4));
        assert_eq!(file.penalty.alpha, 2.0);
        let text = std::fs::read_to_string(&trace).unwrap();
        assert!(text.starts_with("iteration,epoch,objective"));
    }
}

#[test]
fn gen_reads_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("gen.txt");
    std::fs::write(&spec, "# small\nkind = sim3\nn = 40\nd = 120\nseed = 1\n").unwrap();
    let data = dir.path().join("sim3.csv");
    let out = sdca(&["gen", "--spec", s(&spec), "--out", s(&data), "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ds = load_sparse_text(&data, Format::Csv, &LoadOptions::default()).unwrap();
    assert_eq!((ds.n(), ds.dim()), (40, 120));
}

#[test]
fn path_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.svm");
    assert!(sdca(&["gen", "--kind", "sim2", "--n", "150", "--out", s(&data)]).status.success());
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"dataset": {"source": "file", "path": "d.svm", "format": "libsvm"},
            "algorithm": "sdca", "alphas": [1.0], "lambdas": [0.1, 0.01],
            "repetitions": 2, "max_epochs": 8, "seed": 9}"#,
    )
    .unwrap();
    let report = dir.path().join("report");
    let out = sdca(&["path", "--spec", s(&spec), "--out", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("best by validation"));
    assert!(report.join("summary.json").exists());

    let again = dir.path().join("again");
    let out = sdca(&["report", "--dir", s(&report), "--replay", s(&again), "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a: serde_json::Value = serde_json::from_slice(&std::fs::read(report.join("summary.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let strip = |v: &serde_json::Value| {
        v["runs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r["seconds"] = serde_json::Value::Null;
                r
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn failures_exit_nonzero_with_an_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.svm");
    let out = sdca(&["train", "--data", s(&missing), "--lambda", "1", "--out", s(&dir.path().join("m"))]);
    assert!(!out.status.success());
    assert_eq!(error_record(&out)["error"], "io");

    let bad = dir.path().join("bad.svm");
    std::fs::write(&bad, "1 1:0.5\n2 2:abc\n").unwrap();
    let out = sdca(&["train", "--data", s(&bad), "--lambda", "1", "--out", s(&dir.path().join("m"))]);
    assert!(!out.status.success());
    let rec = error_record(&out);
    assert_eq!(rec["error"], "parse");
    assert!(rec["message"].as_str().unwrap().contains('2'));

    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"dataset": {"source": "generator", "kind": "sim1", "n": 100}, "lambdas": [1, 2]}"#).unwrap();
    let out = sdca(&["path", "--spec", s(&spec), "--out", s(&dir.path().join("r"))]);
    assert!(!out.status.success());
    assert_eq!(error_record(&out)["error"], "config");
}
