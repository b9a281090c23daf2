use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kirsf::SurvivalModel;

fn kirsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kirsf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = kirsf(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Data lines of a file with `#` metadata and one header row.
fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(String::from)
        .collect()
}

fn simulate(dir: &Path, name: &str, n: usize, seed: u64) -> std::path::PathBuf {
    let csv = dir.join(name);
    ok(&["simulate", "--n", &n.to_string(), "--d", "5", "--seed", &seed.to_string(), "--out", p(&csv)]);
    csv
}

#[test]
fn simulate_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate(dir.path(), "sim.csv", 50, 1);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("time,event,X1,X2,X3,X4,X5\n"));
    assert_eq!(text.lines().count(), 51);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sim.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 1);
    assert_eq!(meta["labels"].as_array().unwrap().len(), 50);
    assert!(meta["generator"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn fit_reports_oob_error_and_predict_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate(dir.path(), "d.csv", 80, 2);
    let model = dir.path().join("m.kirsf");
    let report = dir.path().join("report.csv");
    let stdout = ok(&[
        "fit", "--input", p(&csv), "--time", "time", "--event", "event", "--ntree", "100", "--seed", "7",
        "--model", p(&model), "--report", p(&report),
    ]);
    let line = stdout.lines().find(|l| l.starts_with("oob_prediction_error")).unwrap();
    let err: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&err));

    let pred = dir.path().join("pred.csv");
    ok(&["predict", "--model", p(&model), "--input", p(&csv), "--out", p(&pred)]);
    assert_eq!(data_lines(&pred), data_lines(&report));
}

#[test]
fn kernel_model_embeds_training_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let train = simulate(dir.path(), "train.csv", 100, 3);
    let test = simulate(dir.path(), "test.csv", 900, 4);
    let model = dir.path().join("k.kirsf");
    ok(&[
        "fit", "--input", p(&train), "--time", "time", "--event", "event", "--ntree", "30", "--kernel",
        "gaussian", "--sigma2", "20", "--model", p(&model),
    ]);
    let m = SurvivalModel::load(&model).unwrap();
    assert_eq!(m.kernel().unwrap().basis().len(), 100);
    assert_eq!(m.input_dim(), 5);

    let pred = dir.path().join("pred.csv");
    ok(&["predict", "--model", p(&model), "--input", p(&test), "--out", p(&pred)]);
    assert_eq!(data_lines(&pred).len(), 900);
}

#[test]
fn predict_curves_cover_each_row() {
    let dir = tempfile::tempdir().unwrap();
    let train = simulate(dir.path(), "train.csv", 60, 5);
    let model = dir.path().join("m.kirsf");
    ok(&["fit", "--input", p(&train), "--time", "time", "--event", "event", "--ntree", "20", "--model", p(&model)]);
    let two = dir.path().join("two.csv");
    let text = fs::read_to_string(&train).unwrap();
    fs::write(&two, text.lines().take(3).collect::<Vec<_>>().join("\n")).unwrap();
    let pred = dir.path().join("pred.csv");
    let curves = dir.path().join("curves.csv");
    ok(&["predict", "--model", p(&model), "--input", p(&two), "--out", p(&pred), "--curves", p(&curves)]);
    let rows = data_lines(&curves);
    for id in ["0", "1"] {
        assert!(rows.iter().any(|r| r.split(',').next() == Some(id)));
    }
    for r in &rows {
        let f: Vec<f64> = r.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((f[3] - (-f[2]).exp()).abs() < 1e-15);
    }
}

#[test]
fn curves_with_true_survival() {
    let dir = tempfile::tempdir().unwrap();
    let train = simulate(dir.path(), "train.csv", 60, 6);
    let model = dir.path().join("m.kirsf");
    ok(&["fit", "--input", p(&train), "--time", "time", "--event", "event", "--ntree", "20", "--model", p(&model)]);
    let out = dir.path().join("curves.csv");
    let base = ["curves", "--model", p(&model), "--input", p(&train), "--time", "time", "--event", "event", "--out", p(&out)];

    let missing = kirsf(&[&base[..], &["--true-curves"]].concat());
    assert_eq!(missing.status.code(), Some(2));

    let meta = dir.path().join("train.csv.meta.json");
    ok(&[&base[..], &["--true-curves", "--sim-meta", p(&meta)]].concat());
    let rows = data_lines(&out);
    let mut by_series: std::collections::BTreeMap<String, Vec<(f64, f64)>> = Default::default();
    for r in &rows {
        let f: Vec<&str> = r.split(',').collect();
        by_series
            .entry(format!("{}:{}", f[0], f[1]))
            .or_default()
            .push((f[2].parse().unwrap(), f[3].parse().unwrap()));
    }
    assert!(by_series.contains_key("true_class2:"));
    for (name, pts) in &by_series {
        assert_eq!(pts[0], (0.0, 1.0), "{name}");
        assert!(pts.windows(2).all(|w| w[1].1 <= w[0].1), "{name}");
    }
    for &(t, s) in &by_series["true_class1:"] {
        assert!((s - (-0.1 * t).exp()).abs() < 1e-15);
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let out = kirsf(&["fit", "--input", "x.csv", "--event", "e", "--model", "m"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--time"));

    let out = kirsf(&["experiment-bmt", "--endpoint", "nonexistent"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("primary") && err.contains("platelet"), "{err}");

    let out = kirsf(&["experiment-ringnorm", "--kernel", "none"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = kirsf(&[
        "fit", "--input", p(&dir.path().join("missing.csv")), "--time", "t", "--event", "e", "--model",
        p(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
}

#[test]
fn ringnorm_smoke_run_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "experiment-ringnorm", "--realizations", "2", "--ntree", "10", "--n", "150", "--d", "5", "--seed", "3",
        "--curves", "--out-dir", p(dir.path()),
    ]);
    assert!(stdout.contains("KIRSF"));
    assert_eq!(data_lines(&dir.path().join("ringnorm_realizations.csv")).len(), 2);
    let summary = data_lines(&dir.path().join("ringnorm_summary.tsv"));
    assert_eq!(summary.len(), 2);
    assert!(summary.iter().all(|l| l.ends_with("\t2")));
    let ttest = data_lines(&dir.path().join("ringnorm_ttest.tsv"));
    assert_eq!(ttest[0].split('\t').nth(1), Some("2"));
    assert!(dir.path().join("ringnorm_curves_kirsf.csv").exists());
    let meta = fs::read_to_string(dir.path().join("ringnorm_summary.tsv")).unwrap();
    assert!(meta.contains("# master_seed: 3"));
}

#[test]
fn bmt_smoke_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        ok(&["experiment-bmt", "--realizations", "3", "--ntree", "10", "--seed", "9", "--out-dir", p(&out)]);
        fs::read(out.join("bmt_realizations.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(String::from_utf8(a).unwrap().lines().filter(|l| !l.starts_with('#')).count(), 4);
}
