//! End-to-end runs of the binary on small synthetic corpora.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_chartsignal");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs a command that must succeed and returns its run directory.
fn ok(dir: &Path, args: &[&str]) -> PathBuf {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    dir.join(String::from_utf8(out.stdout).unwrap().trim())
}

fn synth(dir: &Path, tickers: &str, days: &str) {
    ok(
        dir,
        &[
            "synth",
            "--corpus",
            "corpus",
            "--tickers",
            tickers,
            "--days",
            days,
            "--seed",
            "3",
        ],
    );
}

const FAST: &str = "logistic_regression,gaussian_naive_bayes,k_nearest_neighbors";

#[test]
fn synth_label_build_gives_a_balanced_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "50", "500");
    let label = ok(dir, &["label", "--corpus", "corpus", "--rule", "MACD"]);
    let events = fs::read_to_string(label.join("signals_MACD.csv")).unwrap();
    assert!(events.starts_with("ticker,index,date,rule,label"));
    assert!(events.lines().count() > 50);

    let args = [
        "build-dataset",
        "--corpus",
        "corpus",
        "--rule",
        "MACD",
        "--resolution",
        "13",
    ];
    let built = ok(dir, &args);
    let manifest: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(built.join("manifest.json")).unwrap()).unwrap();
    assert!(!manifest.is_empty() && manifest.len() <= 50 * 10 * 2);
    let positives = manifest.iter().filter(|e| e["label"] == 1).count();
    assert_eq!(2 * positives, manifest.len());
    for e in &manifest {
        assert!(built.join(e["image_path"].as_str().unwrap()).is_file());
    }

    // Remove some images: a second run recreates only those.
    let victims: Vec<PathBuf> = manifest
        .iter()
        .take(7)
        .map(|e| built.join(e["image_path"].as_str().unwrap()))
        .collect();
    let before = fs::read(&victims[0]).unwrap();
    for v in &victims {
        fs::remove_file(v).unwrap();
    }
    assert_eq!(ok(dir, &args), built);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(built.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["data"]["rendered"], 7);
    assert_eq!(summary["data"]["reused"], manifest.len() - 7);
    assert_eq!(fs::read(&victims[0]).unwrap(), before);
}

#[test]
fn compare_covers_every_style_and_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "20", "400");
    let run_dir = ok(
        dir,
        &[
            "compare",
            "--corpus",
            "corpus",
            "--resolution",
            "8",
            "--per-ticker",
            "3",
            "--classifier",
            FAST,
        ],
    );
    let table = fs::read_to_string(run_dir.join("table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let images = rows.iter().filter(|r| r[1] != "tabular").count();
    assert_eq!(images, 15);
    assert_eq!(rows.len() - images, 3);
    for rule in ["BB", "MACD", "RSI"] {
        let styles: std::collections::BTreeSet<&str> = rows.iter().filter(|r| r[0] == rule).map(|r| r[1]).collect();
        assert_eq!(styles.len(), 6, "{rule}");
    }
    assert!(run_dir.join("compare.png").is_file());
}

#[test]
fn evaluate_is_reproducible_and_stamped() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "15", "400");
    let args = |out: &'static str| {
        vec![
            "evaluate",
            "--corpus",
            "corpus",
            "--out",
            out,
            "--rule",
            "RSI",
            "--resolution",
            "8",
            "--per-ticker",
            "3",
            "--classifier",
            FAST,
        ]
    };
    let a = ok(dir, &args("a"));
    let b = ok(dir, &args("b"));
    assert_eq!(a.file_name(), b.file_name());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n:?}");
    }
    let fp = a
        .file_name()
        .unwrap()
        .to_str()
        .unwrap()
        .trim_start_matches("evaluate-")
        .to_string();
    let report = fs::read_to_string(a.join("report.json")).unwrap();
    assert!(report.contains(&format!("\"fingerprint\": \"{fp}")));

    let c = ok(dir, &{
        let mut v = args("a");
        v.extend(["--seed", "1"]);
        v
    });
    assert_ne!(c, a);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(run(dir, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(dir, &["evaluate", "--rule", "XYZ"]).status.code(), Some(1));
    assert_eq!(run(dir, &["ingest", "--corpus", "missing"]).status.code(), Some(1));
    fs::write(dir.join("bad.toml"), "no_such_key = 1\n").unwrap();
    assert_eq!(run(dir, &["label", "--config", "bad.toml"]).status.code(), Some(1));
    assert_eq!(run(dir, &["--help"]).status.code(), Some(0));

    fs::create_dir(dir.join("broken")).unwrap();
    fs::write(
        dir.join("broken/X.csv"),
        "date,open,high,low,close,adj_close,volume\n2020-01-02,1,0.5,2,1,1,10\n",
    )
    .unwrap();
    let out = run(dir, &["ingest", "--corpus", "broken"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_then_forecast_with_the_saved_model() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "10", "500");
    let trained = ok(
        dir,
        &[
            "train",
            "--corpus",
            "corpus",
            "--rule",
            "BB",
            "--resolution",
            "8",
            "--per-ticker",
            "4",
            "--classifier",
            FAST,
        ],
    );
    let model = trained.join("models/BB_candle_ohlc_8.json");
    assert!(model.is_file());
    let fc = ok(
        dir,
        &[
            "forecast",
            "--corpus",
            "corpus",
            "--rule",
            "BB",
            "--resolution",
            "8",
            "--model",
            model.to_str().unwrap(),
            "--ticker",
            "SYN000",
            "--test-range",
            "2011-01-01:2011-06-30",
        ],
    );
    let csv = fs::read_to_string(fc.join("forecast_BB_candle_ohlc_8.csv")).unwrap();
    assert!(csv.starts_with("ticker,date,vote_fraction,predicted,true\n"));
    assert!(csv.lines().skip(1).all(|l| l.starts_with("SYN000,2011-")));
    assert!(csv.lines().count() > 100);
    assert!(fc.join("charts/BB_candle_ohlc_8_SYN000.png").is_file());
}
