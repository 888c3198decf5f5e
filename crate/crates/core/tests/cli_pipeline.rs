use std::path::Path;

use serde_json::Value;
use tempfile::TempDir;

use tvoirf::cli::{ingest_csv, main_with_args};
use tvoirf::oirf::OirfCurve;
use tvoirf::var::benchmark_model;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("tvoirf").chain(args.iter().copied()))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn simulated(dir: &TempDir, t: usize, delta: f64, seed: u64) -> std::path::PathBuf {
    let out = dir.path().join(format!("sim-{t}-{delta}-{seed}"));
    let code = run(&[
        "simulate", "--T", &t.to_string(), "--delta", &delta.to_string(), "--seed", &seed.to_string(),
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    out.join("series.csv")
}

#[test]
fn simulate_then_fit_recovers_coefficients() {
    let dir = TempDir::new().unwrap();
    let csv = simulated(&dir, 4000, 1.0, 3);
    let series = ingest_csv(&csv).unwrap();
    assert_eq!((series.data.rows(), series.data.cols()), (4000, 2));
    let meta = read_json(&csv.with_file_name("series.json"));
    assert_eq!(meta["config"]["seed"], 3);

    let out = dir.path().join("fit");
    assert_eq!(run(&["fit", "-i", csv.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]), 0);
    let fit = read_json(&out.join("fit.json"));
    let truth = benchmark_model().theta();
    for key in ["ols", "als"] {
        let theta: Vec<f64> = serde_json::from_value(fit[key]["theta"].clone()).unwrap();
        for (a, b) in theta.iter().zip(&truth) {
            assert!((a - b).abs() < 0.06, "{key}: {theta:?}");
        }
        assert_eq!(fit[key]["stable"], true);
    }
    assert_eq!(fit["sample_size"], 4000);
}

#[test]
fn oirf_outputs_agree() {
    let dir = TempDir::new().unwrap();
    let csv = simulated(&dir, 800, 1.0, 5);
    let out = dir.path().join("oirf");
    let code = run(&[
        "oirf", "-i", csv.to_str().unwrap(), "--r", "0.5", "--q", "0.5", "--variant", "averaged", "--horizon", "6",
        "--stderr", "gaussian", "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(out.join("oirf.json")).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    for key in ["variant", "r", "q", "horizons", "values", "stderr", "sample_size", "config", "h"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["variant"], "averaged");
    let curve = OirfCurve::from_json(&text).unwrap();
    assert_eq!(curve.horizon(), 6);
    let from_csv = OirfCurve::values_from_csv(&std::fs::read_to_string(out.join("oirf.csv")).unwrap()).unwrap();
    assert_eq!(from_csv, curve.values);
    let se: Vec<Vec<Vec<f64>>> = serde_json::from_value(doc["stderr"].clone()).unwrap();
    assert_eq!(se.len(), 7);
    assert!(se.iter().flatten().flatten().all(|v| v.is_finite() && *v >= 0.0));
}

#[test]
fn homoscedastic_variants_are_close() {
    let dir = TempDir::new().unwrap();
    let csv = simulated(&dir, 3200, 0.0, 9);
    let mut values = Vec::new();
    for variant in ["standard", "approximated-als", "averaged"] {
        let out = dir.path().join(variant);
        let code = run(&[
            "oirf", "-i", csv.to_str().unwrap(), "--r", "0.5", "--q", "0.6", "--variant", variant, "--horizon", "3",
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        values.push(OirfCurve::from_json(&std::fs::read_to_string(out.join("oirf.json")).unwrap()).unwrap().values);
    }
    for h in 0..=3 {
        for k in 0..4 {
            let s = values[0][h].as_slice()[k];
            for other in &values[1..] {
                assert!((other[h].as_slice()[k] - s).abs() < 0.1 * s.abs().max(0.05), "h={h} k={k}");
            }
        }
    }
}

#[test]
fn index_and_dated_windows() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("dated.csv");
    let series = ingest_csv(&simulated(&dir, 600, 1.0, 4)).unwrap();
    let mut text = String::from("date,a,b\n");
    for t in 0..600 {
        text.push_str(&format!("{}-{:02},{},{}\n", 1960 + t / 12, t % 12 + 1, series.data[(t, 0)], series.data[(t, 1)]));
    }
    std::fs::write(&csv, text).unwrap();
    let out = dir.path().join("index");
    let code = run(&[
        "index", "-i", csv.to_str().unwrap(), "--from", "1970-01", "--to", "1999-12", "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let doc = read_json(&out.join("index.json"));
    for key in ["which", "r", "q", "value", "eigen_gap", "boundary_flag", "h", "config"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    let (r, q) = (doc["r"].as_f64().unwrap(), doc["q"].as_f64().unwrap());
    assert!((q - 359.0 / 600.0).abs() < 1e-12);
    assert!((r - (121.0 + 480.0) / 1200.0).abs() < 1e-12);
    assert!(doc["value"].as_f64().unwrap() > 0.9);
}

#[test]
fn mc_writes_requested_records() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("mc");
    assert_eq!(run(&["mc", "--reps", "50", "--T", "200", "--seed", "1", "--out-dir", out.to_str().unwrap()]), 0);
    let mut reader = csv::Reader::from_path(out.join("records.csv")).unwrap();
    assert_eq!(reader.records().count(), 50);
    assert!(out.join("config.json").exists());
    assert_eq!(read_json(&out.join("run.json"))["records"], 50);
    assert!(std::fs::read_dir(out.join("summaries")).unwrap().count() >= 1);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n3,oops\n4,5\n").unwrap();
    assert_eq!(run(&["fit", "-i", bad.to_str().unwrap(), "--out-dir", out]), 2);
    assert_eq!(run(&["fit", "-i", dir.path().join("missing.csv").to_str().unwrap(), "--out-dir", out]), 2);
    assert_eq!(run(&["fit", "--no-such-flag"]), 2);

    let zeros = dir.path().join("zeros.csv");
    std::fs::write(&zeros, "a,b\n".to_string() + &"0,0\n".repeat(100)).unwrap();
    assert_eq!(run(&["fit", "-i", zeros.to_str().unwrap(), "--out-dir", out]), 3);

    let csv = simulated(&dir, 300, 1.0, 2);
    let csv = csv.to_str().unwrap();
    assert_eq!(run(&["index", "-i", csv, "--r", "0.1", "--q", "0.5", "--out-dir", out]), 4);
    assert_eq!(run(&["mc", "--reps", "5", "--T", "100", "--q", "0.5", "--h-rule", "0.6", "--out-dir", out]), 4);
    assert_eq!(run(&["index", "-i", csv, "--r", "0.5", "--q", "0.3", "--h-rule", "0.3", "--out-dir", out]), 4);
    assert_eq!(run(&["--help"]), 0);
}
