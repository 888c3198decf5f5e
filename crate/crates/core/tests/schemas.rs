use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use tvoirf::cli::{ingest_csv, main_with_args};
use tvoirf::covpath::{CovariancePath, ShapeFn};
use tvoirf::oirf::OirfCurve;
use tvoirf::var::{benchmark_model, simulate, DEFAULT_BURN_IN};

fn run(args: &[&str]) {
    let code = main_with_args(std::iter::once("tvoirf").chain(args.iter().copied()));
    assert_eq!(code, 0, "{args:?}");
}

fn check(doc: &Path, schema: &str) {
    let schema_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let instance: Value = serde_json::from_str(&std::fs::read_to_string(doc).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", doc.display());
}

#[test]
fn emitted_json_matches_schemas() {
    let dir = TempDir::new().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    run(&["simulate", "--T", "400", "--seed", "8", "--out-dir", &p("sim")]);
    let csv = p("sim/series.csv");
    run(&["fit", "-i", &csv, "--bandwidth-grid", "0.1,0.14,0.2", "--out-dir", &p("fit")]);
    run(&["fit", "-i", &csv, "--bandwidth", "0.15", "--out-dir", &p("fit2")]);
    run(&["oirf", "-i", &csv, "--r", "0.5", "--q", "0.4", "--stderr", "empirical", "--out-dir", &p("avg")]);
    run(&["oirf", "-i", &csv, "--variant", "standard", "--out-dir", &p("std")]);
    run(&["oirf", "-i", &csv, "--variant", "pointwise", "--r", "0.3", "--out-dir", &p("pw")]);
    run(&["index", "-i", &csv, "--r", "0.5", "--q", "0.5", "--h-rule", "t27", "--out-dir", &p("idx")]);
    run(&["mc", "--reps", "4", "--T", "100,200", "--index-only", "--out-dir", &p("mc")]);

    check(&dir.path().join("sim/series.json"), "series.schema.json");
    check(&dir.path().join("fit/fit.json"), "fit.schema.json");
    check(&dir.path().join("fit2/fit.json"), "fit.schema.json");
    for d in ["avg", "std", "pw"] {
        check(&dir.path().join(d).join("oirf.json"), "oirf.schema.json");
    }
    check(&dir.path().join("idx/index.json"), "index.schema.json");
    check(&dir.path().join("mc/config.json"), "mc_study.schema.json");
    check(&dir.path().join("mc/run.json"), "mc_run.schema.json");
}

#[test]
fn emitted_csv_reingests_losslessly() {
    let dir = TempDir::new().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    run(&["simulate", "--T", "300", "--seed", "12", "--delta", "0.5", "--shape", "step", "--out-dir", &p("sim")]);
    let series = ingest_csv(&dir.path().join("sim/series.csv")).unwrap();
    let path = CovariancePath::benchmark(0.5, ShapeFn::Step).unwrap();
    let direct = simulate(&benchmark_model(), &path, 300, 12, DEFAULT_BURN_IN).unwrap();
    assert_eq!(series.data, direct);

    run(&["oirf", "-i", &p("sim/series.csv"), "--r", "0.5", "--q", "0.5", "--stderr", "gaussian", "--out-dir", &p("o")]);
    let curve = OirfCurve::from_json(&std::fs::read_to_string(dir.path().join("o/oirf.json")).unwrap()).unwrap();
    let values = OirfCurve::values_from_csv(&std::fs::read_to_string(dir.path().join("o/oirf.csv")).unwrap()).unwrap();
    assert_eq!(values, curve.values);

    run(&["mc", "--reps", "3", "--T", "100", "--out-dir", &p("mc")]);
    for entry in std::fs::read_dir(dir.path().join("mc/summaries")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let width = reader.headers().unwrap().len();
        for rec in reader.records() {
            let rec = rec.unwrap();
            assert_eq!(rec.len(), width);
            for field in rec.iter().skip(1) {
                let v: f64 = field.parse().unwrap_or(f64::NAN);
                if v.is_finite() {
                    assert_eq!(format!("{:.16e}", v).parse::<f64>().unwrap(), v);
                }
            }
        }
    }
}
