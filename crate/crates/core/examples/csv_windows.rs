//! Ingests a dated CSV, maps calendar windows onto (r, q) and compares the
//! approximated and averaged responses over a window containing a variance shift
//! and one inside a single regime.
//!
//! cargo run --release --example csv_windows -- [file.csv]

use tvoirf::cli::{ingest_csv, ingest_str, series_csv, window_from_dates};
use tvoirf::covpath::CovariancePath;
use tvoirf::estimation::HRule;
use tvoirf::matrix::DenseMatrix;
use tvoirf::oirf::{EstimateOptions, Variant, WindowEstimates};
use tvoirf::var::{benchmark_model, simulate, DEFAULT_BURN_IN};

fn synthetic_monthly() -> tvoirf::Result<String> {
    let low = DenseMatrix::from_rows(&[&[1.0, 0.3], &[0.3, 0.5]]);
    let high = low.scale(4.0);
    let path = CovariancePath::piecewise(vec![0.5], vec![low, high])?;
    let data = simulate(&benchmark_model(), &path, 480, 21, DEFAULT_BURN_IN)?;
    let body = series_csv(&data, &["x".into(), "y".into()])?;
    let mut out = String::new();
    for (k, line) in body.lines().enumerate() {
        if k == 0 {
            out.push_str(&format!("date,{line}\n"));
        } else {
            out.push_str(&format!("{}-{:02},{line}\n", 1980 + (k - 1) / 12, (k - 1) % 12 + 1));
        }
    }
    Ok(out)
}

fn main() -> tvoirf::Result<()> {
    let series = match std::env::args().nth(1) {
        Some(file) => ingest_csv(std::path::Path::new(&file))?,
        None => ingest_str(&synthetic_monthly()?)?,
    };
    let dates = series.dates.as_ref().expect("dated series");
    let t = series.data.rows();
    println!("{t} observations, columns {:?}, {} .. {}", series.columns, dates[0], dates[t - 1]);

    let windows = [(t / 4, 3 * t / 4), (t / 2 + t / 20, t - t / 20)];
    for (a, b) in windows {
        let (from, to) = (dates[a].as_str(), dates[b].as_str());
        let w = window_from_dates(dates, from, to)?;
        let h = HRule::T13.resolve(w.q, t)?;
        let est = WindowEstimates::fit(&series.data, 1, &w, Some(h), &EstimateOptions::for_sample(t))?;
        let approx = est.curve(Variant::ApproximatedAls, 3)?;
        let avg = est.curve(Variant::Averaged, 3)?;
        println!("\n{from} .. {to}: r = {:.3}, q = {:.3}, h = {h:.4}", w.r, w.q);
        for i in 0..=3 {
            let (a, b) = (approx.values[i][(1, 0)], avg.values[i][(1, 0)]);
            println!("  h={i}  approximated {a:>8.4}  averaged {b:>8.4}  diff {:>6.2}%", 100.0 * (a / b - 1.0));
        }
    }
    Ok(())
}
