//! Simulates the benchmark bivariate VAR(1) with a sinusoidal variance path and
//! compares least-squares and adaptive least-squares estimates of the lag matrix.
//!
//! cargo run --release --example simulate_and_fit -- [T] [seed]

use tvoirf::covpath::{CovariancePath, ShapeFn};
use tvoirf::estimation::{als_fit, kernel_cov, ols_fit, KernelSpec};
use tvoirf::var::{benchmark_model, simulate, DEFAULT_BURN_IN};

fn main() -> tvoirf::Result<()> {
    let mut args = std::env::args().skip(1);
    let t: usize = args.next().map_or(800, |s| s.parse().expect("T"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let model = benchmark_model();
    let path = CovariancePath::benchmark(1.0, ShapeFn::Sin)?;
    let data = simulate(&model, &path, t, seed, DEFAULT_BURN_IN)?;

    let ols = ols_fit(&data, 1)?;
    let kfit = kernel_cov(&ols, &KernelSpec::rule_of_thumb(t))?;
    let als = als_fit(&data, 1, &kfit)?;

    println!("spectral radius {:.4}", model.companion().spectral_radius);
    println!("{:>8} {:>10} {:>10} {:>10}", "entry", "true", "ols", "als");
    for (k, ((a, b), c)) in model.theta().iter().zip(&ols.theta).zip(&als.theta).enumerate() {
        println!("{:>8} {a:>10.4} {b:>10.4} {c:>10.4}", format!("theta{}", k + 1));
    }
    let err = |est: &[f64]| est.iter().zip(model.theta()).map(|(e, v)| (e - v).powi(2)).sum::<f64>().sqrt();
    println!("euclidean error: ols {:.4}, als {:.4}", err(&ols.theta), err(&als.theta));
    Ok(())
}
