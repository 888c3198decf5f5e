//! Population asymptotic covariances of the windowed responses for the benchmark
//! model, and the efficiency gap between least squares and adaptive least squares.
//!
//! cargo run --release --example asymptotic_variance -- [delta]

use tvoirf::covpath::{CovariancePath, ShapeFn, WindowSpec};
use tvoirf::matrix::min_eigenvalue;
use tvoirf::oirf::{asymptotic_blocks, oirf_variance, FourthMoment, Variant};
use tvoirf::var::benchmark_model;

fn main() -> tvoirf::Result<()> {
    let delta: f64 = std::env::args().nth(1).map_or(1.0, |s| s.parse().expect("delta"));
    let model = benchmark_model();
    let path = CovariancePath::benchmark(delta, ShapeFn::Sin)?;
    let w = WindowSpec::new(0.5, 0.5)?;
    let blocks = asymptotic_blocks(&model, &path, &w, None, FourthMoment::Gaussian)?;

    println!("truncation order {}", blocks.truncation);
    let gap = (&blocks.ols_covariance - &blocks.als_covariance).symmetrize()?;
    println!("min eigenvalue of OLS - ALS covariance: {:.3e}", min_eigenvalue(&gap)?);
    println!("\nasymptotic variance of entry (2,1), scaled by T");
    println!("{:>3} {:>12} {:>12} {:>12}", "h", "approx-ols", "approx-als", "averaged");
    for i in 0..=5 {
        let mut row = Vec::new();
        for v in [Variant::ApproximatedOls, Variant::ApproximatedAls, Variant::Averaged] {
            // vec index of (2,1) for d = 2
            row.push(oirf_variance(&blocks, &model, i, v)?[(1, 1)]);
        }
        println!("{i:>3} {:>12.5} {:>12.5} {:>12.5}", row[0], row[1], row[2]);
    }
    Ok(())
}
