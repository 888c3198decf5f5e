//! Nonparametric estimation of the time-varying covariance: rule-of-thumb and
//! cross-validated bandwidths, compared with the true path at a few dates.
//!
//! cargo run --release --example covariance_smoothing -- [T]

use tvoirf::covpath::{CovariancePath, ShapeFn};
use tvoirf::estimation::{bandwidth_cv, kernel_cov, ols_fit, KernelSpec};
use tvoirf::matrix::rel_frobenius;
use tvoirf::var::{benchmark_model, simulate, DEFAULT_BURN_IN};

fn main() -> tvoirf::Result<()> {
    let t: usize = std::env::args().nth(1).map_or(1000, |s| s.parse().expect("T"));
    let path = CovariancePath::benchmark(1.0, ShapeFn::Sin)?;
    let data = simulate(&benchmark_model(), &path, t, 7, DEFAULT_BURN_IN)?;
    let ols = ols_fit(&data, 1)?;

    let rot = KernelSpec::rule_of_thumb(t);
    let bt = (t as f64).powf(-1.0 / 3.0);
    let grid: Vec<f64> = (0..12).map(|k| bt * 0.4 * 1.2f64.powi(k)).collect();
    let cv = bandwidth_cv(&ols, &rot, &grid)?;
    println!("rule of thumb b = {bt:.4}, cross-validated {:?}", cv.chosen);

    let cv_spec = KernelSpec { bandwidth: cv.chosen.clone(), ..rot.clone() };
    for (label, spec) in [("rule of thumb", rot), ("cv", cv_spec)] {
        let fit = kernel_cov(&ols, &spec)?;
        print!("{label:>14}:");
        for r in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let err = rel_frobenius(fit.sigma_at(r), &path.eval(r)?);
            print!("  r={r:.2} err {err:.3}");
        }
        println!();
    }
    Ok(())
}
