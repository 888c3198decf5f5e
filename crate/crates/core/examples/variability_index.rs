//! The variance-variability indices: population values across heteroscedasticity
//! levels, and the estimate from one simulated sample per level.
//!
//! cargo run --release --example variability_index -- [T]

use tvoirf::covpath::{CovariancePath, ShapeFn, WindowSpec};
use tvoirf::estimation::{HRule, KernelFn};
use tvoirf::index::{index_estimate, theoretical_index, IndexKind};
use tvoirf::var::{benchmark_model, simulate, DEFAULT_BURN_IN};

fn main() -> tvoirf::Result<()> {
    let t: usize = std::env::args().nth(1).map_or(3200, |s| s.parse().expect("T"));
    let w = WindowSpec::new(0.5, 0.5)?;
    let h = HRule::T13.resolve(w.q, t)?;
    println!("T = {t}, h = {h:.4}");
    println!("{:>6} {:>10} {:>12} {:>10}", "delta", "i", "j", "i_hat");
    for delta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let path = CovariancePath::benchmark(delta, ShapeFn::Step)?;
        let i = theoretical_index(&path, &w, IndexKind::I)?;
        let j = theoretical_index(&path, &w, IndexKind::J)?;
        let data = simulate(&benchmark_model(), &path, t, 11, DEFAULT_BURN_IN)?;
        let est = index_estimate(&data, 1, &w, h, KernelFn::Epanechnikov)?;
        println!("{delta:>6.2} {:>10.5} {:>12.3e} {:>10.5}", i.value, j.value, est.value);
    }
    Ok(())
}
