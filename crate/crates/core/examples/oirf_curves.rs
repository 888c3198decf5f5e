//! Standard, pointwise, approximated and averaged orthogonal responses for one
//! window, with plug-in standard errors and 95% bands for the windowed variants.
//!
//! cargo run --release --example oirf_curves -- [T] [horizon]

use tvoirf::covpath::{CovariancePath, ShapeFn, WindowSpec};
use tvoirf::estimation::HRule;
use tvoirf::oirf::{theoretical_targets, EstimateOptions, FourthMomentMode, Variant, WindowEstimates};
use tvoirf::var::{benchmark_model, simulate, DEFAULT_BURN_IN};

fn main() -> tvoirf::Result<()> {
    let mut args = std::env::args().skip(1);
    let t: usize = args.next().map_or(800, |s| s.parse().expect("T"));
    let horizon: usize = args.next().map_or(4, |s| s.parse().expect("horizon"));

    let model = benchmark_model();
    let path = CovariancePath::benchmark(1.0, ShapeFn::Sin)?;
    let data = simulate(&model, &path, t, 3, DEFAULT_BURN_IN)?;
    let w = WindowSpec::new(0.5, 0.5)?;
    let h = HRule::T13.resolve(w.q, t)?;
    let options = EstimateOptions::for_sample(t).with_covariance(FourthMomentMode::Gaussian);
    let est = WindowEstimates::fit(&data, 1, &w, Some(h), &options)?;

    for variant in [Variant::Standard, Variant::Pointwise, Variant::ApproximatedAls, Variant::Averaged] {
        let curve = est.curve(variant, horizon)?;
        let truth = theoretical_targets(&model, &path, variant, &w, horizon)?;
        let bands = curve.bands(0.95);
        println!("\n{} (response of variable 2 to shock 1)", variant.name());
        for i in 0..=horizon {
            let v = curve.values[i][(1, 0)];
            let band = bands.as_ref().map_or(String::new(), |b| format!("  [{:.4}, {:.4}]", b[i].0[(1, 0)], b[i].1[(1, 0)]));
            println!("  h={i}  est {v:>8.4}  true {:>8.4}{band}", truth.values[i][(1, 0)]);
        }
    }
    Ok(())
}
