//! Small Monte Carlo study of the heteroscedastic design; prints summaries and
//! writes the study directory when an output path is given.
//!
//! cargo run --release --example mc_study -- [reps] [out_dir]

use std::time::Instant;

use tvoirf::mc::{run_study, summarize_study, McConfig, SummaryKind};

fn main() -> tvoirf::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().map_or(100, |s| s.parse().expect("reps"));
    let out = args.next();
    let config = McConfig { reps, t_list: vec![200, 800], ..McConfig::default() };
    let start = Instant::now();
    let study = run_study(&config)?;
    println!("{} records in {:.1?}", study.records.len(), start.elapsed());
    println!("target index {:.5}", study.targets.index);
    for kind in [SummaryKind::RelativeDiff, SummaryKind::Boxplot] {
        println!("\n{kind}");
        print!("{}", summarize_study(&study, kind)?.to_csv()?);
    }
    if let Some(dir) = out {
        study.write_dir(std::path::Path::new(&dir))?;
        println!("\nwrote {dir}");
    }
    Ok(())
}
