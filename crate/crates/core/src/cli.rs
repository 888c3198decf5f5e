//! Command-line front end: CSV ingestion, run configuration and the pipeline
//! behind the `tvoirf` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::covpath::{CovariancePath, ShapeFn, WindowSpec};
use crate::error::{Error, Result};
use crate::estimation::{
    als_fit, bandwidth_cv_from, kernel_cov_from, ols_fit, Bandwidth, HRule, KernelFn, KernelSpec, OuterProducts,
};
use crate::index::index_estimate_from;
use crate::matrix::DenseMatrix;
use crate::mc::{run_study, McConfig, McScope};
use crate::oirf::{fmt_f64, EstimateOptions, FourthMomentMode, Variant, WindowEstimates};
use crate::var::{benchmark_model, simulate, VarModel, DEFAULT_BURN_IN};

pub const OUT_DIR_ENV: &str = "TVOIRF_OUT_DIR";
pub const THREADS_ENV: &str = "TVOIRF_THREADS";

/// A T × d series read from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub data: DenseMatrix,
    pub columns: Vec<String>,
    /// First-column labels when the file carries a date column.
    pub dates: Option<Vec<String>>,
}

fn parse_num(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a numeric CSV. A header row and a leading non-numeric date column are detected
/// automatically; lines starting with `#` are skipped. Column order is kept.
pub fn ingest_csv(path: &Path) -> Result<Series> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ingest_str(&text)
}

pub fn ingest_str(text: &str) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    let Some((_, last)) = rows.last() else {
        return Err(Error::TooShort("empty file".into()));
    };
    let has_date = last.len() > 1 && parse_num(&last[0]).is_none();
    let skip = usize::from(has_date);
    let header = rows[0].1[skip..].iter().any(|f| parse_num(f).is_none());
    let d = rows[0].1.len() - skip;
    if d == 0 {
        return Err(Error::Parse { line: rows[0].0, message: "no value columns".into() });
    }
    let columns = if header { rows[0].1[skip..].to_vec() } else { (1..=d).map(|k| format!("x{k}")).collect() };
    let body = &rows[usize::from(header)..];
    if body.is_empty() {
        return Err(Error::TooShort("no data rows".into()));
    }
    let mut values = Vec::with_capacity(body.len() * d);
    let mut dates = Vec::new();
    for (line, rec) in body {
        if has_date {
            dates.push(rec[0].clone());
        }
        for (c, field) in rec[skip..].iter().enumerate() {
            let v = parse_num(field).ok_or_else(|| Error::Parse {
                line: *line,
                message: format!("non-numeric entry '{field}' in column {}", c + 1 + skip),
            })?;
            values.push(v);
        }
    }
    Ok(Series {
        data: DenseMatrix::new(body.len(), d, values)?,
        columns,
        dates: has_date.then_some(dates),
    })
}

/// Writes a series with a header row and 17 significant digits.
pub fn series_csv(data: &DenseMatrix, columns: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for s in 0..data.rows() {
        w.write_record(data.row(s).iter().map(|&v| fmt_f64(v)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

/// Maps the date range `[from, to]` to a window: `t_s` is the first observation dated
/// `≥ from`, `t_e` the last dated `≤ to` (1-based, lexicographic comparison, so ISO dates),
/// `r = (t_s + t_e)/(2T)` and `q = (t_e − t_s)/T`.
pub fn window_from_dates(dates: &[String], from: &str, to: &str) -> Result<WindowSpec> {
    let t = dates.len() as f64;
    let ts = dates.iter().position(|d| d.as_str() >= from);
    let te = dates.iter().rposition(|d| d.as_str() <= to);
    match (ts, te) {
        (Some(s), Some(e)) if e > s => WindowSpec::new((s + e + 2) as f64 / (2.0 * t), (e - s) as f64 / t),
        _ => Err(Error::Config(format!("date range {from}..{to} selects fewer than two observations"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Fit,
    Oirf,
    Index,
    Mc,
    Simulate,
}

/// How the covariance smoother's bandwidth is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthChoice {
    /// `T^{−1/3}`
    RuleOfThumb,
    Fixed(f64),
    /// Leave-one-out cross-validation over the grid.
    Cv(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateSpec {
    pub t: usize,
    pub delta: f64,
    pub shape: ShapeFn,
    pub burn_in: usize,
    /// Covariance path CSV replacing the default design path.
    pub path: Option<PathBuf>,
}

/// Fully resolved run configuration; embedded in every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: Option<PathBuf>,
    pub p: usize,
    pub r: Option<f64>,
    pub q: Option<f64>,
    /// Date range resolved to `(r, q)` against the input's date column.
    pub dates: Option<(String, String)>,
    pub h_rule: HRule,
    pub bandwidth: BandwidthChoice,
    pub kernel: KernelFn,
    pub corrected_kernel: KernelFn,
    pub horizon: usize,
    pub variant: Variant,
    pub stderr: Option<FourthMomentMode>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub mc: Option<McConfig>,
    pub simulate: Option<SimulateSpec>,
}

impl RunConfig {
    fn base(command: CommandKind, out_dir: PathBuf) -> Self {
        Self {
            command,
            input: None,
            p: 1,
            r: None,
            q: None,
            dates: None,
            h_rule: HRule::T13,
            bandwidth: BandwidthChoice::RuleOfThumb,
            kernel: KernelFn::Triweight,
            corrected_kernel: KernelFn::Epanechnikov,
            horizon: 10,
            variant: Variant::Averaged,
            stderr: None,
            out_dir,
            seed: 0,
            mc: None,
            simulate: None,
        }
    }

    /// Checks mutual consistency of the fields that do not depend on data.
    pub fn validate(&self) -> Result<()> {
        let needs_input = matches!(self.command, CommandKind::Fit | CommandKind::Oirf | CommandKind::Index);
        if needs_input && self.input.is_none() {
            return Err(Error::Config("an input CSV is required".into()));
        }
        if self.p == 0 {
            return Err(Error::Config("lag order must be at least 1".into()));
        }
        let windowed = match self.command {
            CommandKind::Index => true,
            CommandKind::Oirf => !matches!(self.variant, Variant::Standard),
            _ => false,
        };
        if windowed && self.dates.is_none() {
            match (self.r, self.q) {
                (Some(r), Some(q)) => {
                    WindowSpec::new(r, q)?;
                }
                (Some(r), None) if self.variant == Variant::Pointwise && self.command == CommandKind::Oirf => {
                    if !(r > 0.0 && r <= 1.0) {
                        return Err(Error::Config(format!("r = {r} outside (0, 1]")));
                    }
                }
                _ => return Err(Error::Config("a window needs --r and --q (or --from and --to)".into())),
            }
        }
        if self.stderr.is_some() && matches!(self.variant, Variant::Standard | Variant::Pointwise) {
            return Err(Error::Config(format!("no standard errors for the {} variant", self.variant)));
        }
        if let BandwidthChoice::Cv(grid) = &self.bandwidth {
            if grid.is_empty() {
                return Err(Error::EmptyGrid);
            }
        }
        if let Some(mc) = &self.mc {
            mc.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "tvoirf", version, about = "Orthogonal impulse responses under time-varying error covariance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "tvoirf-out")]
    pub out_dir: PathBuf,
    /// Worker threads for Monte Carlo studies.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Least-squares and adaptive least-squares fits.
    Fit(FitArgs),
    /// Impulse response curve with optional standard errors.
    Oirf(OirfArgs),
    /// Variance-variability index of a window.
    Index(IndexArgs),
    /// Monte Carlo study directory.
    Mc(McArgs),
    /// Simulated series from the heteroscedastic design.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV (optional header, optional leading date column).
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short, default_value_t = 1)]
    pub p: usize,
    /// Fixed smoother bandwidth (default `T^{-1/3}`).
    #[arg(long, conflicts_with = "bandwidth_grid")]
    pub bandwidth: Option<f64>,
    /// Comma-separated grid for cross-validated bandwidth selection.
    #[arg(long, value_delimiter = ',')]
    pub bandwidth_grid: Option<Vec<f64>>,
    #[arg(long, default_value = "triweight")]
    pub kernel: KernelFn,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// First date of the window (needs a date column).
    #[arg(long, requires = "to", conflicts_with_all = ["r", "q"])]
    pub from: Option<String>,
    /// Last date of the window.
    #[arg(long, requires = "from")]
    pub to: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct OirfArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value = "averaged")]
    pub variant: Variant,
    /// `t13`, `t27` or an explicit value.
    #[arg(long, default_value = "t13")]
    pub h_rule: HRule,
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    /// Attach standard errors: `gaussian` or `empirical` fourth moments.
    #[arg(long, value_parser = parse_mode)]
    pub stderr: Option<FourthMomentMode>,
    #[arg(long, default_value = "epanechnikov")]
    pub corrected_kernel: KernelFn,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value = "t13")]
    pub h_rule: HRule,
    #[arg(long, default_value = "epanechnikov")]
    pub corrected_kernel: KernelFn,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Comma-separated sample sizes.
    #[arg(long = "T", value_delimiter = ',', default_values_t = [100, 200, 400, 800])]
    pub t: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    #[arg(long, default_value = "t13")]
    pub h_rule: HRule,
    #[arg(long, default_value_t = McConfig::default().seed)]
    pub seed: u64,
    #[arg(long, default_value = "sin")]
    pub shape: ShapeFn,
    /// Student-t innovations with this many degrees of freedom.
    #[arg(long)]
    pub dof: Option<f64>,
    /// Record the index only.
    #[arg(long)]
    pub index_only: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "T", default_value_t = 400)]
    pub t: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value = "sin")]
    pub shape: ShapeFn,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Covariance path CSV (`r` then `vech` columns) instead of the design path.
    #[arg(long)]
    pub path: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<FourthMomentMode, String> {
    match s {
        "gaussian" => Ok(FourthMomentMode::Gaussian),
        "empirical" => Ok(FourthMomentMode::Empirical),
        other => Err(format!("expected gaussian or empirical, got '{other}'")),
    }
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.input = Some(self.input.clone());
        cfg.p = self.p;
        cfg.kernel = self.kernel;
        cfg.bandwidth = match (&self.bandwidth, &self.bandwidth_grid) {
            (Some(b), _) => BandwidthChoice::Fixed(*b),
            (None, Some(g)) => BandwidthChoice::Cv(g.clone()),
            (None, None) => BandwidthChoice::RuleOfThumb,
        };
    }
}

impl WindowArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.r = self.r;
        cfg.q = self.q;
        cfg.dates = self.from.clone().zip(self.to.clone());
    }
}

impl Cli {
    pub fn into_config(self) -> RunConfig {
        let out = self.out_dir;
        match self.command {
            Command::Fit(a) => {
                let mut c = RunConfig::base(CommandKind::Fit, out);
                a.data.apply(&mut c);
                c
            }
            Command::Oirf(a) => {
                let mut c = RunConfig::base(CommandKind::Oirf, out);
                a.data.apply(&mut c);
                a.window.apply(&mut c);
                c.variant = a.variant;
                c.h_rule = a.h_rule;
                c.horizon = a.horizon;
                c.stderr = a.stderr;
                c.corrected_kernel = a.corrected_kernel;
                c
            }
            Command::Index(a) => {
                let mut c = RunConfig::base(CommandKind::Index, out);
                a.data.apply(&mut c);
                a.window.apply(&mut c);
                c.h_rule = a.h_rule;
                c.corrected_kernel = a.corrected_kernel;
                c
            }
            Command::Mc(a) => {
                let mut c = RunConfig::base(CommandKind::Mc, out);
                c.seed = a.seed;
                c.r = Some(a.r);
                c.q = Some(a.q);
                c.horizon = a.horizon;
                c.h_rule = a.h_rule;
                c.mc = Some(McConfig {
                    reps: a.reps,
                    t_list: a.t,
                    delta: a.delta,
                    r: a.r,
                    q: a.q,
                    horizon: a.horizon,
                    h_rule: a.h_rule,
                    seed: a.seed,
                    shape: a.shape,
                    student_dof: a.dof,
                    scope: if a.index_only { McScope::IndexOnly } else { McScope::Full },
                    ..McConfig::default()
                });
                c
            }
            Command::Simulate(a) => {
                let mut c = RunConfig::base(CommandKind::Simulate, out);
                c.seed = a.seed;
                c.simulate = Some(SimulateSpec { t: a.t, delta: a.delta, shape: a.shape, burn_in: a.burn_in, path: a.path });
                c
            }
        }
    }
}

fn with_config(mut doc: Value, cfg: &RunConfig) -> Result<Value> {
    if let Value::Object(map) = &mut doc {
        map.insert("config".into(), serde_json::to_value(cfg)?);
    }
    Ok(doc)
}

fn write_json(path: &Path, doc: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(doc)?)?;
    Ok(())
}

fn model_json(model: &VarModel, theta: &[f64]) -> Value {
    let comp = model.companion();
    json!({
        "theta": theta,
        "coefficients": model.coeffs().iter().map(DenseMatrix::to_rows).collect::<Vec<_>>(),
        "spectral_radius": comp.spectral_radius,
        "stable": comp.is_stable(),
    })
}

fn smoother(outer: &OuterProducts, cfg: &RunConfig) -> Result<(KernelSpec, Option<Value>)> {
    let t = outer.t_total();
    let template = KernelSpec::rule_of_thumb(t).with_kernel(cfg.kernel);
    Ok(match &cfg.bandwidth {
        BandwidthChoice::RuleOfThumb => (template, None),
        BandwidthChoice::Fixed(b) => (KernelSpec { bandwidth: Bandwidth::Shared(*b), ..template }, None),
        BandwidthChoice::Cv(grid) => {
            let cv = bandwidth_cv_from(outer, &template, grid)?;
            let scores = serde_json::to_value(&cv.scores)?;
            (KernelSpec { bandwidth: cv.chosen, ..template }, Some(scores))
        }
    })
}

fn resolve_window(cfg: &mut RunConfig, series: &Series) -> Result<()> {
    if let Some((from, to)) = &cfg.dates {
        let dates = series
            .dates
            .as_ref()
            .ok_or_else(|| Error::Config("--from/--to need a date column in the input".into()))?;
        let w = window_from_dates(dates, from, to)?;
        cfg.r = Some(w.r);
        cfg.q = Some(w.q);
    }
    Ok(())
}

fn window_of(cfg: &RunConfig) -> Result<WindowSpec> {
    match (cfg.r, cfg.q) {
        (Some(r), Some(q)) => WindowSpec::new(r, q),
        _ => Err(Error::Config("window not specified".into())),
    }
}

/// Runs one command and returns the files written.
pub fn run_pipeline(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let mut cfg = config.clone();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let out = cfg.out_dir.clone();
    match cfg.command {
        CommandKind::Fit => {
            let series = ingest_csv(cfg.input.as_ref().expect("validated"))?;
            let ols = ols_fit(&series.data, cfg.p)?;
            let outer = OuterProducts::from_residuals(&ols.residuals, cfg.p);
            let (spec, cv) = smoother(&outer, &cfg)?;
            let kfit = kernel_cov_from(&outer, &spec)?;
            let als = als_fit(&series.data, cfg.p, &kfit)?;
            let doc = json!({
                "sample_size": series.data.rows(),
                "columns": series.columns,
                "lags": cfg.p,
                "ols": model_json(&ols.model, &ols.theta),
                "als": model_json(&als.model, &als.theta),
                "smoother": spec,
                "cv_scores": cv,
                "regularization": kfit.regularization,
            });
            let path = out.join("fit.json");
            write_json(&path, &with_config(doc, &cfg)?)?;
            Ok(vec![path])
        }
        CommandKind::Oirf => {
            let series = ingest_csv(cfg.input.as_ref().expect("validated"))?;
            resolve_window(&mut cfg, &series)?;
            let t = series.data.rows();
            let ols = ols_fit(&series.data, cfg.p)?;
            let outer = OuterProducts::from_residuals(&ols.residuals, cfg.p);
            let (spec, _) = smoother(&outer, &cfg)?;
            let w = match (cfg.r, cfg.q) {
                (Some(_), Some(_)) => window_of(&cfg)?,
                // pointwise and standard curves do not use q
                (r, _) => WindowSpec::new(r.unwrap_or(0.5).clamp(0.02, 0.98), 0.02)?,
            };
            let h = match cfg.variant {
                Variant::Averaged => Some(cfg.h_rule.resolve(w.q, t)?),
                _ => None,
            };
            let options = EstimateOptions {
                spec,
                corrected_kernel: cfg.corrected_kernel,
                covariance: cfg.stderr.is_some(),
                fourth_moment: cfg.stderr.unwrap_or_default(),
                truncation: None,
            };
            let mut curve = match cfg.variant {
                Variant::Pointwise => {
                    let r = cfg.r.expect("validated");
                    crate::oirf::tv_oirf_estimate(&series.data, cfg.p, &options.spec, r, cfg.horizon)?
                }
                v => WindowEstimates::fit(&series.data, cfg.p, &w, h, &options)?.curve(v, cfg.horizon)?,
            };
            if cfg.variant == Variant::Standard {
                curve.r = None;
                curve.q = None;
            }
            let json_path = out.join("oirf.json");
            let csv_path = out.join("oirf.csv");
            let doc: Value = serde_json::from_str(&curve.to_json()?)?;
            let mut doc = with_config(doc, &cfg)?;
            if let Some(h) = h {
                doc["h"] = json!(h);
            }
            write_json(&json_path, &doc)?;
            curve.write_csv(&csv_path)?;
            Ok(vec![json_path, csv_path])
        }
        CommandKind::Index => {
            let series = ingest_csv(cfg.input.as_ref().expect("validated"))?;
            resolve_window(&mut cfg, &series)?;
            let w = window_of(&cfg)?;
            let ols = ols_fit(&series.data, cfg.p)?;
            let outer = OuterProducts::from_residuals(&ols.residuals, cfg.p);
            let h = cfg.h_rule.resolve(w.q, series.data.rows())?;
            let report = index_estimate_from(&outer, &w, h, cfg.corrected_kernel)?;
            let mut doc = with_config(serde_json::to_value(&report)?, &cfg)?;
            doc["h"] = json!(h);
            let path = out.join("index.json");
            write_json(&path, &doc)?;
            Ok(vec![path])
        }
        CommandKind::Mc => {
            let mc = cfg.mc.as_ref().expect("mc config");
            let study = run_study(mc)?;
            study.write_dir(&out)?;
            let run = out.join("run.json");
            write_json(&run, &json!({ "config": cfg, "records": study.records.len() }))?;
            Ok(vec![out.join("config.json"), out.join("records.csv"), out.join("summaries"), run])
        }
        CommandKind::Simulate => {
            let spec = cfg.simulate.as_ref().expect("simulate spec");
            let path = match &spec.path {
                Some(p) => CovariancePath::from_csv(p)?,
                None => CovariancePath::benchmark(spec.delta, spec.shape)?,
            };
            let data = simulate(&benchmark_model(), &path, spec.t, cfg.seed, spec.burn_in)?;
            let columns: Vec<String> = (1..=data.cols()).map(|k| format!("x{k}")).collect();
            let csv_path = out.join("series.csv");
            std::fs::write(&csv_path, series_csv(&data, &columns)?)?;
            let meta = out.join("series.json");
            write_json(&meta, &json!({ "config": cfg, "model": model_json(&benchmark_model(), &benchmark_model().theta()) }))?;
            Ok(vec![csv_path, meta])
        }
    }
}

/// Parses arguments, runs the pipeline and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already initialized ({e})");
        }
    }
    match run_pipeline(&cli.into_config()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

impl FromStr for CommandKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fit" => Ok(CommandKind::Fit),
            "oirf" => Ok(CommandKind::Oirf),
            "index" => Ok(CommandKind::Index),
            "mc" => Ok(CommandKind::Mc),
            "simulate" => Ok(CommandKind::Simulate),
            other => Err(Error::Config(format!("unknown command '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ingest_variants() {
        let plain = ingest_str("1,2\n3,4\n5,6\n").unwrap();
        assert_eq!(plain.data.rows(), 3);
        assert_eq!(plain.columns, ["x1", "x2"]);
        let dated = ingest_str("date,oil,cpi\n2001-10,1.5,0.2\n2001-11,-2.0,0.1\n").unwrap();
        assert_eq!(dated.columns, ["oil", "cpi"]);
        assert_eq!(dated.dates.as_deref().unwrap(), ["2001-10", "2001-11"]);
        let uni = ingest_str("g\n0.5\n0.7\n").unwrap();
        assert_eq!((uni.data.rows(), uni.data.cols()), (2, 1));
    }

    #[test]
    fn ingest_errors() {
        assert!(matches!(ingest_str("a,b\n"), Err(Error::TooShort(_))));
        assert!(matches!(ingest_str(""), Err(Error::TooShort(_))));
        match ingest_str("a,b\n1,2\n3,x\n4,5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ingest_str("1,2\n3\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn series_round_trip() {
        let data = DenseMatrix::from_rows(&[&[0.1, 1.0 / 3.0], &[-2.5e-17, 1e300]]);
        let cols = vec!["a".to_string(), "b".to_string()];
        let back = ingest_str(&series_csv(&data, &cols).unwrap()).unwrap();
        assert_eq!(back.data, data);
        assert_eq!(back.columns, cols);
    }

    #[test]
    fn date_window_convention() {
        let dates: Vec<String> = (1..=100).map(|k| format!("{k:03}")).collect();
        let w = window_from_dates(&dates, "026", "075").unwrap();
        assert!((w.r - 1.01 / 2.0).abs() < 1e-12);
        assert!((w.q - 0.49).abs() < 1e-12);
        assert!(window_from_dates(&dates, "090", "020").is_err());
    }

    #[test]
    fn clap_parsing_and_validation() {
        let cli = Cli::try_parse_from(["tvoirf", "oirf", "-i", "x.csv", "--r", "0.5", "--q", "0.5", "--variant", "averaged"]).unwrap();
        let cfg = cli.into_config();
        assert_eq!(cfg.variant, Variant::Averaged);
        assert!(cfg.validate().is_ok());
        let bad = Cli::try_parse_from(["tvoirf", "index", "-i", "x.csv"]).unwrap().into_config();
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let cli = Cli::try_parse_from(["tvoirf", "mc", "--T", "100,200", "--reps", "5"]).unwrap();
        assert_eq!(cli.into_config().mc.unwrap().t_list, [100, 200]);
        assert!(Cli::try_parse_from(["tvoirf", "oirf", "-i", "x", "--variant", "nope"]).is_err());
    }
}
