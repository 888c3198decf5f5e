//! Monte Carlo harness for the heteroscedastic VAR(1) design.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::covpath::{CovariancePath, ShapeFn, WindowSpec};
use crate::error::{Error, Result};
use crate::estimation::{ols_fit, HRule, KernelFn, KernelSpec, OuterProducts};
use crate::index::{index_estimate_from, index_from_factors, theoretical_index, IndexKind};
use crate::matrix::vec;
use crate::oirf::{
    asymptotic_blocks, fmt_f64, oirf_variance, theoretical_targets, EstimateOptions, FourthMoment, Variant,
    WindowEstimates,
};
use crate::var::{benchmark_model, GaussianInnovations, Innovations, SimulationPlan, StudentInnovations, DEFAULT_BURN_IN};

/// Response variants tracked per replication.
pub const TRACKED: [Variant; 3] = [Variant::ApproximatedOls, Variant::ApproximatedAls, Variant::Averaged];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum McScope {
    /// Fits, responses and the index.
    #[default]
    Full,
    /// Least-squares residuals and the index only.
    IndexOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub reps: usize,
    pub t_list: Vec<usize>,
    pub delta: f64,
    pub r: f64,
    pub q: f64,
    /// Largest horizon; responses are recorded for `0..=horizon`.
    pub horizon: usize,
    pub h_rule: HRule,
    pub seed: u64,
    pub shape: ShapeFn,
    /// Kernel of the corrected covariance path.
    pub kernel: KernelFn,
    /// Student-t innovations with this many degrees of freedom instead of Gaussian ones.
    pub student_dof: Option<f64>,
    pub burn_in: usize,
    pub scope: McScope,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            reps: 1000,
            t_list: vec![100, 200, 400, 800],
            delta: 1.0,
            r: 0.5,
            q: 0.5,
            horizon: 1,
            h_rule: HRule::T13,
            seed: 20_140_901,
            shape: ShapeFn::Sin,
            kernel: KernelFn::Epanechnikov,
            student_dof: None,
            burn_in: DEFAULT_BURN_IN,
            scope: McScope::Full,
        }
    }
}

impl McConfig {
    pub fn window(&self) -> Result<WindowSpec> {
        WindowSpec::new(self.r, self.q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.t_list.is_empty() {
            return Err(Error::Config("study needs at least one replication and one sample size".into()));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("delta = {} must be finite and non-negative", self.delta)));
        }
        let w = self.window()?;
        let t_min = *self.t_list.iter().min().expect("non-empty");
        if t_min > u32::MAX as usize || self.reps > u32::MAX as usize {
            return Err(Error::Config("sample size and replication count must fit in 32 bits".into()));
        }
        let h = self.h_rule.resolve(w.q, t_min)?;
        if h >= w.q {
            return Err(Error::BandwidthInfeasible(format!("h = {h} is not below q = {}", w.q)));
        }
        // the inner windows reach [(r − q/2)T] − [qT/2] at worst
        if floor_at(w.lo(), t_min) < 2 || floor_at(w.hi(), t_min) > t_min as i64 {
            return Err(Error::WindowOutOfRange { lo: floor_at(w.lo(), t_min), hi: floor_at(w.hi(), t_min), t: t_min });
        }
        Ok(())
    }

    pub fn path(&self) -> Result<CovariancePath> {
        CovariancePath::benchmark(self.delta, self.shape)
    }
}

fn floor_at(x: f64, t: usize) -> i64 {
    crate::estimation::floor_index(x * t as f64)
}

/// Counter-based stream: sample size in the high word, replication in the low word.
pub fn replication_rng(seed: u64, t: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((t as u64) << 32) | rep as u64);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct McRecord {
    pub t: usize,
    pub rep: usize,
    pub i_hat: f64,
    /// `estimates[v][h]` is `vec θ̂(h)` for `TRACKED[v]`; empty for index-only studies.
    pub estimates: Vec<Vec<Vec<f64>>>,
}

/// Population targets and asymptotic variances shared by all cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McTargets {
    pub index: f64,
    /// `values[v][h]` is `vec θ(h)` for `TRACKED[v]`.
    pub values: Vec<Vec<Vec<f64>>>,
    /// Diagonal of the asymptotic covariance, same layout as `values`.
    pub variances: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug)]
pub struct McStudy {
    pub config: McConfig,
    pub targets: McTargets,
    /// Sorted by `(t, rep)`.
    pub records: Vec<McRecord>,
}

/// Population targets for a configuration.
pub fn study_targets(config: &McConfig) -> Result<McTargets> {
    let model = benchmark_model();
    let path = config.path()?;
    let w = config.window()?;
    let index = theoretical_index(&path, &w, IndexKind::I)?.value;
    let blocks = asymptotic_blocks(&model, &path, &w, None, FourthMoment::Gaussian)?;
    let mut values = Vec::new();
    let mut variances = Vec::new();
    for v in TRACKED {
        let curve = theoretical_targets(&model, &path, v, &w, config.horizon)?;
        values.push(curve.values.iter().map(vec).collect());
        variances.push(
            (0..=config.horizon)
                .map(|h| oirf_variance(&blocks, &model, h, v).map(|m| m.diag()))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(McTargets { index, values, variances })
}

fn replicate(config: &McConfig, plan: &SimulationPlan, w: &WindowSpec, t: usize, rep: usize, h: f64) -> Result<McRecord> {
    let mut rng = replication_rng(config.seed, t, rep);
    let data = match config.student_dof {
        Some(dof) => plan.draw(&mut rng, &StudentInnovations::new(dof)? as &dyn Innovations),
        None => plan.draw(&mut rng, &GaussianInnovations),
    };
    match config.scope {
        McScope::IndexOnly => {
            let fit = ols_fit(&data, 1)?;
            let outer = OuterProducts::from_residuals(&fit.residuals, 1);
            let rep_idx = index_estimate_from(&outer, w, h, config.kernel)?;
            Ok(McRecord { t, rep, i_hat: rep_idx.value, estimates: Vec::new() })
        }
        McScope::Full => {
            let options = EstimateOptions {
                spec: KernelSpec::rule_of_thumb(t),
                corrected_kernel: config.kernel,
                ..EstimateOptions::for_sample(t)
            };
            let est = WindowEstimates::fit(&data, 1, w, Some(h), &options)?;
            let i_hat = index_from_factors(w, &est.h_tilde_hat, est.h_bar_hat.as_ref().expect("h given"))?.value;
            let estimates = TRACKED
                .iter()
                .map(|&v| est.curve(v, config.horizon).map(|c| c.values.iter().map(vec).collect()))
                .collect::<Result<Vec<_>>>()?;
            Ok(McRecord { t, rep, i_hat, estimates })
        }
    }
}

/// Runs `reps` replications for each sample size. Deterministic in `config.seed`.
pub fn run_study(config: &McConfig) -> Result<McStudy> {
    config.validate()?;
    let targets = study_targets(config)?;
    let model = benchmark_model();
    let path = config.path()?;
    let w = config.window()?;
    let mut records = Vec::with_capacity(config.reps * config.t_list.len());
    for &t in &config.t_list {
        let plan = SimulationPlan::new(&model, &path, t, config.burn_in)?;
        let h = config.h_rule.resolve(w.q, t)?;
        let cell: Vec<McRecord> = (0..config.reps)
            .into_par_iter()
            .map(|rep| replicate(config, &plan, &w, t, rep, h))
            .collect::<Result<_>>()?;
        records.extend(cell);
    }
    records.sort_by_key(|r| (r.t, r.rep));
    Ok(McStudy { config: config.clone(), targets, records })
}

/// One study per δ with otherwise identical configuration (common random numbers).
pub fn run_delta_sweep(config: &McConfig, deltas: &[f64]) -> Result<Vec<McStudy>> {
    deltas
        .iter()
        .map(|&delta| run_study(&McConfig { delta, ..config.clone() }))
        .collect()
}

/// δ values spanning the homoscedastic to the fully heteroscedastic design.
pub const DELTA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

impl McStudy {
    pub fn cell(&self, t: usize) -> impl Iterator<Item = &McRecord> {
        self.records.iter().filter(move |r| r.t == t)
    }

    fn variant_slot(v: Variant) -> Result<usize> {
        TRACKED
            .iter()
            .position(|&x| x == v)
            .ok_or_else(|| Error::Config(format!("variant {v} is not tracked by the study")))
    }

    fn check_full(&self) -> Result<()> {
        if self.config.scope != McScope::Full {
            return Err(Error::Config("study was run with scope index_only".into()));
        }
        Ok(())
    }

    /// `√T (θ̂ − θ)` for component `k` of `vec θ(h)`.
    pub fn scaled_errors(&self, t: usize, v: Variant, h: usize, k: usize) -> Result<Vec<f64>> {
        self.check_full()?;
        let s = Self::variant_slot(v)?;
        let target = self.targets.values[s][h][k];
        let rt = (t as f64).sqrt();
        Ok(self.cell(t).map(|r| rt * (r.estimates[s][h][k] - target)).collect())
    }

    /// `100(θ̂̃/θ̂̄ − 1)` for component `k` at horizon `h`, with `θ̂̃` the adaptive approximated response.
    pub fn relative_differences(&self, t: usize, h: usize, k: usize) -> Result<Vec<f64>> {
        self.check_full()?;
        let a = Self::variant_slot(Variant::ApproximatedAls)?;
        let b = Self::variant_slot(Variant::Averaged)?;
        Ok(self.cell(t).map(|r| 100.0 * (r.estimates[a][h][k] / r.estimates[b][h][k] - 1.0)).collect())
    }

    pub fn index_values(&self, t: usize) -> Vec<f64> {
        self.cell(t).map(|r| r.i_hat).collect()
    }

    fn dim2(&self) -> usize {
        self.targets.values[0][0].len()
    }

    /// Writes `config.json`, `records.csv` and `summaries/*.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("summaries"))?;
        let cfg = serde_json::json!({ "config": self.config, "targets": self.targets });
        std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;
        std::fs::write(dir.join("records.csv"), self.records_csv()?)?;
        let kinds: &[SummaryKind] = match self.config.scope {
            McScope::Full => &[SummaryKind::RelativeDiff, SummaryKind::Qq, SummaryKind::Boxplot, SummaryKind::Moments],
            McScope::IndexOnly => &[SummaryKind::Boxplot],
        };
        for &kind in kinds {
            let table = summarize_study(self, kind)?;
            std::fs::write(dir.join("summaries").join(format!("{kind}.csv")), table.to_csv()?)?;
        }
        Ok(())
    }

    pub fn records_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string(), "rep".into(), "delta".into(), "i_hat".into()];
        let full = self.config.scope == McScope::Full;
        if full {
            for prefix in ["est", "err"] {
                for v in TRACKED {
                    for h in 0..=self.config.horizon {
                        for k in 0..self.dim2() {
                            header.push(format!("{prefix}_{v}_h{h}_{k}"));
                        }
                    }
                }
            }
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.t.to_string(), r.rep.to_string(), fmt_f64(self.config.delta), fmt_f64(r.i_hat)];
            if full {
                for v in 0..TRACKED.len() {
                    for h in 0..=self.config.horizon {
                        row.extend(r.estimates[v][h].iter().map(|&x| fmt_f64(x)));
                    }
                }
                let rt = (r.t as f64).sqrt();
                for v in 0..TRACKED.len() {
                    for h in 0..=self.config.horizon {
                        row.extend(
                            r.estimates[v][h]
                                .iter()
                                .zip(&self.targets.values[v][h])
                                .map(|(&x, &y)| fmt_f64(rt * (x - y))),
                        );
                    }
                }
            }
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("ascii csv"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryKind {
    RelativeDiff,
    Qq,
    Boxplot,
    Moments,
}

impl fmt::Display for SummaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SummaryKind::RelativeDiff => "relative_diff",
            SummaryKind::Qq => "qq",
            SummaryKind::Boxplot => "boxplot",
            SummaryKind::Moments => "moments",
        })
    }
}

impl FromStr for SummaryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative_diff" => Ok(SummaryKind::RelativeDiff),
            "qq" => Ok(SummaryKind::Qq),
            "boxplot" => Ok(SummaryKind::Boxplot),
            "moments" => Ok(SummaryKind::Moments),
            other => Err(Error::Config(format!("unknown summary '{other}'"))),
        }
    }
}

/// Rows of numbers under a header.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SummaryTable {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| fmt_f64(x)))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("ascii csv"))
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn sorted_quantile(v: &[f64], tau: f64) -> f64 {
    let pos = tau.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Linear-interpolation sample quantile (R type 7).
pub fn quantile(values: &[f64], tau: f64) -> f64 {
    sorted_quantile(&sorted(values), tau)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Five-number summary `(min, q1, median, q3, max)`.
pub fn five_numbers(values: &[f64]) -> [f64; 5] {
    let v = sorted(values);
    [v[0], sorted_quantile(&v, 0.25), sorted_quantile(&v, 0.5), sorted_quantile(&v, 0.75), v[v.len() - 1]]
}

/// Sample moments `(mean, variance, skewness, kurtosis)`; variance uses `n − 1`,
/// skewness and kurtosis are the moment ratios `m₃/m₂^{3/2}` and `m₄/m₂²`.
pub fn moments(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in values {
        let e = x - mean;
        m2 += e * e;
        m3 += e * e * e;
        m4 += e * e * e * e;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    (mean, m2 * n / (n - 1.0), m3 / m2.powf(1.5), m4 / (m2 * m2))
}

/// Sorted standardized values paired with normal quantiles at `(k − ½)/n`.
pub fn qq_pairs(values: &[f64]) -> Vec<(f64, f64)> {
    let (mean, var, _, _) = moments(values);
    let sd = var.sqrt();
    let mut z: Vec<f64> = values.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let normal = Normal::standard();
    z.into_iter()
        .enumerate()
        .map(|(k, v)| (normal.inverse_cdf((k as f64 + 0.5) / n), v))
        .collect()
}

/// Summaries of a single study. Boxplot rows are per sample size.
pub fn summarize_study(study: &McStudy, kind: SummaryKind) -> Result<SummaryTable> {
    if study.records.is_empty() {
        return Err(Error::EmptyStudy);
    }
    let ts = &study.config.t_list;
    let hmax = study.config.horizon;
    let dd = study.dim2();
    match kind {
        SummaryKind::RelativeDiff => {
            let mut tab = SummaryTable::new(&[
                "t", "horizon", "component", "n", "min", "q05", "q25", "median", "q75", "q95", "max", "frac_positive",
            ]);
            for &t in ts {
                for h in 0..=hmax {
                    for k in 0..dd {
                        // structural zeros of the lower-triangular factor at h = 0
                        if study.targets.values[2][h][k] == 0.0 {
                            continue;
                        }
                        let v = study.relative_differences(t, h, k)?;
                        let f = five_numbers(&v);
                        let pos = v.iter().filter(|&&x| x > 0.0).count() as f64 / v.len() as f64;
                        tab.rows.push(vec![
                            t as f64, h as f64, k as f64, v.len() as f64, f[0], quantile(&v, 0.05), f[1], f[2], f[3],
                            quantile(&v, 0.95), f[4], pos,
                        ]);
                    }
                }
            }
            Ok(tab)
        }
        SummaryKind::Qq => {
            let mut tab = SummaryTable::new(&["t", "variant", "horizon", "component", "theoretical", "empirical"]);
            for &t in ts {
                for (vi, &v) in TRACKED.iter().enumerate() {
                    for h in 0..=hmax {
                        for k in 0..dd {
                            for (a, b) in qq_pairs(&study.scaled_errors(t, v, h, k)?) {
                                tab.rows.push(vec![t as f64, vi as f64, h as f64, k as f64, a, b]);
                            }
                        }
                    }
                }
            }
            Ok(tab)
        }
        SummaryKind::Boxplot => {
            let mut tab = SummaryTable::new(&["t", "delta", "min", "q1", "median", "q3", "max", "target"]);
            for &t in ts {
                let f = five_numbers(&study.index_values(t));
                tab.rows.push(vec![t as f64, study.config.delta, f[0], f[1], f[2], f[3], f[4], study.targets.index]);
            }
            Ok(tab)
        }
        SummaryKind::Moments => {
            let mut tab = SummaryTable::new(&[
                "t", "variant", "horizon", "component", "mean", "variance", "asymptotic_variance", "skewness", "kurtosis",
            ]);
            for &t in ts {
                for (vi, &v) in TRACKED.iter().enumerate() {
                    for h in 0..=hmax {
                        for k in 0..dd {
                            let (m, var, sk, ku) = moments(&study.scaled_errors(t, v, h, k)?);
                            let av = study.targets.variances[vi][h][k];
                            tab.rows.push(vec![t as f64, vi as f64, h as f64, k as f64, m, var, av, sk, ku]);
                        }
                    }
                }
            }
            Ok(tab)
        }
    }
}

/// `î` five-number summaries per `(δ, T)` across a sweep.
pub fn index_by_delta(studies: &[McStudy]) -> Result<SummaryTable> {
    let mut tab = SummaryTable::new(&["t", "delta", "min", "q1", "median", "q3", "max", "target"]);
    for s in studies {
        tab.rows.extend(summarize_study(s, SummaryKind::Boxplot)?.rows);
    }
    if tab.rows.is_empty() {
        return Err(Error::EmptyStudy);
    }
    Ok(tab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scope: McScope) -> McConfig {
        McConfig { reps: 6, t_list: vec![200], scope, ..McConfig::default() }
    }

    #[test]
    fn deterministic_and_counted() {
        let cfg = small(McScope::Full);
        let a = run_study(&cfg).unwrap();
        let b = run_study(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 6);
        let ra = summarize_study(&a, SummaryKind::RelativeDiff).unwrap();
        assert_eq!(ra, summarize_study(&b, SummaryKind::RelativeDiff).unwrap());
    }

    #[test]
    fn streams_differ_across_cells() {
        use rand::RngCore;
        let mut seen = std::collections::HashSet::new();
        for t in [100usize, 200] {
            for rep in 0..50 {
                assert!(seen.insert(replication_rng(7, t, rep).next_u64()));
            }
        }
    }

    #[test]
    fn index_only_matches_full_index() {
        let full = run_study(&small(McScope::Full)).unwrap();
        let idx = run_study(&small(McScope::IndexOnly)).unwrap();
        for (a, b) in full.records.iter().zip(&idx.records) {
            assert!((a.i_hat - b.i_hat).abs() < 1e-12);
        }
        assert!(summarize_study(&idx, SummaryKind::Qq).is_err());
    }

    #[test]
    fn qq_is_monotone() {
        let study = run_study(&small(McScope::Full)).unwrap();
        let tab = summarize_study(&study, SummaryKind::Qq).unwrap();
        let cell: Vec<&Vec<f64>> = tab.rows.iter().filter(|r| r[1] == 2.0 && r[2] == 1.0 && r[3] == 0.0).collect();
        assert_eq!(cell.len(), 6);
        for pair in cell.windows(2) {
            assert!(pair[0][4] < pair[1][4] && pair[0][5] <= pair[1][5]);
        }
    }

    #[test]
    fn infeasible_configs() {
        let mut cfg = McConfig { q: 0.05, h_rule: HRule::Explicit(0.1), ..McConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::BandwidthInfeasible(_))));
        cfg = McConfig { r: 0.2, q: 0.5, ..McConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::InvalidWindow { .. })));
        let empty = McStudy { config: McConfig::default(), targets: study_targets(&McConfig::default()).unwrap(), records: vec![] };
        assert_eq!(summarize_study(&empty, SummaryKind::Boxplot).unwrap_err(), Error::EmptyStudy);
    }

    #[test]
    fn type7_quantiles() {
        let v = [3.0, 1.0, 4.0, 1.5, 9.0, 2.0];
        assert_eq!(five_numbers(&v), [1.0, 1.625, 2.5, 3.75, 9.0]);
        assert!((quantile(&v, 0.95) - 7.75).abs() < 1e-12);
    }

    #[test]
    fn moments_of_symmetric_sample() {
        let (m, v, s, k) = moments(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(m, 0.0);
        assert!((v - 2.5).abs() < 1e-15);
        assert_eq!(s, 0.0);
        assert!((k - 1.7).abs() < 1e-12);
    }
}
