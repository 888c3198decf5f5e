use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ols::OlsFit;
use super::OuterProducts;
use crate::covpath::CovariancePath;
use crate::error::{Error, Result};
use crate::matrix::{cholesky_lower, eigen_floor, min_eigenvalue, vech_index, DenseMatrix, LowerTriangular};

/// Eigenvalue floor for smoothed covariances.
pub const EIGEN_FLOOR: f64 = 1e-8;

/// Kernel densities on the real line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelFn {
    /// `(35/32)(1 − u²)³` on `[−1, 1]`.
    #[default]
    Triweight,
    /// `(3/4)(1 − u²)` on `[−1, 1]`.
    Epanechnikov,
    /// `1/2` on `[−1, 1]`.
    Uniform,
    Gaussian,
}

impl KernelFn {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelFn::Triweight => {
                if u.abs() <= 1.0 {
                    let v = 1.0 - u * u;
                    35.0 / 32.0 * v * v * v
                } else {
                    0.0
                }
            }
            KernelFn::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            KernelFn::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            KernelFn::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    /// Half-width of the effective support in units of the bandwidth.
    pub fn radius(self) -> f64 {
        match self {
            KernelFn::Gaussian => 8.0,
            _ => 1.0,
        }
    }

    pub fn is_compact(self) -> bool {
        !matches!(self, KernelFn::Gaussian)
    }
}

impl FromStr for KernelFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "triweight" => Ok(KernelFn::Triweight),
            "epanechnikov" => Ok(KernelFn::Epanechnikov),
            "uniform" => Ok(KernelFn::Uniform),
            "gaussian" => Ok(KernelFn::Gaussian),
            other => Err(Error::Config(format!("unknown kernel '{other}'"))),
        }
    }
}

impl fmt::Display for KernelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KernelFn::Triweight => "triweight",
            KernelFn::Epanechnikov => "epanechnikov",
            KernelFn::Uniform => "uniform",
            KernelFn::Gaussian => "gaussian",
        };
        f.write_str(s)
    }
}

/// One bandwidth for every entry, or one per entry `(k, l)`, `k ≥ l`, in `vech` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Shared(f64),
    PerEntry(Vec<f64>),
}

impl Bandwidth {
    pub fn for_entry(&self, k: usize, l: usize, d: usize) -> f64 {
        match self {
            Bandwidth::Shared(b) => *b,
            Bandwidth::PerEntry(v) => {
                let (i, j) = if k >= l { (k, l) } else { (l, k) };
                v[vech_index(i, j, d)]
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Bandwidth::Shared(b) => vec![*b],
            Bandwidth::PerEntry(v) => v.clone(),
        }
    }
}

/// Kernel and bandwidths for the covariance smoother.
///
/// Bandwidths must lie in `[c_min·b_T, c_max·b_T]` with `b_T = T^{−rate}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kernel: KernelFn,
    pub bandwidth: Bandwidth,
    pub rate: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl KernelSpec {
    pub fn shared(b: f64) -> Self {
        Self { kernel: KernelFn::Triweight, bandwidth: Bandwidth::Shared(b), rate: 1.0 / 3.0, c_min: 0.05, c_max: 20.0 }
    }

    /// Shared bandwidth `b = T^{−1/3}`.
    pub fn rule_of_thumb(t: usize) -> Self {
        Self::shared((t as f64).powf(-1.0 / 3.0))
    }

    pub fn with_kernel(mut self, kernel: KernelFn) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn admissible_range(&self, t: usize) -> (f64, f64) {
        let bt = (t as f64).powf(-self.rate);
        (self.c_min * bt, self.c_max * bt)
    }

    pub fn check(&self, t: usize, d: usize) -> Result<()> {
        if let Bandwidth::PerEntry(v) = &self.bandwidth {
            if v.len() != d * (d + 1) / 2 {
                return Err(Error::ShapeMismatch(format!(
                    "{} per-entry bandwidths for dimension {d}",
                    v.len()
                )));
            }
        }
        let (lo, hi) = self.admissible_range(t);
        for b in self.bandwidth.values() {
            if !(b >= lo && b <= hi) || !(b > 0.0) {
                return Err(Error::BandwidthOutOfRange { b, lo, hi });
            }
        }
        Ok(())
    }
}

/// Regularization applied while fitting.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RegularizationRecord {
    /// Time points where eigenvalues were floored or a ridge was added.
    pub adjusted: usize,
    /// Largest `max(0, floor − λ_min)` encountered.
    pub max_shift: f64,
}

/// Smoothed covariances `Σ̂_t`, `t = 1..T`, and their Cholesky factors.
#[derive(Clone, Debug)]
pub struct KernelFit {
    pub sigma: Vec<DenseMatrix>,
    pub chol: Vec<LowerTriangular>,
    /// `Σ_j w_tj` for the shared bandwidth (first entry's bandwidth otherwise).
    pub mass: Vec<f64>,
    pub spec: KernelSpec,
    pub regularization: RegularizationRecord,
    first: usize,
}

impl KernelFit {
    pub fn sample_size(&self) -> usize {
        self.sigma.len()
    }

    /// First 1-based index with a residual.
    pub fn first_index(&self) -> usize {
        self.first
    }

    /// `Σ̂_t` for 1-based `t`.
    pub fn sigma_t(&self, t: usize) -> &DenseMatrix {
        &self.sigma[t - 1]
    }

    fn index_of(&self, r: f64) -> usize {
        let t = self.sigma.len();
        super::floor_index(r * t as f64).clamp(1, t as i64) as usize
    }

    /// `Σ̂_{[rT]}`.
    pub fn sigma_at(&self, r: f64) -> &DenseMatrix {
        &self.sigma[self.index_of(r) - 1]
    }

    /// `Ĥ_{[rT]}`.
    pub fn chol_at(&self, r: f64) -> &LowerTriangular {
        &self.chol[self.index_of(r) - 1]
    }

    /// Grid path through `Σ̂_t` at knots `t/T`, `t > p`.
    pub fn to_path(&self) -> Result<CovariancePath> {
        let t = self.sigma.len();
        CovariancePath::from_time_grid(t, self.first, self.sigma[self.first - 1..].to_vec())
    }
}

/// `w_tj(b) = (Tb)⁻¹ K((t − j)/(Tb))`.
#[inline]
pub fn weight(kernel: KernelFn, t_total: usize, b: f64, t: usize, j: usize) -> f64 {
    let tb = t_total as f64 * b;
    kernel.eval((t as f64 - j as f64) / tb) / tb
}

fn support(kernel: KernelFn, t_total: usize, b: f64, t: usize, first: usize) -> (usize, usize) {
    let reach = (kernel.radius() * t_total as f64 * b).floor() as usize;
    (t.saturating_sub(reach).max(first), (t + reach).min(t_total))
}

/// `Σ̂_t = Σ_j w_tj ⊙ û_j û′_j` for every `t = 1..T`.
pub fn kernel_cov(fit: &OlsFit, spec: &KernelSpec) -> Result<KernelFit> {
    let outer = OuterProducts::from_residuals(&fit.residuals, fit.lags());
    kernel_cov_from(&outer, spec)
}

/// [`kernel_cov`] on arbitrary outer products.
pub fn kernel_cov_from(outer: &OuterProducts, spec: &KernelSpec) -> Result<KernelFit> {
    let (t_total, d, first) = (outer.t_total(), outer.dim(), outer.first());
    spec.check(t_total, d)?;
    let mut sigma = Vec::with_capacity(t_total);
    let mut chol = Vec::with_capacity(t_total);
    let mut mass = Vec::with_capacity(t_total);
    let mut reg = RegularizationRecord::default();
    for t in 1..=t_total {
        let (s, m) = match &spec.bandwidth {
            Bandwidth::Shared(b) => smooth_shared(outer, spec.kernel, *b, t),
            Bandwidth::PerEntry(_) => smooth_per_entry(outer, spec, t),
        };
        let lam = min_eigenvalue(&s)?;
        let s = if lam >= EIGEN_FLOOR {
            s
        } else {
            reg.adjusted += 1;
            reg.max_shift = reg.max_shift.max(EIGEN_FLOOR - lam);
            match spec.bandwidth {
                Bandwidth::Shared(_) => eigen_floor(&s, EIGEN_FLOOR)?.0,
                Bandwidth::PerEntry(_) => &s + &DenseMatrix::identity(d).scale(EIGEN_FLOOR - lam),
            }
        };
        let h = match cholesky_lower(&s) {
            Ok(h) => h,
            Err(_) => {
                let bumped = &s + &DenseMatrix::identity(d).scale(EIGEN_FLOOR);
                reg.adjusted += 1;
                cholesky_lower(&bumped)?
            }
        };
        sigma.push(s);
        chol.push(h);
        mass.push(m);
    }
    Ok(KernelFit { sigma, chol, mass, spec: spec.clone(), regularization: reg, first })
}

fn smooth_shared(outer: &OuterProducts, kernel: KernelFn, b: f64, t: usize) -> (DenseMatrix, f64) {
    let d = outer.dim();
    let (lo, hi) = support(kernel, outer.t_total(), b, t, outer.first());
    let mut acc = vec![0.0; d * d];
    let mut mass = 0.0;
    for j in lo..=hi {
        let w = weight(kernel, outer.t_total(), b, t, j);
        if w == 0.0 {
            continue;
        }
        mass += w;
        for (a, o) in acc.iter_mut().zip(outer.get(j).as_slice()) {
            *a += w * o;
        }
    }
    (DenseMatrix::from_vec(d, d, acc), mass)
}

fn smooth_per_entry(outer: &OuterProducts, spec: &KernelSpec, t: usize) -> (DenseMatrix, f64) {
    let d = outer.dim();
    let mut s = DenseMatrix::zeros(d, d);
    let mut mass0 = 0.0;
    for l in 0..d {
        for k in l..d {
            let b = spec.bandwidth.for_entry(k, l, d);
            let (lo, hi) = support(spec.kernel, outer.t_total(), b, t, outer.first());
            let mut v = 0.0;
            let mut m = 0.0;
            for j in lo..=hi {
                let w = weight(spec.kernel, outer.t_total(), b, t, j);
                v += w * outer.get(j)[(k, l)];
                m += w;
            }
            s[(k, l)] = v;
            s[(l, k)] = v;
            if k == 0 && l == 0 {
                mass0 = m;
            }
        }
    }
    (s, mass0)
}

/// Result of [`bandwidth_cv`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvOutcome {
    pub chosen: Bandwidth,
    /// Grid point and summed criterion over all entries.
    pub scores: Vec<(f64, f64)>,
}

/// Leave-one-out cross-validation of the smoother over a bandwidth grid.
///
/// The criterion is `Σ_t ‖û_t û′_t − Σ̂_t^{(−t)}‖²_F`, where `Σ̂^{(−t)}` is the
/// kernel-weighted mean of the other outer products. The criterion separates
/// across entries, so a per-entry template selects each `b_kl` independently.
/// Ties go to the larger bandwidth.
pub fn bandwidth_cv(fit: &OlsFit, template: &KernelSpec, grid: &[f64]) -> Result<CvOutcome> {
    let outer = OuterProducts::from_residuals(&fit.residuals, fit.lags());
    bandwidth_cv_from(&outer, template, grid)
}

pub fn bandwidth_cv_from(outer: &OuterProducts, template: &KernelSpec, grid: &[f64]) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (t_total, d, first) = (outer.t_total(), outer.dim(), outer.first());
    let (lo, hi) = template.admissible_range(t_total);
    for &b in grid {
        if !(b >= lo && b <= hi) {
            return Err(Error::BandwidthOutOfRange { b, lo, hi });
        }
    }
    let ne = d * (d + 1) / 2;
    let reference: f64 = (first..=t_total).map(|t| outer.get(t).frobenius_norm().powi(2)).sum();
    // per grid point, per vech entry
    let mut table = vec![vec![0.0; ne]; grid.len()];
    for (g, &b) in grid.iter().enumerate() {
        for t in first..=t_total {
            let (jlo, jhi) = support(template.kernel, t_total, b, t, first);
            let mut acc = vec![0.0; d * d];
            let mut mass = 0.0;
            for j in jlo..=jhi {
                if j == t {
                    continue;
                }
                let w = template.kernel.eval((t as f64 - j as f64) / (t_total as f64 * b));
                if w == 0.0 {
                    continue;
                }
                mass += w;
                for (a, o) in acc.iter_mut().zip(outer.get(j).as_slice()) {
                    *a += w * o;
                }
            }
            let own = outer.get(t);
            for l in 0..d {
                for k in l..d {
                    let pred = if mass > 0.0 { acc[k * d + l] / mass } else { 0.0 };
                    let e = own[(k, l)] - pred;
                    let mult = if k == l { 1.0 } else { 2.0 };
                    table[g][vech_index(k, l, d)] += mult * e * e;
                }
            }
        }
    }
    let pick = |score: &dyn Fn(usize) -> f64| -> f64 {
        let mut best = 0;
        for g in 1..grid.len() {
            let (sg, sb) = (score(g), score(best));
            let tol = 1e-12 * reference.max(f64::MIN_POSITIVE);
            if sg < sb - tol || ((sg - sb).abs() <= tol && grid[g] > grid[best]) {
                best = g;
            }
        }
        grid[best]
    };
    let chosen = match template.bandwidth {
        Bandwidth::Shared(_) => Bandwidth::Shared(pick(&|g| table[g].iter().sum())),
        Bandwidth::PerEntry(_) => Bandwidth::PerEntry((0..ne).map(|e| pick(&|g| table[g][e])).collect()),
    };
    let scores = grid.iter().zip(&table).map(|(&b, row)| (b, row.iter().sum())).collect();
    Ok(CvOutcome { chosen, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::ols::ols_fit;
    use crate::estimation::realized_cov_from;
    use crate::covpath::WindowSpec;
    use crate::matrix::rel_frobenius;
    use crate::var::{simulate, VarModel};

    #[test]
    fn kernels_are_densities() {
        for k in [KernelFn::Triweight, KernelFn::Epanechnikov, KernelFn::Uniform, KernelFn::Gaussian] {
            let n = 200_000;
            let r = k.radius();
            let h = 2.0 * r / n as f64;
            let total: f64 = (0..n).map(|i| k.eval(-r + (i as f64 + 0.5) * h) * h).sum();
            assert!((total - 1.0).abs() < 1e-6, "{k}: {total}");
            assert_eq!(k.eval(0.3), k.eval(-0.3));
            assert!(k.eval(0.1) >= k.eval(0.2));
        }
    }

    #[test]
    fn interior_weights_sum_to_one() {
        let t_total = 1000;
        let b = 0.1;
        for t in [150usize, 500, 850] {
            let m: f64 = (1..=t_total).map(|j| weight(KernelFn::Triweight, t_total, b, t, j)).sum();
            assert!((m - 1.0).abs() < 0.02, "{m}");
        }
    }

    #[test]
    fn fixed_residual_gives_scaled_outer_product() {
        let t_total = 400;
        let u = [1.0, -2.0];
        let mats = vec![DenseMatrix::from_rows(&[&[1.0, -2.0], &[-2.0, 4.0]]); t_total];
        let outer = OuterProducts::from_matrices(t_total, 1, mats).unwrap();
        let fit = kernel_cov_from(&outer, &KernelSpec::shared(0.2)).unwrap();
        let t = 200;
        let m = fit.mass[t - 1];
        assert!((m - 1.0).abs() < 0.02);
        let s = fit.sigma_t(t);
        for i in 0..2 {
            for j in 0..2 {
                // rank-one input: the eigenvalue floor moves entries by at most 1e-8
                assert!((s[(i, j)] - m * u[i] * u[j]).abs() < 2e-8);
            }
        }
    }

    #[test]
    fn flat_kernel_matches_realized_cov() {
        let path = CovariancePath::constant(DenseMatrix::from_rows(&[&[1.0, 0.3], &[0.3, 2.0]])).unwrap();
        let x = simulate(&VarModel::zero(2, 1), &path, 400, 5, 10).unwrap();
        let fit = ols_fit(&x, 1).unwrap();
        let outer = OuterProducts::from_residuals(&fit.residuals, 1);
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let realized = realized_cov_from(&outer, &w).unwrap();
        let spec = KernelSpec::shared(0.25).with_kernel(KernelFn::Uniform);
        let k = kernel_cov_from(&outer, &spec).unwrap();
        let t = 200;
        let normalized = k.sigma_t(t).scale(1.0 / k.mass[t - 1]);
        assert!((&normalized - &realized).max_abs() < 1e-8);
    }

    #[test]
    fn constant_truth_is_recovered() {
        let s0 = DenseMatrix::from_rows(&[&[0.4, 0.1], &[0.1, 0.3]]);
        let path = CovariancePath::constant(s0.clone()).unwrap();
        let t = 2000;
        let mut errs: Vec<f64> = (0..21)
            .map(|seed| {
                let x = simulate(&VarModel::zero(2, 1), &path, t, seed, 10).unwrap();
                let fit = ols_fit(&x, 1).unwrap();
                let k = kernel_cov(&fit, &KernelSpec::rule_of_thumb(t)).unwrap();
                (k.sigma_t(t / 2) - &s0).frobenius_norm()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[10] < 0.1, "median {}", errs[10]);
        assert!(rel_frobenius(&s0, &s0) == 0.0);
    }

    #[test]
    fn bandwidth_checks() {
        let mats = vec![DenseMatrix::identity(1); 100];
        let outer = OuterProducts::from_matrices(100, 1, mats).unwrap();
        assert!(matches!(
            kernel_cov_from(&outer, &KernelSpec::shared(5.0)),
            Err(Error::BandwidthOutOfRange { .. })
        ));
        assert_eq!(bandwidth_cv_from(&outer, &KernelSpec::shared(0.2), &[]).unwrap_err(), Error::EmptyGrid);
        let one = bandwidth_cv_from(&outer, &KernelSpec::shared(0.2), &[0.3]).unwrap();
        assert_eq!(one.chosen, Bandwidth::Shared(0.3));
        // constant outer products: every bandwidth ties, so the largest wins
        let tie = bandwidth_cv_from(&outer, &KernelSpec::shared(0.2), &[0.2, 0.5, 0.3]).unwrap();
        assert_eq!(tie.chosen, Bandwidth::Shared(0.5));
    }
}
