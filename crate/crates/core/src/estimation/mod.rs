//! Estimators that consume data: least squares, kernel covariance smoothing,
//! adaptive least squares, realized window covariance and the boundary-corrected
//! covariance path used for averaged Cholesky factors.

pub mod als;
pub mod kernel;
pub mod ols;

use serde::{Deserialize, Serialize};

pub use als::{als_fit, als_with_weights, AlsFit};
pub use kernel::{bandwidth_cv, bandwidth_cv_from, kernel_cov, kernel_cov_from, Bandwidth, CvOutcome, KernelFit, KernelFn, KernelSpec};
pub use ols::{ols_fit, OlsFit};

use crate::covpath::WindowSpec;
use crate::error::{Error, Result};
use crate::matrix::{floored_cholesky, DenseMatrix, LowerTriangular};

/// Integer part with a small guard against representation error (`0.3·1000 = 299.999…`).
pub fn floor_index(x: f64) -> i64 {
    (x + 1e-9).floor() as i64
}

/// Outer products `û_j û′_j` for 1-based `j = first..=T`.
#[derive(Clone, Debug)]
pub struct OuterProducts {
    t_total: usize,
    first: usize,
    mats: Vec<DenseMatrix>,
}

impl OuterProducts {
    /// From a T × d residual array whose first `p` rows are unused.
    pub fn from_residuals(residuals: &DenseMatrix, p: usize) -> Self {
        let (t_total, d) = (residuals.rows(), residuals.cols());
        let mats = (p..t_total)
            .map(|s| {
                let u = residuals.row(s);
                let mut m = DenseMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        m[(i, j)] = u[i] * u[j];
                    }
                }
                m
            })
            .collect();
        Self { t_total, first: p + 1, mats }
    }

    /// Arbitrary symmetric matrices standing in for `û_j û′_j`, `j = first..=T`.
    pub fn from_matrices(t_total: usize, first: usize, mats: Vec<DenseMatrix>) -> Result<Self> {
        if first == 0 || mats.len() + first != t_total + 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} matrices cannot cover indices {first}..={t_total}",
                mats.len()
            )));
        }
        Ok(Self { t_total, first, mats })
    }

    pub fn t_total(&self) -> usize {
        self.t_total
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn dim(&self) -> usize {
        self.mats[0].rows()
    }

    /// Outer product at 1-based `j ≥ first`.
    #[inline]
    pub fn get(&self, j: usize) -> &DenseMatrix {
        &self.mats[j - self.first]
    }
}

fn check_range(lo: i64, hi: i64, outer: &OuterProducts) -> Result<()> {
    if lo < outer.first as i64 || hi > outer.t_total as i64 || lo > hi {
        return Err(Error::WindowOutOfRange { lo, hi, t: outer.t_total });
    }
    Ok(())
}

/// `Ŝ_T(r) = ([qT] + 1)⁻¹ Σ_{k=−[qT/2]}^{[qT/2]} û_{[rT]−k} û′_{[rT]−k}`.
pub fn realized_cov(fit: &OlsFit, w: &WindowSpec) -> Result<DenseMatrix> {
    realized_cov_from(&OuterProducts::from_residuals(&fit.residuals, fit.lags()), w)
}

pub fn realized_cov_from(outer: &OuterProducts, w: &WindowSpec) -> Result<DenseMatrix> {
    let t = outer.t_total as f64;
    let c = floor_index(w.r * t);
    let half = floor_index(w.q * t / 2.0);
    let (lo, hi) = (c - half, c + half);
    check_range(lo, hi, outer)?;
    let d = outer.dim();
    let mut acc = DenseMatrix::zeros(d, d);
    for j in lo..=hi {
        acc = &acc + outer.get(j as usize);
    }
    Ok(acc.scale(1.0 / (floor_index(w.q * t) + 1) as f64))
}

/// Rule for the inner smoothing bandwidth `h` of the corrected path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HRule {
    /// `(q / 2√3) T^{−1/3}`
    T13,
    /// `(q / 2√3) T^{−2/7}`
    T27,
    /// `c (q / 2√3) T^{−a}` with `a ∈ [2/7, 1/3]`
    Scaled { c: f64, a: f64 },
    /// A fixed `h`, bypassing the rate constraint.
    Explicit(f64),
}

impl HRule {
    pub fn resolve(&self, q: f64, t: usize) -> Result<f64> {
        let base = q / (2.0 * 3f64.sqrt());
        let t = t as f64;
        let h = match *self {
            HRule::T13 => base * t.powf(-1.0 / 3.0),
            HRule::T27 => base * t.powf(-2.0 / 7.0),
            HRule::Scaled { c, a } => {
                if !(a >= 2.0 / 7.0 - 1e-12 && a <= 1.0 / 3.0 + 1e-12) || !(c > 0.0) {
                    return Err(Error::BandwidthInfeasible(format!(
                        "rate exponent {a} outside [2/7, 1/3] or non-positive constant {c}"
                    )));
                }
                c * base * t.powf(-a)
            }
            HRule::Explicit(h) => h,
        };
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::BandwidthInfeasible(format!("h = {h}")));
        }
        Ok(h)
    }
}

impl std::str::FromStr for HRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t13" | "h1" => Ok(HRule::T13),
            "t27" | "h2" => Ok(HRule::T27),
            other => other
                .parse::<f64>()
                .map(HRule::Explicit)
                .map_err(|_| Error::Config(format!("unknown h rule '{other}'"))),
        }
    }
}

/// One point `n = [rT] − k` of the corrected covariance path.
#[derive(Clone, Debug)]
pub struct CorrectedEntry {
    pub k: i64,
    pub index: usize,
    /// `Σ_j (Th)⁻¹ L((n − j)/(Th)) û_j û′_j` over the inner index range.
    pub v_raw: DenseMatrix,
    /// `Σ_j (Th)⁻¹ L((n − j)/(Th))`.
    pub mass: f64,
    /// `v_raw / mass` after the eigenvalue floor; `h_hat h_hat′ = v`.
    pub v: DenseMatrix,
    pub h_hat: LowerTriangular,
}

/// Boundary-corrected local covariances over a window and their Cholesky factors.
#[derive(Clone, Debug)]
pub struct CorrectedPath {
    pub window: WindowSpec,
    pub h: f64,
    pub kernel: KernelFn,
    /// Inner indices `j_min..=j_max`.
    pub inner: (usize, usize),
    pub entries: Vec<CorrectedEntry>,
    /// `[qT] + 1`.
    pub divisor: usize,
}

impl CorrectedPath {
    /// `H̄̂ = ([qT] + 1)⁻¹ Σ_k Ĥ_{[rT]−k}`.
    pub fn average(&self) -> LowerTriangular {
        let d = self.entries[0].h_hat.dim();
        let mut acc = DenseMatrix::zeros(d, d);
        for e in &self.entries {
            acc = &acc + e.h_hat.as_matrix();
        }
        LowerTriangular::new(acc.scale(1.0 / self.divisor as f64)).expect("average of Cholesky factors")
    }
}

/// Local covariance path inside a window with kernel sums confined to the inner
/// range `[(r − (q−h)/2)T] + 1 ..= [(r + (q−h)/2)T]`.
///
/// For each `n = [rT] − k`, `|k| ≤ [qT/2]`, the kernel-weighted sum over the inner
/// range is divided by its own kernel mass before factorization, so points whose
/// kernel window is cut by the inner range become one-sided local averages.
pub fn corrected_cov_path(fit: &OlsFit, w: &WindowSpec, h: f64, kernel: KernelFn) -> Result<CorrectedPath> {
    corrected_cov_path_from(&OuterProducts::from_residuals(&fit.residuals, fit.lags()), w, h, kernel)
}

pub fn corrected_cov_path_from(
    outer: &OuterProducts,
    w: &WindowSpec,
    h: f64,
    kernel: KernelFn,
) -> Result<CorrectedPath> {
    if !kernel.is_compact() {
        return Err(Error::Config("the corrected path needs a kernel supported on [-1, 1]".into()));
    }
    if !(h > 0.0) || w.q - h <= 0.0 {
        return Err(Error::BandwidthInfeasible(format!("q − h = {} must be positive", w.q - h)));
    }
    let t = outer.t_total as f64;
    let c = floor_index(w.r * t);
    let half = floor_index(w.q * t / 2.0);
    check_range(c - half, c + half, outer)?;
    let jlo = floor_index((w.r - (w.q - h) / 2.0) * t) + 1;
    let jhi = floor_index((w.r + (w.q - h) / 2.0) * t);
    check_range(jlo, jhi, outer)?;
    let th = t * h;
    let reach = th.floor() as i64;
    let d = outer.dim();
    let mut entries = Vec::with_capacity((2 * half + 1) as usize);
    for k in -half..=half {
        let n = c - k;
        let mut v_raw = DenseMatrix::zeros(d, d);
        let mut mass = 0.0;
        for j in (n - reach).max(jlo)..=(n + reach).min(jhi) {
            let wgt = kernel.eval((n - j) as f64 / th) / th;
            if wgt == 0.0 {
                continue;
            }
            mass += wgt;
            v_raw = &v_raw + &outer.get(j as usize).scale(wgt);
        }
        if !(mass > 0.0) {
            return Err(Error::BandwidthInfeasible(format!(
                "no inner observations within the kernel window at index {n} (Th = {th:.3})"
            )));
        }
        let (h_hat, _) = floored_cholesky(&v_raw.scale(1.0 / mass), kernel::EIGEN_FLOOR)?;
        let v = h_hat.outer();
        entries.push(CorrectedEntry { k, index: n as usize, v_raw, mass, v, h_hat });
    }
    Ok(CorrectedPath {
        window: *w,
        h,
        kernel,
        inner: (jlo as usize, jhi as usize),
        entries,
        divisor: (floor_index(w.q * t) + 1) as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covpath::{CovariancePath, ShapeFn};
    use crate::matrix::rel_frobenius;
    use crate::var::{simulate, VarModel};

    fn synthetic(path: &CovariancePath, t: usize) -> OuterProducts {
        let mats = (1..=t).map(|j| path.eval(j as f64 / t as f64).unwrap()).collect();
        OuterProducts::from_matrices(t, 1, mats).unwrap()
    }

    #[test]
    fn realized_examples() {
        let e1 = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let outer = OuterProducts::from_matrices(101, 1, vec![e1.clone(); 101]).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        // 2·[qT/2] + 1 = 51 terms, [qT] + 1 = 51
        let s = realized_cov_from(&outer, &w).unwrap();
        assert!(rel_frobenius(&s, &e1) < 1e-14);
        let short = OuterProducts::from_matrices(101, 40, vec![e1; 62]).unwrap();
        assert!(matches!(realized_cov_from(&short, &w), Err(Error::WindowOutOfRange { .. })));
    }

    #[test]
    fn realized_tracks_window_average() {
        let path = CovariancePath::benchmark(1.0, ShapeFn::Sin).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let x = simulate(&VarModel::zero(2, 1), &path, 4000, 11, 10).unwrap();
        let fit = ols_fit(&x, 1).unwrap();
        let s = realized_cov(&fit, &w).unwrap();
        assert!((&s - &path.integrate_cov(&w).unwrap()).frobenius_norm() < 0.1);
    }

    #[test]
    fn corrected_path_on_exact_inputs() {
        let path = CovariancePath::benchmark(1.0, ShapeFn::Sin).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let t = 4000;
        let outer = synthetic(&path, t);
        let target = path.integrate_chol(&w).unwrap();
        let h = HRule::T13.resolve(w.q, t).unwrap();
        let cp = corrected_cov_path_from(&outer, &w, h, KernelFn::Epanechnikov).unwrap();
        let err = (cp.average().as_matrix() - target.as_matrix()).frobenius_norm();
        assert!(err < 1e-2, "error {err}");
        for e in &cp.entries {
            assert!((&e.h_hat.outer() - &e.v).max_abs() < 1e-10);
        }
    }

    #[test]
    fn corrected_path_constant_truth() {
        let s0 = DenseMatrix::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let path = CovariancePath::constant(s0.clone()).unwrap();
        let w = WindowSpec::new(0.5, 0.4).unwrap();
        let cp = corrected_cov_path_from(&synthetic(&path, 1000), &w, 0.05, KernelFn::Epanechnikov).unwrap();
        let h = path.eval_chol(0.5).unwrap();
        for e in &cp.entries {
            assert!(rel_frobenius(e.h_hat.as_matrix(), h.as_matrix()) < 1e-12);
        }
        // 2·[qT/2] + 1 = 401 = [qT] + 1 terms
        assert!(rel_frobenius(cp.average().as_matrix(), h.as_matrix()) < 1e-12);
    }

    #[test]
    fn infeasible_h() {
        let path = CovariancePath::constant(DenseMatrix::identity(1)).unwrap();
        let w = WindowSpec::new(0.5, 0.3).unwrap();
        let outer = synthetic(&path, 500);
        assert!(matches!(
            corrected_cov_path_from(&outer, &w, 0.3, KernelFn::Epanechnikov),
            Err(Error::BandwidthInfeasible(_))
        ));
        assert!(matches!(
            HRule::Scaled { c: 1.0, a: 0.5 }.resolve(0.5, 100),
            Err(Error::BandwidthInfeasible(_))
        ));
    }

    #[test]
    fn h_rules() {
        let base = 0.5 / (2.0 * 3f64.sqrt());
        assert!((HRule::T13.resolve(0.5, 800).unwrap() - base * 800f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!((HRule::T27.resolve(0.5, 800).unwrap() - base * 800f64.powf(-2.0 / 7.0)).abs() < 1e-15);
        assert_eq!("h1".parse::<HRule>().unwrap(), HRule::T13);
        assert_eq!("0.04".parse::<HRule>().unwrap(), HRule::Explicit(0.04));
    }
}
