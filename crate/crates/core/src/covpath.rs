//! Deterministic covariance paths `r ↦ Σ(r)` on the unit interval, their
//! Cholesky paths, and quadrature for window averages.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky_lower, eigen_floor, min_eigenvalue, unvech, DenseMatrix, LowerTriangular};

/// Absolute per-entry tolerance of the adaptive quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// Eigenvalue floor applied when interpolation breaks positive definiteness.
pub const PD_FLOOR: f64 = 1e-8;

/// Largest finite-difference quotient accepted by [`CovariancePath::validate`].
pub const LIPSCHITZ_BOUND: f64 = 1e6;

/// Center `r` and width `q` of a window `(r − q/2, r + q/2)` in rescaled time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub r: f64,
    pub q: f64,
}

impl WindowSpec {
    /// Requires `0 < r − q/2 < r + q/2 < 1`.
    pub fn new(r: f64, q: f64) -> Result<Self> {
        let ok = r.is_finite() && q.is_finite() && q > 0.0 && r - q / 2.0 > 0.0 && r + q / 2.0 < 1.0;
        if ok {
            Ok(Self { r, q })
        } else {
            Err(Error::InvalidWindow { r, q })
        }
    }

    pub fn lo(&self) -> f64 {
        self.r - self.q / 2.0
    }

    pub fn hi(&self) -> f64 {
        self.r + self.q / 2.0
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.lo() && v < self.hi()
    }
}

/// Shape functions `f` for the simulation-study variance `σ²₁₁(r) = 1.4 + δ f(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFn {
    /// `sin(2πr)`
    #[default]
    Sin,
    /// `cos(2πr)`
    Cos,
    /// `2r − 1`
    Ramp,
    /// `−1` before `r = 1/2`, `+1` after
    Step,
}

impl ShapeFn {
    pub fn eval(self, r: f64) -> f64 {
        use std::f64::consts::TAU;
        match self {
            ShapeFn::Sin => (TAU * r).sin(),
            ShapeFn::Cos => (TAU * r).cos(),
            ShapeFn::Ramp => 2.0 * r - 1.0,
            ShapeFn::Step => {
                if r < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn breaks(self) -> Vec<f64> {
        match self {
            ShapeFn::Step => vec![0.5],
            _ => Vec::new(),
        }
    }

    /// Infimum over `(0, 1]` and a point attaining or approaching it.
    fn infimum(self) -> (f64, f64) {
        match self {
            ShapeFn::Sin => (-1.0, 0.75),
            ShapeFn::Cos => (-1.0, 0.5),
            ShapeFn::Ramp => (-1.0, 0.0),
            ShapeFn::Step => (-1.0, 0.25),
        }
    }
}

impl FromStr for ShapeFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sin" => Ok(ShapeFn::Sin),
            "cos" => Ok(ShapeFn::Cos),
            "ramp" => Ok(ShapeFn::Ramp),
            "step" => Ok(ShapeFn::Step),
            other => Err(Error::Config(format!("unknown shape function '{other}'"))),
        }
    }
}

impl fmt::Display for ShapeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ShapeFn::Sin => "sin",
            ShapeFn::Cos => "cos",
            ShapeFn::Ramp => "ramp",
            ShapeFn::Step => "step",
        };
        f.write_str(s)
    }
}

/// Coarse classification of a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Constant,
    PiecewiseConstant,
    SmoothParametric,
    GridInterpolated,
}

type SigmaFn = Arc<dyn Fn(f64) -> DenseMatrix + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Constant(DenseMatrix),
    Piecewise { edges: Vec<f64>, levels: Vec<DenseMatrix> },
    Benchmark { delta: f64, shape: ShapeFn },
    Function(SigmaFn),
    Grid { knots: Vec<f64>, values: Vec<DenseMatrix> },
}

/// Map `r ∈ (0, 1] → Σ(r)`, symmetric positive definite.
#[derive(Clone)]
pub struct CovariancePath {
    d: usize,
    repr: Repr,
    scale: f64,
    breaks: Vec<f64>,
}

impl fmt::Debug for CovariancePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CovariancePath")
            .field("d", &self.d)
            .field("kind", &self.kind())
            .field("scale", &self.scale)
            .field("breaks", &self.breaks)
            .finish()
    }
}

impl CovariancePath {
    pub fn constant(sigma: DenseMatrix) -> Result<Self> {
        cholesky_lower(&sigma)?;
        Ok(Self { d: sigma.rows(), repr: Repr::Constant(sigma), scale: 1.0, breaks: Vec::new() })
    }

    /// Piecewise-constant path: `levels[k]` holds on `[edges[k−1], edges[k])`.
    pub fn piecewise(edges: Vec<f64>, levels: Vec<DenseMatrix>) -> Result<Self> {
        if levels.len() != edges.len() + 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} levels for {} break points",
                levels.len(),
                edges.len()
            )));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) || edges.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Config("break points must be increasing inside (0, 1)".into()));
        }
        let d = levels[0].rows();
        for l in &levels {
            if l.rows() != d {
                return Err(Error::ShapeMismatch("levels of different dimensions".into()));
            }
            cholesky_lower(l)?;
        }
        Ok(Self { d, breaks: edges.clone(), repr: Repr::Piecewise { edges, levels }, scale: 1.0 })
    }

    /// Scalar piecewise-constant variance path.
    pub fn scalar_piecewise(edges: Vec<f64>, variances: &[f64]) -> Result<Self> {
        Self::piecewise(edges, variances.iter().map(|&v| DenseMatrix::from_diag(&[v])).collect())
    }

    /// Arbitrary parametric path with declared discontinuity points.
    pub fn from_fn<F>(d: usize, breaks: Vec<f64>, f: F) -> Self
    where
        F: Fn(f64) -> DenseMatrix + Send + Sync + 'static,
    {
        let mut breaks = breaks;
        breaks.sort_by(f64::total_cmp);
        Self { d, repr: Repr::Function(Arc::new(f)), scale: 1.0, breaks }
    }

    /// Piecewise-linear interpolation of `Σ` between knots, constant beyond the ends.
    pub fn grid(knots: Vec<f64>, values: Vec<DenseMatrix>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} knots for {} matrices",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("grid knots must be strictly increasing".into()));
        }
        let d = values[0].rows();
        if values.iter().any(|v| v.rows() != d || v.cols() != d) {
            return Err(Error::ShapeMismatch("grid matrices of different shapes".into()));
        }
        Ok(Self { d, repr: Repr::Grid { knots, values }, scale: 1.0, breaks: Vec::new() })
    }

    /// Loads a grid path from CSV: `r` followed by the `d(d+1)/2` entries of `vech(Σ(r))`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut knots = Vec::new();
        let mut values = Vec::new();
        let mut d = None;
        for (idx, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
            let nums = match parsed {
                Ok(v) => v,
                Err(_) if idx == 0 => continue,
                Err(e) => return Err(Error::Parse { line, message: e.to_string() }),
            };
            let m = nums.len().saturating_sub(1);
            let dim = ((((8 * m + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
            if m == 0 || dim * (dim + 1) / 2 != m {
                return Err(Error::Parse { line, message: format!("{m} vech entries do not form a triangle") });
            }
            if *d.get_or_insert(dim) != dim {
                return Err(Error::Parse { line, message: "inconsistent column count".into() });
            }
            knots.push(nums[0]);
            values.push(unvech(&nums[1..], dim)?);
        }
        if knots.is_empty() {
            return Err(Error::TooShort("grid file has no data rows".into()));
        }
        Self::grid(knots, values)
    }

    /// Grid path with knots `t/T` for the supplied matrices (e.g. a kernel fit).
    pub fn from_time_grid(t_total: usize, first_t: usize, values: Vec<DenseMatrix>) -> Result<Self> {
        let knots = (0..values.len()).map(|k| (first_t + k) as f64 / t_total as f64).collect();
        Self::grid(knots, values)
    }

    /// The bivariate simulation-study path: `σ²₁₁ = 1.4 + δ f(r)`, `σ²₂₂ = σ²₁₁/2`,
    /// correlation 0.7.
    pub fn benchmark(delta: f64, shape: ShapeFn) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::Config(format!("delta must be a nonnegative number, got {delta}")));
        }
        let (fmin, at) = shape.infimum();
        let worst = 1.4 + delta * fmin;
        if worst <= 0.0 {
            return Err(Error::NonPositiveVariance { r: at, value: worst });
        }
        Ok(Self { d: 2, repr: Repr::Benchmark { delta, shape }, scale: 1.0, breaks: shape.breaks() })
    }

    /// The same path multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Config(format!("scale must be positive, got {c}")));
        }
        let mut out = self.clone();
        out.scale *= c;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn kind(&self) -> PathKind {
        match self.repr {
            Repr::Constant(_) => PathKind::Constant,
            Repr::Piecewise { .. } => PathKind::PiecewiseConstant,
            Repr::Benchmark { delta, .. } if delta == 0.0 => PathKind::Constant,
            Repr::Benchmark { .. } | Repr::Function(_) => PathKind::SmoothParametric,
            Repr::Grid { .. } => PathKind::GridInterpolated,
        }
    }

    /// Declared break points strictly inside the window.
    pub fn breaks_in(&self, w: &WindowSpec) -> Vec<f64> {
        self.breaks.iter().copied().filter(|&b| w.contains(b)).collect()
    }

    /// `Σ(r)`. The left end `r = 0` is read as the right limit.
    pub fn eval(&self, r: f64) -> Result<DenseMatrix> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Config(format!("rescaled time {r} outside (0, 1]")));
        }
        let s = match &self.repr {
            Repr::Constant(s) => s.clone(),
            Repr::Piecewise { edges, levels } => {
                let k = edges.partition_point(|&e| e <= r);
                levels[k].clone()
            }
            Repr::Benchmark { delta, shape } => {
                let s11 = 1.4 + delta * shape.eval(r);
                if s11 <= 0.0 {
                    return Err(Error::NonPositiveVariance { r, value: s11 });
                }
                let s22 = 0.5 * s11;
                let s12 = 0.7 * (s11 * s22).sqrt();
                DenseMatrix::from_rows(&[&[s11, s12], &[s12, s22]])
            }
            Repr::Function(f) => f(r),
            Repr::Grid { knots, values } => interpolate(knots, values, r)?,
        };
        Ok(if self.scale == 1.0 { s } else { s.scale(self.scale) })
    }

    /// `H(r)`, the lower Cholesky factor of `Σ(r)`.
    pub fn eval_chol(&self, r: f64) -> Result<LowerTriangular> {
        let s = self.eval(r)?;
        cholesky_lower(&s).map_err(|e| match e {
            Error::NonPositiveDefinite { .. } => Error::NonPositiveVariance { r, value: min_eigenvalue(&s).unwrap_or(f64::NAN) },
            other => other,
        })
    }

    pub fn eval_sigma_and_h(&self, r: f64) -> Result<(DenseMatrix, LowerTriangular)> {
        let s = self.eval(r)?;
        let h = cholesky_lower(&s)?;
        Ok((s, h))
    }

    /// Quadrature panel boundaries: declared breaks plus grid knots.
    fn panel_points(&self) -> std::borrow::Cow<'_, [f64]> {
        match &self.repr {
            Repr::Grid { knots, .. } => {
                let mut pts: Vec<f64> = knots.iter().chain(&self.breaks).copied().collect();
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                std::borrow::Cow::Owned(pts)
            }
            _ => std::borrow::Cow::Borrowed(&self.breaks),
        }
    }

    /// `q⁻¹ ∫_w Σ(v) dv`.
    pub fn integrate_cov(&self, w: &WindowSpec) -> Result<DenseMatrix> {
        self.window_average(w, |s, _| Ok(s.clone()))
    }

    /// `H̄ = q⁻¹ ∫_w H(v) dv`.
    pub fn integrate_chol(&self, w: &WindowSpec) -> Result<LowerTriangular> {
        let m = self.window_average(w, |_, h| Ok(h.as_matrix().clone()))?;
        LowerTriangular::new(zero_upper(m))
    }

    /// `q⁻¹ ∫_w g(Σ(v), H(v)) dv` with break points as panel boundaries.
    pub fn window_average<G>(&self, w: &WindowSpec, g: G) -> Result<DenseMatrix>
    where
        G: Fn(&DenseMatrix, &LowerTriangular) -> Result<DenseMatrix>,
    {
        let total = integrate_matrix(w.lo(), w.hi(), &self.panel_points(), QUAD_TOL * w.q, |v| {
            let (s, h) = self.eval_sigma_and_h(v)?;
            g(&s, &h)
        })?;
        Ok(total.scale(1.0 / w.q))
    }

    /// `∫_0^1 g(Σ(v), H(v)) dv`.
    pub fn integrate_unit<G>(&self, tol: f64, g: G) -> Result<DenseMatrix>
    where
        G: Fn(&DenseMatrix, &LowerTriangular) -> Result<DenseMatrix>,
    {
        integrate_matrix(0.0, 1.0, &self.panel_points(), tol, |v| {
            let (s, h) = self.eval_sigma_and_h(v)?;
            g(&s, &h)
        })
    }

    /// Checks positive definiteness and bounded difference quotients on a grid
    /// of `n + 1` points; quotients across declared breaks are skipped.
    pub fn validate(&self, n: usize) -> Result<PathDiagnostics> {
        let n = n.max(2);
        let mut min_eig = f64::INFINITY;
        let mut max_quot = 0.0_f64;
        let mut prev: Option<(f64, DenseMatrix)> = None;
        for k in 0..=n {
            let r = (k as f64 / n as f64).max(1e-12);
            let s = self.eval(r)?;
            let lam = min_eigenvalue(&s)?;
            if lam <= 0.0 {
                return Err(Error::NonPositiveVariance { r, value: lam });
            }
            min_eig = min_eig.min(lam);
            if let Some((r0, s0)) = &prev {
                let straddles = self.breaks.iter().any(|&b| b > *r0 && b <= r);
                if !straddles {
                    max_quot = max_quot.max((&s - s0).max_abs() / (r - r0));
                }
            }
            prev = Some((r, s));
        }
        if max_quot > LIPSCHITZ_BOUND {
            return Err(Error::Config(format!(
                "difference quotient {max_quot:e} away from declared breaks"
            )));
        }
        Ok(PathDiagnostics { min_eigenvalue: min_eig, max_difference_quotient: max_quot })
    }
}

/// Summary of [`CovariancePath::validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathDiagnostics {
    pub min_eigenvalue: f64,
    pub max_difference_quotient: f64,
}

fn zero_upper(mut m: DenseMatrix) -> DenseMatrix {
    for i in 0..m.rows() {
        for j in i + 1..m.cols() {
            m[(i, j)] = 0.0;
        }
    }
    m
}

fn interpolate(knots: &[f64], values: &[DenseMatrix], r: f64) -> Result<DenseMatrix> {
    let k = knots.partition_point(|&x| x <= r);
    let s = if k == 0 {
        values[0].clone()
    } else if k == knots.len() {
        values[k - 1].clone()
    } else {
        let (a, b) = (knots[k - 1], knots[k]);
        let t = (r - a) / (b - a);
        &values[k - 1].scale(1.0 - t) + &values[k].scale(t)
    };
    if min_eigenvalue(&s)? >= PD_FLOOR {
        Ok(s)
    } else {
        Ok(eigen_floor(&s, PD_FLOOR)?.0)
    }
}

/// Adaptive Simpson quadrature of a matrix-valued integrand over `[a, b]`.
///
/// Points of `breaks` inside the interval split it into separate panels. The
/// tolerance is absolute and per entry.
pub fn integrate_matrix<F>(a: f64, b: f64, breaks: &[f64], tol: f64, f: F) -> Result<DenseMatrix>
where
    F: Fn(f64) -> Result<DenseMatrix>,
{
    let mut nodes = vec![a];
    nodes.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    nodes.push(b);
    let panels = nodes.len() - 1;
    let mut total: Option<DenseMatrix> = None;
    for w in nodes.windows(2) {
        let part = simpson_panel(&f, w[0], w[1], tol / panels as f64)?;
        total = Some(match total {
            None => part,
            Some(t) => &t + &part,
        });
    }
    Ok(total.expect("at least one panel"))
}

fn simpson_panel<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<DenseMatrix>
where
    F: Fn(f64) -> Result<DenseMatrix>,
{
    // Evaluate strictly inside the panel at its ends so one-sided limits are used at breaks.
    let nudge = 1e-13 * (b - a).max(1e-300);
    let fa = f(a + nudge)?;
    let fb = f(b - nudge)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = simpson(a, b, &fa, &fm, &fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 0)
}

fn simpson(a: f64, b: f64, fa: &DenseMatrix, fm: &DenseMatrix, fb: &DenseMatrix) -> DenseMatrix {
    let s = &(fa + fb) + &fm.scale(4.0);
    s.scale((b - a) / 6.0)
}

const MIN_DEPTH: u32 = 3;
const MAX_DEPTH: u32 = 40;

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: DenseMatrix,
    fm: DenseMatrix,
    fb: DenseMatrix,
    whole: DenseMatrix,
    tol: f64,
    depth: u32,
) -> Result<DenseMatrix>
where
    F: Fn(f64) -> Result<DenseMatrix>,
{
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m))?;
    let frm = f(0.5 * (m + b))?;
    let left = simpson(a, m, &fa, &flm, &fm);
    let right = simpson(m, b, &fm, &frm, &fb);
    let both = &left + &right;
    let err = (&both - &whole).max_abs();
    // absolute tolerance, floored at rounding level of the panel value
    let target = (15.0 * tol).max(1e-14 * both.max_abs());
    if depth >= MAX_DEPTH || (depth >= MIN_DEPTH && err <= target) {
        let corr = (&both - &whole).scale(1.0 / 15.0);
        return Ok(&both + &corr);
    }
    let l = recurse(f, a, m, fa, flm, fm.clone(), left, tol / 2.0, depth + 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?;
    Ok(&l + &r)
}

/// Scalar convenience wrapper around [`integrate_matrix`].
pub fn integrate_scalar<F>(a: f64, b: f64, breaks: &[f64], tol: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    Ok(integrate_matrix(a, b, breaks, tol, |x| Ok(DenseMatrix::from_diag(&[f(x)])))?[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rel_frobenius;

    fn w(r: f64, q: f64) -> WindowSpec {
        WindowSpec::new(r, q).unwrap()
    }

    #[test]
    fn window_admissibility() {
        assert!(WindowSpec::new(0.5, 0.5).is_ok());
        assert!(WindowSpec::new(0.25, 0.5).is_err());
        assert!(WindowSpec::new(0.9, 0.3).is_err());
        assert!(WindowSpec::new(0.5, 0.0).is_err());
    }

    #[test]
    fn eval_examples() {
        let s = DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]);
        let p = CovariancePath::constant(s).unwrap();
        let (_, h) = p.eval_sigma_and_h(0.3).unwrap();
        assert_eq!(h.as_matrix(), &DenseMatrix::from_rows(&[&[2.0, 0.0], &[1.0, 2.0]]));

        let lin = CovariancePath::from_fn(1, vec![], |r| DenseMatrix::from_diag(&[r]));
        let h = lin.eval_chol(0.25).unwrap();
        assert!((h.as_matrix()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn integrate_examples() {
        let lin = CovariancePath::from_fn(1, vec![], |r| DenseMatrix::from_diag(&[r]));
        assert!((lin.integrate_cov(&w(0.5, 0.5)).unwrap()[(0, 0)] - 0.5).abs() < 1e-12);

        let step = CovariancePath::scalar_piecewise(vec![0.5], &[1.0, 4.0]).unwrap();
        let win = w(0.5, 0.5);
        assert!((step.integrate_cov(&win).unwrap()[(0, 0)] - 2.5).abs() < 1e-12);
        let hbar = step.integrate_chol(&win).unwrap();
        assert!((hbar.as_matrix()[(0, 0)] - 1.5).abs() < 1e-12);

        let id = CovariancePath::constant(DenseMatrix::identity(3)).unwrap();
        assert!(rel_frobenius(id.integrate_chol(&win).unwrap().as_matrix(), &DenseMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn benchmark_examples() {
        let p0 = CovariancePath::benchmark(0.0, ShapeFn::Sin).unwrap();
        let s = p0.eval(0.37).unwrap();
        let off = 0.7 * 0.98_f64.sqrt();
        assert!(rel_frobenius(&s, &DenseMatrix::from_rows(&[&[1.4, off], &[off, 0.7]])) < 1e-14);
        let p1 = CovariancePath::benchmark(1.0, ShapeFn::Sin).unwrap();
        let s = p1.eval(0.25).unwrap();
        assert!((s[(0, 0)] - 2.4).abs() < 1e-12);
        for r in [0.1, 0.5, 0.8] {
            let s = p1.eval(r).unwrap();
            assert!((s[(0, 1)] / (s[(0, 0)] * s[(1, 1)]).sqrt() - 0.7).abs() < 1e-14);
        }
        assert!(matches!(
            CovariancePath::benchmark(1.5, ShapeFn::Sin),
            Err(Error::NonPositiveVariance { .. })
        ));
        for delta in [0.0, 0.25, 0.5, 1.0] {
            CovariancePath::benchmark(delta, ShapeFn::Sin).unwrap().validate(2000).unwrap();
        }
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let p = CovariancePath::benchmark(1.0, ShapeFn::Sin).unwrap();
        let win = w(0.5, 0.5);
        let coarse = p.integrate_chol(&win).unwrap();
        let fine = integrate_matrix(win.lo(), win.hi(), &[0.4, 0.5, 0.6], 1e-13, |v| {
            Ok(p.eval_chol(v)?.into_matrix())
        })
        .unwrap()
        .scale(1.0 / win.q);
        assert!((coarse.as_matrix() - &fine).max_abs() < 1e-9);
    }

    #[test]
    fn grid_interpolation_and_csv() {
        let knots = vec![0.0, 1.0];
        let values = vec![DenseMatrix::from_diag(&[1.0]), DenseMatrix::from_diag(&[3.0])];
        let g = CovariancePath::grid(knots, values).unwrap();
        assert!((g.eval(0.5).unwrap()[(0, 0)] - 2.0).abs() < 1e-15);

        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("grid.csv");
        std::fs::write(&f, "r,s11,s21,s22\n0.1,1,0,1\n0.9,2,0.5,1\n").unwrap();
        let g = CovariancePath::from_csv(&f).unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.kind(), PathKind::GridInterpolated);
        assert!((g.eval(0.5).unwrap()[(1, 0)] - 0.25).abs() < 1e-15);
        std::fs::write(&f, "0.1,1,0,1\n0.2,x,0,1\n").unwrap();
        assert!(matches!(CovariancePath::from_csv(&f), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn scaling_and_breaks() {
        let step = CovariancePath::scalar_piecewise(vec![0.5], &[1.0, 4.0]).unwrap();
        let s2 = step.scaled(3.0).unwrap();
        assert_eq!(s2.eval(0.7).unwrap()[(0, 0)], 12.0);
        assert_eq!(step.breaks_in(&w(0.5, 0.5)), vec![0.5]);
        assert!(step.breaks_in(&w(0.3, 0.2)).is_empty());
    }
}
