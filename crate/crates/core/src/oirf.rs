//! Orthogonal impulse responses (standard, pointwise, approximated, averaged),
//! their population targets and delta-method covariances.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::covpath::{CovariancePath, WindowSpec};
use crate::error::{Error, Result};
use crate::estimation::{
    als_fit, corrected_cov_path_from, floor_index, kernel_cov_from, ols_fit, realized_cov_from, AlsFit,
    CorrectedPath, KernelFit, KernelFn, KernelSpec, OlsFit, OuterProducts,
};
use crate::matrix::{
    cholesky_differential_from_factor, cholesky_lower, commutation, elimination, vec, DenseMatrix,
    LowerTriangular,
};
use crate::var::VarModel;

/// Relative size of the last retained `‖Φ̃_n‖²_F` in the Λ sums.
pub const TRUNCATION_TOL: f64 = 1e-12;
const MAX_TRUNCATION: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `Φ_i C(∫₀¹ Σ)`
    Standard,
    /// `Φ_i H(r)`
    Pointwise,
    /// `Φ_i C(q⁻¹∫_w Σ)` with least-squares `Φ_i`
    ApproximatedOls,
    /// `Φ_i C(q⁻¹∫_w Σ)` with adaptive least-squares `Φ_i`
    ApproximatedAls,
    /// `Φ_i q⁻¹∫_w H`
    Averaged,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Pointwise => "pointwise",
            Variant::ApproximatedOls => "approximated-ols",
            Variant::ApproximatedAls => "approximated-als",
            Variant::Averaged => "averaged",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "standard" => Ok(Variant::Standard),
            "pointwise" | "tv" => Ok(Variant::Pointwise),
            "approximated-ols" | "approximated" | "approx-ols" => Ok(Variant::ApproximatedOls),
            "approximated-als" | "approx-als" => Ok(Variant::ApproximatedAls),
            "averaged" => Ok(Variant::Averaged),
            other => Err(Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

/// Responses `θ(0), …, θ(n)` with an optional asymptotic covariance of
/// `√T vec(θ̂(i) − θ(i))` per horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct OirfCurve {
    pub variant: Variant,
    pub r: Option<f64>,
    pub q: Option<f64>,
    pub values: Vec<DenseMatrix>,
    pub covariance: Option<Vec<DenseMatrix>>,
    pub sample_size: Option<usize>,
    pub flags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    variant: Variant,
    r: Option<f64>,
    q: Option<f64>,
    horizons: Vec<usize>,
    values: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stderr: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_size: Option<usize>,
    #[serde(default)]
    flags: Vec<String>,
}

impl OirfCurve {
    pub fn new(variant: Variant, values: Vec<DenseMatrix>) -> Self {
        Self { variant, r: None, q: None, values, covariance: None, sample_size: None, flags: Vec::new() }
    }

    fn at(mut self, r: Option<f64>, q: Option<f64>) -> Self {
        self.r = r;
        self.q = q;
        self
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.values[0].rows()
    }

    /// Standard errors `√(diag(V_i)/T)` arranged as d × d matrices.
    pub fn stderr(&self) -> Option<Vec<DenseMatrix>> {
        let cov = self.covariance.as_ref()?;
        let t = self.sample_size? as f64;
        let d = self.dim();
        Some(
            cov.iter()
                .map(|v| {
                    let mut m = DenseMatrix::zeros(d, d);
                    for col in 0..d {
                        for row in 0..d {
                            let k = col * d + row;
                            m[(row, col)] = (v[(k, k)].max(0.0) / t).sqrt();
                        }
                    }
                    m
                })
                .collect(),
        )
    }

    /// Pointwise Gaussian bands at coverage `level`.
    pub fn bands(&self, level: f64) -> Option<Vec<(DenseMatrix, DenseMatrix)>> {
        if !(level > 0.0 && level < 1.0) {
            return None;
        }
        let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
        let se = self.stderr()?;
        Some(
            self.values
                .iter()
                .zip(&se)
                .map(|(v, s)| (v - &s.scale(z), v + &s.scale(z)))
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CurveJson {
            variant: self.variant,
            r: self.r,
            q: self.q,
            horizons: (0..self.values.len()).collect(),
            values: self.values.iter().map(DenseMatrix::to_rows).collect(),
            stderr: self.stderr().map(|s| s.iter().map(DenseMatrix::to_rows).collect()),
            sample_size: self.sample_size,
            flags: self.flags.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Reads values (and standard errors, discarded) back from [`OirfCurve::to_json`] output.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CurveJson = serde_json::from_str(text)?;
        let values = doc
            .values
            .iter()
            .map(|rows| {
                let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
                let d = refs.len();
                DenseMatrix::new(d, refs.first().map_or(0, |r| r.len()), refs.concat())
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Parse { line: 0, message: "curve without values".into() });
        }
        let mut c = OirfCurve::new(doc.variant, values).at(doc.r, doc.q);
        c.sample_size = doc.sample_size;
        c.flags = doc.flags;
        Ok(c)
    }

    /// Long-form CSV: `horizon,row,col,value,stderr` (1-based row/col).
    pub fn to_csv(&self) -> Result<String> {
        let se = self.stderr();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["horizon", "row", "col", "value", "stderr"])?;
        for (h, v) in self.values.iter().enumerate() {
            for row in 0..v.rows() {
                for col in 0..v.cols() {
                    let s = se.as_ref().map(|s| fmt_f64(s[h][(row, col)])).unwrap_or_default();
                    w.write_record([h.to_string(), (row + 1).to_string(), (col + 1).to_string(), fmt_f64(v[(row, col)]), s])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("ascii csv"))
    }

    /// Values from [`OirfCurve::to_csv`] output.
    pub fn values_from_csv(text: &str) -> Result<Vec<DenseMatrix>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut cells: Vec<(usize, usize, usize, f64)> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let bad = |m: &str| Error::Parse { line, message: m.to_string() };
            let h = rec[0].parse().map_err(|_| bad("horizon"))?;
            let i: usize = rec[1].parse().map_err(|_| bad("row"))?;
            let j: usize = rec[2].parse().map_err(|_| bad("col"))?;
            let v = rec[3].parse().map_err(|_| bad("value"))?;
            cells.push((h, i, j, v));
        }
        let n = cells.iter().map(|c| c.0).max().ok_or_else(|| Error::Parse { line: 0, message: "empty curve".into() })?;
        let d = cells.iter().map(|c| c.1).max().unwrap_or(1);
        let mut out = vec![DenseMatrix::zeros(d, d); n + 1];
        for (h, i, j, v) in cells {
            out[h][(i - 1, j - 1)] = v;
        }
        Ok(out)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn apply_phi(phis: &[DenseMatrix], factor: &DenseMatrix) -> Vec<DenseMatrix> {
    phis.iter().map(|p| p * factor).collect()
}

/// Population responses for `variant`; the pointwise variant is evaluated at `w.r`.
pub fn theoretical_targets(
    model: &VarModel,
    path: &CovariancePath,
    variant: Variant,
    w: &WindowSpec,
    horizon: usize,
) -> Result<OirfCurve> {
    model.check_stable()?;
    let phis = model.ma_coefficients(horizon);
    let factor = match variant {
        Variant::Standard => {
            let full = path.integrate_unit(crate::covpath::QUAD_TOL, |s, _| Ok(s.clone()))?;
            cholesky_lower(&full)?.into_matrix()
        }
        Variant::Pointwise => path.eval_chol(w.r)?.into_matrix(),
        Variant::ApproximatedOls | Variant::ApproximatedAls => cholesky_lower(&path.integrate_cov(w)?)?.into_matrix(),
        Variant::Averaged => path.integrate_chol(w)?.into_matrix(),
    };
    let (r, q) = match variant {
        Variant::Standard => (None, None),
        Variant::Pointwise => (Some(w.r), None),
        _ => (Some(w.r), Some(w.q)),
    };
    let mut c = OirfCurve::new(variant, apply_phi(&phis, &factor)).at(r, q);
    c.flags = break_flags(path, w);
    Ok(c)
}

fn break_flags(path: &CovariancePath, w: &WindowSpec) -> Vec<String> {
    path.breaks_in(w)
        .into_iter()
        .map(|b| format!("window contains a covariance break at r = {b}"))
        .collect()
}

/// `∂vec(Φ_i)/∂ϑ′ = Σ_{m=0}^{i−1} J(𝔸′)^{i−1−m} ⊗ Φ_m` (zero for `i = 0`).
pub fn mean_jacobian(model: &VarModel, i: usize) -> DenseMatrix {
    let (d, p) = (model.dim(), model.lags());
    let mut out = DenseMatrix::zeros(d * d, p * d * d);
    if i == 0 {
        return out;
    }
    let comp = model.companion();
    let at = comp.matrix.transpose();
    let phis = model.ma_coefficients(i - 1);
    // J (𝔸′)^k for k = 0..i−1
    let mut powers = Vec::with_capacity(i);
    let mut cur = comp.selector();
    for _ in 0..i {
        powers.push(cur.clone());
        cur = &cur * &at;
    }
    for (m, phi) in phis.iter().enumerate() {
        out = &out + &powers[i - 1 - m].kron(phi);
    }
    out
}

/// `Ξ = L′[L(I + K)(H ⊗ I)L′]⁻¹`, the Jacobian of `vec C(S)` in `vech S`.
pub fn xi_matrix(h: &LowerTriangular) -> Result<DenseMatrix> {
    let d = h.dim();
    let l = elimination(d);
    let ik = &DenseMatrix::identity(d * d) + &commutation(d);
    let inner = &(&(&l * &ik) * &h.as_matrix().kron(&DenseMatrix::identity(d))) * &l.transpose();
    let inv = inner.inverse().map_err(|_| Error::SingularXi)?;
    Ok(&l.transpose() * &inv)
}

/// Fourth-moment input for `Ω` and `Ψ̄`.
#[derive(Clone, Copy, Debug)]
pub enum FourthMoment<'a> {
    /// `Var(vec uu′) = (I + K)(Σ ⊗ Σ)`.
    Gaussian,
    /// Window sums of centred residual outer products.
    Empirical(&'a EmpiricalMoments),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FourthMomentMode {
    #[default]
    Gaussian,
    Empirical,
}

/// Residual outer products centred at the local smoothed covariance.
#[derive(Clone, Debug)]
pub struct EmpiricalMoments {
    t_total: usize,
    first: usize,
    /// `vec(û_t û′_t − Σ̂_t)` for `t = first..=T`.
    centred: Vec<Vec<f64>>,
    local: Vec<LowerTriangular>,
}

impl EmpiricalMoments {
    pub fn new(outer: &OuterProducts, kfit: &KernelFit) -> Self {
        let first = outer.first();
        let t_total = outer.t_total();
        let centred = (first..=t_total).map(|t| vec(&(outer.get(t) - kfit.sigma_t(t)))).collect();
        let local = (first..=t_total).map(|t| kfit.chol[t - 1].clone()).collect();
        Self { t_total, first, centred, local }
    }

    fn window(&self, w: &WindowSpec) -> Result<std::ops::RangeInclusive<usize>> {
        let t = self.t_total as f64;
        let c = floor_index(w.r * t);
        let half = floor_index(w.q * t / 2.0);
        let (lo, hi) = (c - half, c + half);
        if lo < self.first as i64 || hi > self.t_total as i64 {
            return Err(Error::WindowOutOfRange { lo, hi, t: self.t_total });
        }
        Ok(lo as usize..=hi as usize)
    }
}

/// Population blocks behind the delta-method covariances.
#[derive(Clone, Debug)]
pub struct AsymptoticBlocks {
    pub lambda1: DenseMatrix,
    pub lambda2: DenseMatrix,
    pub lambda3: DenseMatrix,
    /// `Λ₃⁻¹Λ₂Λ₃⁻¹`
    pub ols_covariance: DenseMatrix,
    /// `Λ₁⁻¹`
    pub als_covariance: DenseMatrix,
    /// Limit covariance of `√T vech(Ŝ_T(r) − q⁻¹∫_w Σ)`: `q⁻² ∫_w Var(vech uu′)`.
    pub omega: DenseMatrix,
    /// Limit covariance of the linearized averaged factor, in `vec` coordinates:
    /// `q⁻² ∫_w Δ(Σ) Var(vec uu′) Δ(Σ)′`.
    pub psi_bar: DenseMatrix,
    pub h_tilde: LowerTriangular,
    pub h_bar: LowerTriangular,
    pub truncation: usize,
    pub window: WindowSpec,
    pub mode: FourthMomentMode,
    pub flags: Vec<String>,
}

/// `Φ̃_i = diag(Φ_i, Φ_{i−1}, …, Φ_{i−p+1})`, with `Φ_j = 0` for `j < 0`.
fn phi_tilde(phis: &[DenseMatrix], i: usize, d: usize, p: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(d * p, d * p);
    for l in 0..p {
        if i >= l {
            let src = &phis[i - l];
            for a in 0..d {
                for b in 0..d {
                    m[(l * d + a, l * d + b)] = src[(a, b)];
                }
            }
        }
    }
    m
}

/// Truncation order where `‖Φ̃_n‖²_F` drops below [`TRUNCATION_TOL`] relative to the running sum.
pub fn truncation_order(model: &VarModel) -> usize {
    let (d, p) = (model.dim(), model.lags());
    let mut n = 64;
    loop {
        let phis = model.ma_coefficients(n);
        let mut total = 0.0;
        for i in 0..=n {
            let f = phi_tilde(&phis, i, d, p).frobenius_norm().powi(2);
            total += f;
            if i + 1 >= p && f < TRUNCATION_TOL * total {
                return i;
            }
        }
        if n >= MAX_TRUNCATION {
            return n;
        }
        n *= 2;
    }
}

/// Computes `Λ₁, Λ₂, Λ₃`, `Ω` and `Ψ̄` for a model, a path and a window.
pub fn asymptotic_blocks(
    model: &VarModel,
    path: &CovariancePath,
    w: &WindowSpec,
    truncation: Option<usize>,
    moments: FourthMoment<'_>,
) -> Result<AsymptoticBlocks> {
    model.check_stable()?;
    let (d, p) = (model.dim(), model.lags());
    if path.dim() != d {
        return Err(Error::ShapeMismatch(format!("path of dimension {} for a {d}-variate model", path.dim())));
    }
    let n = truncation.unwrap_or_else(|| truncation_order(model));
    let phis = model.ma_coefficients(n);
    let tildes: Vec<DenseMatrix> = (0..=n).map(|i| phi_tilde(&phis, i, d, p)).collect();
    let ones = DenseMatrix::from_vec(p, p, vec![1.0; p * p]);
    let g_of = |s: &DenseMatrix| -> DenseMatrix {
        let b = ones.kron(s);
        let mut g = DenseMatrix::zeros(d * p, d * p);
        for ft in &tildes {
            g = &g + &(&(ft * &b) * &ft.transpose());
        }
        g
    };
    let tol = 1e-10;
    let g_int = path.integrate_unit(tol, |s, _| Ok(g_of(s)))?;
    let lambda3 = g_int.kron(&DenseMatrix::identity(d));
    let lambda2 = path.integrate_unit(tol, |s, _| Ok(g_of(s).kron(s)))?;
    let lambda1 = path.integrate_unit(tol, |s, h| {
        let hi = h.inverse();
        Ok(g_of(s).kron(&(&hi.transpose() * &hi)))
    })?;
    let l3i = lambda3.spd_inverse()?;
    let ols_covariance = (&(&l3i * &lambda2) * &l3i).symmetrize()?;
    let als_covariance = lambda1.spd_inverse()?.symmetrize()?;

    let h_tilde = cholesky_lower(&path.integrate_cov(w)?)?;
    let h_bar = path.integrate_chol(w)?;
    let l = elimination(d);
    let ik = &DenseMatrix::identity(d * d) + &commutation(d);
    let (omega, psi_bar, mode) = match moments {
        FourthMoment::Gaussian => {
            let omega = path
                .window_average(w, |s, _| Ok(&(&(&l * &ik) * &s.kron(s)) * &l.transpose()))?
                .scale(1.0 / w.q);
            let psi = path
                .window_average(w, |s, h| {
                    let delta = cholesky_differential_from_factor(h);
                    Ok(&(&(&delta * &ik) * &s.kron(s)) * &delta.transpose())
                })?
                .scale(1.0 / w.q);
            (omega, psi, FourthMomentMode::Gaussian)
        }
        FourthMoment::Empirical(em) => {
            let range = em.window(w)?;
            let mut omega = DenseMatrix::zeros(d * (d + 1) / 2, d * (d + 1) / 2);
            let mut psi = DenseMatrix::zeros(d * d, d * d);
            for t in range {
                let e = &em.centred[t - em.first];
                let col = DenseMatrix::from_vec(d * d, 1, e.clone());
                let z = &l * &col;
                omega = &omega + &(&z * &z.transpose());
                let dz = &cholesky_differential_from_factor(&em.local[t - em.first]) * &col;
                psi = &psi + &(&dz * &dz.transpose());
            }
            let scale = 1.0 / (w.q * w.q * em.t_total as f64);
            (omega.scale(scale), psi.scale(scale), FourthMomentMode::Empirical)
        }
    };
    Ok(AsymptoticBlocks {
        lambda1,
        lambda2,
        lambda3,
        ols_covariance,
        als_covariance,
        omega,
        psi_bar,
        h_tilde,
        h_bar,
        truncation: n,
        window: *w,
        mode,
        flags: break_flags(path, w),
    })
}

/// Asymptotic covariance of `√T vec(θ̂(i) − θ(i))`.
///
/// * approximated-ols: `C_i Λ₃⁻¹Λ₂Λ₃⁻¹ C_i′ + D_i Ω D_i′`
/// * approximated-als: `C_i Λ₁⁻¹ C_i′ + D_i Ω D_i′`
/// * averaged: `C̄_i Λ₁⁻¹ C̄_i′ + (I ⊗ Φ_i) Ψ̄ (I ⊗ Φ_i)′`
///
/// with `C_i = (H̃′ ⊗ I) ∂vec(Φ_i)/∂ϑ′`, `C̄_i` the same with `H̄′`, and
/// `D_i = (I ⊗ Φ_i) Ξ(H̃)`.
pub fn oirf_variance(blocks: &AsymptoticBlocks, model: &VarModel, i: usize, variant: Variant) -> Result<DenseMatrix> {
    let d = model.dim();
    let phi = model.ma_coefficients(i).pop().expect("horizon i");
    let i_phi = DenseMatrix::identity(d).kron(&phi);
    let jac = mean_jacobian(model, i);
    let id = DenseMatrix::identity(d);
    let out = match variant {
        Variant::ApproximatedOls | Variant::ApproximatedAls => {
            let c = &blocks.h_tilde.transpose().kron(&id) * &jac;
            let v = if variant == Variant::ApproximatedOls { &blocks.ols_covariance } else { &blocks.als_covariance };
            let dmat = &i_phi * &xi_matrix(&blocks.h_tilde)?;
            &(&(&c * v) * &c.transpose()) + &(&(&dmat * &blocks.omega) * &dmat.transpose())
        }
        Variant::Averaged => {
            let c = &blocks.h_bar.transpose().kron(&id) * &jac;
            &(&(&c * &blocks.als_covariance) * &c.transpose()) + &(&(&i_phi * &blocks.psi_bar) * &i_phi.transpose())
        }
        Variant::Standard | Variant::Pointwise => {
            return Err(Error::Config(format!("no parametric-rate covariance for the {variant} variant")))
        }
    };
    out.symmetrize()
}

/// Options shared by the data-driven estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Smoother for `Σ̂_t` (ALS weights and plug-in paths).
    pub spec: KernelSpec,
    /// Kernel `L` of the corrected covariance path.
    pub corrected_kernel: KernelFn,
    /// Attach plug-in asymptotic covariances.
    pub covariance: bool,
    pub fourth_moment: FourthMomentMode,
    pub truncation: Option<usize>,
}

impl EstimateOptions {
    pub fn for_sample(t: usize) -> Self {
        Self {
            spec: KernelSpec::rule_of_thumb(t),
            corrected_kernel: KernelFn::Epanechnikov,
            covariance: false,
            fourth_moment: FourthMomentMode::Gaussian,
            truncation: None,
        }
    }

    pub fn with_covariance(mut self, mode: FourthMomentMode) -> Self {
        self.covariance = true;
        self.fourth_moment = mode;
        self
    }
}

/// Everything estimated once for a window: fits, `Ŝ_T(r)`, `Ĥ̃`, the corrected path and `H̄̂`.
#[derive(Clone, Debug)]
pub struct WindowEstimates {
    pub window: WindowSpec,
    pub h: Option<f64>,
    pub ols: OlsFit,
    pub kernel: KernelFit,
    pub als: AlsFit,
    pub s_hat: DenseMatrix,
    pub h_tilde_hat: LowerTriangular,
    pub corrected: Option<CorrectedPath>,
    pub h_bar_hat: Option<LowerTriangular>,
    outer: OuterProducts,
    options: EstimateOptions,
}

impl WindowEstimates {
    /// Fits everything needed for the window; `h = None` skips the corrected path.
    pub fn fit(data: &DenseMatrix, p: usize, w: &WindowSpec, h: Option<f64>, options: &EstimateOptions) -> Result<Self> {
        let ols = ols_fit(data, p)?;
        let outer = OuterProducts::from_residuals(&ols.residuals, p);
        let kernel = kernel_cov_from(&outer, &options.spec)?;
        let als = als_fit(data, p, &kernel)?;
        let s_hat = realized_cov_from(&outer, w)?;
        let h_tilde_hat = cholesky_lower(&s_hat)?;
        let corrected = match h {
            Some(h) => Some(corrected_cov_path_from(&outer, w, h, options.corrected_kernel)?),
            None => None,
        };
        let h_bar_hat = corrected.as_ref().map(CorrectedPath::average);
        Ok(Self { window: *w, h, ols, kernel, als, s_hat, h_tilde_hat, corrected, h_bar_hat, outer, options: options.clone() })
    }

    pub fn sample_size(&self) -> usize {
        self.ols.sample_size()
    }

    fn model_for(&self, variant: Variant) -> &VarModel {
        match variant {
            Variant::Standard | Variant::ApproximatedOls => &self.ols.model,
            _ => &self.als.model,
        }
    }

    /// The point estimate `Φ̂_i · factor` for a windowed variant.
    pub fn curve(&self, variant: Variant, horizon: usize) -> Result<OirfCurve> {
        let factor = match variant {
            Variant::ApproximatedOls | Variant::ApproximatedAls => self.h_tilde_hat.as_matrix().clone(),
            Variant::Averaged => self
                .h_bar_hat
                .as_ref()
                .ok_or_else(|| Error::Config("averaged variant needs a bandwidth h".into()))?
                .as_matrix()
                .clone(),
            Variant::Pointwise => self.kernel.chol_at(self.window.r).as_matrix().clone(),
            Variant::Standard => {
                let n = self.sample_size() - self.ols.lags();
                let mut s = DenseMatrix::zeros(self.ols.dim(), self.ols.dim());
                for t in self.outer.first()..=self.outer.t_total() {
                    s = &s + self.outer.get(t);
                }
                cholesky_lower(&s.scale(1.0 / n as f64))?.into_matrix()
            }
        };
        let phis = self.model_for(variant).ma_coefficients(horizon);
        let (r, q) = match variant {
            Variant::Standard => (None, None),
            Variant::Pointwise => (Some(self.window.r), None),
            _ => (Some(self.window.r), Some(self.window.q)),
        };
        let mut c = OirfCurve::new(variant, apply_phi(&phis, &factor)).at(r, q);
        c.sample_size = Some(self.sample_size());
        if self.options.covariance && !matches!(variant, Variant::Standard | Variant::Pointwise) {
            let blocks = self.plugin_blocks(variant)?;
            c.flags.extend(blocks.flags.iter().cloned());
            let model = self.model_for(variant);
            c.covariance = Some((0..=horizon).map(|i| oirf_variance(&blocks, model, i, variant)).collect::<Result<_>>()?);
        }
        Ok(c)
    }

    /// Plug-in blocks from the fitted model and the kernel-smoothed path.
    pub fn plugin_blocks(&self, variant: Variant) -> Result<AsymptoticBlocks> {
        let path = self.kernel.to_path()?;
        let em;
        let moments = match self.options.fourth_moment {
            FourthMomentMode::Gaussian => FourthMoment::Gaussian,
            FourthMomentMode::Empirical => {
                em = EmpiricalMoments::new(&self.outer, &self.kernel);
                FourthMoment::Empirical(&em)
            }
        };
        asymptotic_blocks(self.model_for(variant), &path, &self.window, self.options.truncation, moments)
    }
}

/// Pointwise response `Φ̂_i^{als} Ĥ_{[rT]}` (no covariance: nonparametric rate).
pub fn tv_oirf_estimate(data: &DenseMatrix, p: usize, spec: &KernelSpec, r: f64, horizon: usize) -> Result<OirfCurve> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Config(format!("r = {r} outside (0, 1]")));
    }
    let ols = ols_fit(data, p)?;
    let outer = OuterProducts::from_residuals(&ols.residuals, p);
    let kernel = kernel_cov_from(&outer, spec)?;
    let als = als_fit(data, p, &kernel)?;
    let phis = als.model.ma_coefficients(horizon);
    let mut c = OirfCurve::new(Variant::Pointwise, apply_phi(&phis, kernel.chol_at(r).as_matrix())).at(Some(r), None);
    c.sample_size = Some(data.rows());
    Ok(c)
}

/// Least-squares or adaptive least-squares mean for the approximated response.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanEstimator {
    Ols,
    Als,
}

/// `Φ̂_i C(Ŝ_T(r))`.
pub fn approx_oirf_estimate(
    data: &DenseMatrix,
    p: usize,
    w: &WindowSpec,
    horizon: usize,
    mean: MeanEstimator,
    options: &EstimateOptions,
) -> Result<OirfCurve> {
    let variant = match mean {
        MeanEstimator::Ols => Variant::ApproximatedOls,
        MeanEstimator::Als => Variant::ApproximatedAls,
    };
    WindowEstimates::fit(data, p, w, None, options)?.curve(variant, horizon)
}

/// `Φ̂_i^{als} H̄̂(r)` with `H̄̂` the average of the corrected-path Cholesky factors.
pub fn averaged_oirf_estimate(
    data: &DenseMatrix,
    p: usize,
    w: &WindowSpec,
    h: f64,
    horizon: usize,
    options: &EstimateOptions,
) -> Result<OirfCurve> {
    WindowEstimates::fit(data, p, w, Some(h), options)?.curve(Variant::Averaged, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covpath::ShapeFn;
    use crate::matrix::{min_eigenvalue, rel_frobenius, vech};
    use crate::var::benchmark_model;

    fn ar1(a: f64) -> VarModel {
        VarModel::var1(DenseMatrix::from_diag(&[a])).unwrap()
    }

    #[test]
    fn variants_collapse_on_constant_path() {
        let s = DenseMatrix::from_rows(&[&[1.0, 0.3], &[0.3, 0.5]]);
        let path = CovariancePath::constant(s).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let m = benchmark_model();
        let base = theoretical_targets(&m, &path, Variant::Standard, &w, 4).unwrap();
        for v in [Variant::Pointwise, Variant::ApproximatedAls, Variant::Averaged] {
            let c = theoretical_targets(&m, &path, v, &w, 4).unwrap();
            for (a, b) in c.values.iter().zip(&base.values) {
                assert!((a - b).max_abs() < 1e-9);
            }
        }
        assert!(base.values[0].is_lower_triangular());
    }

    #[test]
    fn scalar_step_targets() {
        let path = CovariancePath::scalar_piecewise(vec![0.5], &[1.0, 4.0]).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let m = ar1(0.6);
        let avg = theoretical_targets(&m, &path, Variant::Averaged, &w, 1).unwrap();
        let apx = theoretical_targets(&m, &path, Variant::ApproximatedOls, &w, 1).unwrap();
        assert!((avg.values[1][(0, 0)] - 0.6 * 1.5).abs() < 1e-10);
        assert!((apx.values[1][(0, 0)] - 0.6 * 2.5f64.sqrt()).abs() < 1e-10);
        assert_eq!(avg.flags.len(), 1);
    }

    #[test]
    fn ar1_blocks_close_to_textbook() {
        let a = 0.6;
        let sigma2 = 2.0;
        let path = CovariancePath::constant(DenseMatrix::from_diag(&[sigma2])).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let b = asymptotic_blocks(&ar1(a), &path, &w, None, FourthMoment::Gaussian).unwrap();
        assert!((b.lambda2[(0, 0)] - sigma2 * sigma2 / (1.0 - a * a)).abs() < 1e-9);
        assert!((b.lambda3[(0, 0)] - sigma2 / (1.0 - a * a)).abs() < 1e-9);
        assert!((b.ols_covariance[(0, 0)] - (1.0 - a * a)).abs() < 1e-9);
        assert!((b.als_covariance[(0, 0)] - (1.0 - a * a)).abs() < 1e-9);
        // Ω = q⁻¹·2σ⁴ for a scalar Gaussian window
        assert!((b.omega[(0, 0)] - 2.0 * sigma2 * sigma2 / w.q).abs() < 1e-9);
    }

    #[test]
    fn scalar_variance_is_delta_method_for_sqrt() {
        let sigma2 = 2.25;
        let path = CovariancePath::constant(DenseMatrix::from_diag(&[sigma2])).unwrap();
        let w = WindowSpec::new(0.5, 0.4).unwrap();
        let m = ar1(0.3);
        let b = asymptotic_blocks(&m, &path, &w, None, FourthMoment::Gaussian).unwrap();
        let xi = xi_matrix(&b.h_tilde).unwrap();
        assert!((xi[(0, 0)] - 1.0 / (2.0 * 1.5)).abs() < 1e-14);
        let v0 = oirf_variance(&b, &m, 0, Variant::ApproximatedAls).unwrap();
        assert!((v0[(0, 0)] - b.omega[(0, 0)] / (4.0 * sigma2)).abs() < 1e-12);
        // averaged and approximated coincide on a constant path
        for i in 0..4 {
            let a = oirf_variance(&b, &m, i, Variant::ApproximatedAls).unwrap();
            let v = oirf_variance(&b, &m, i, Variant::Averaged).unwrap();
            assert!((a[(0, 0)] - v[(0, 0)]).abs() < 1e-10);
        }
    }

    #[test]
    fn efficiency_gap_is_psd() {
        let path = CovariancePath::benchmark(1.0, ShapeFn::Sin).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let b = asymptotic_blocks(&benchmark_model(), &path, &w, None, FourthMoment::Gaussian).unwrap();
        let gap = &b.ols_covariance - &b.als_covariance;
        assert!(min_eigenvalue(&gap).unwrap() >= -1e-8);
        assert!(gap.frobenius_norm() > 1e-4);
        let flat = CovariancePath::benchmark(0.0, ShapeFn::Sin).unwrap();
        let b0 = asymptotic_blocks(&benchmark_model(), &flat, &w, None, FourthMoment::Gaussian).unwrap();
        assert!((&b0.ols_covariance - &b0.als_covariance).frobenius_norm() < 1e-8);
    }

    #[test]
    fn truncation_is_self_consistent() {
        let path = CovariancePath::benchmark(1.0, ShapeFn::Sin).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let m = benchmark_model();
        let n = truncation_order(&m);
        let a = asymptotic_blocks(&m, &path, &w, Some(n), FourthMoment::Gaussian).unwrap();
        let b = asymptotic_blocks(&m, &path, &w, Some(2 * n), FourthMoment::Gaussian).unwrap();
        assert!(rel_frobenius(&a.lambda2, &b.lambda2) < 1e-10);
        assert!(rel_frobenius(&a.lambda1, &b.lambda1) < 1e-10);
    }

    #[test]
    fn xi_inverts_bracket() {
        let h = cholesky_lower(&DenseMatrix::from_rows(&[&[4.0, 2.0, 0.5], &[2.0, 5.0, 1.0], &[0.5, 1.0, 3.0]])).unwrap();
        let d = 3;
        let l = elimination(d);
        let ik = &DenseMatrix::identity(d * d) + &commutation(d);
        let bracket = &(&(&l * &ik) * &h.as_matrix().kron(&DenseMatrix::identity(d))) * &l.transpose();
        let prod = &(&l * &xi_matrix(&h).unwrap()) * &bracket;
        assert!(rel_frobenius(&prod, &DenseMatrix::identity(6)) < 1e-12);
    }

    #[test]
    fn mean_jacobian_matches_finite_differences() {
        let a1 = DenseMatrix::from_rows(&[&[0.4, 0.1], &[-0.2, 0.3]]);
        let a2 = DenseMatrix::from_rows(&[&[0.1, 0.0], &[0.05, -0.1]]);
        let m = VarModel::new(vec![a1, a2]).unwrap();
        let theta = m.theta();
        for i in 0..5 {
            let jac = mean_jacobian(&m, i);
            let eps = 1e-6;
            for k in 0..theta.len() {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[k] += eps;
                tm[k] -= eps;
                let fp = vec(&VarModel::from_theta(&tp, 2, 2).unwrap().ma_coefficients(i)[i]);
                let fm = vec(&VarModel::from_theta(&tm, 2, 2).unwrap().ma_coefficients(i)[i]);
                for r in 0..4 {
                    let fd = (fp[r] - fm[r]) / (2.0 * eps);
                    assert!((fd - jac[(r, k)]).abs() < 1e-7, "i={i} k={k} r={r}");
                }
            }
        }
    }

    #[test]
    fn curve_serialization_round_trip() {
        let path = CovariancePath::benchmark(1.0, ShapeFn::Sin).unwrap();
        let w = WindowSpec::new(0.5, 0.5).unwrap();
        let c = theoretical_targets(&benchmark_model(), &path, Variant::Averaged, &w, 3).unwrap();
        let back = OirfCurve::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back.values, c.values);
        let vals = OirfCurve::values_from_csv(&c.to_csv().unwrap()).unwrap();
        assert_eq!(vals, c.values);
        assert!(vech(&c.values[0]).is_ok());
    }
}
