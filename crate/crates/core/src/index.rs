//! Variance-variability indices `i_{r,q}` and `j_{r,q}` and the estimator `î_{r,q}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::covpath::{CovariancePath, WindowSpec};
use crate::error::{Error, Result};
use crate::estimation::{corrected_cov_path_from, ols_fit, realized_cov_from, KernelFn, OuterProducts};
use crate::matrix::{cholesky_lower, sym_eigen, DenseMatrix, LowerTriangular};

/// Distance from the lower bound under which a report is flagged as boundary.
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    /// `‖H̄⁻¹H̃‖²₂`
    I,
    /// `‖q⁻¹∫_w Σ − H̄H̄′‖²₂`
    J,
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexKind::I => "i",
            IndexKind::J => "j",
        })
    }
}

impl FromStr for IndexKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "I" => Ok(IndexKind::I),
            "j" | "J" => Ok(IndexKind::J),
            other => Err(Error::Config(format!("unknown index '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub which: IndexKind,
    pub r: f64,
    pub q: f64,
    pub value: f64,
    /// Gap between the two largest eigenvalues; `None` when d = 1.
    pub eigen_gap: Option<f64>,
    pub boundary_flag: bool,
}

impl IndexReport {
    pub fn window(&self) -> Result<WindowSpec> {
        WindowSpec::new(self.r, self.q)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Eigenvalues of `H̃′H̄⁻ᵀH̄⁻¹H̃`, ascending.
pub fn relative_eigenvalues(h_tilde: &LowerTriangular, h_bar: &LowerTriangular) -> Result<Vec<f64>> {
    let m = &h_bar.inverse() * h_tilde.as_matrix();
    let (vals, _) = sym_eigen(&(&m.transpose() * &m).symmetrize()?)?;
    Ok(vals)
}

fn report_from_eigs(which: IndexKind, w: &WindowSpec, vals: &[f64], bound: f64) -> IndexReport {
    let n = vals.len();
    let value = vals[n - 1];
    IndexReport {
        which,
        r: w.r,
        q: w.q,
        value,
        eigen_gap: (n > 1).then(|| vals[n - 1] - vals[n - 2]),
        boundary_flag: (value - bound).abs() < BOUNDARY_TOL,
    }
}

/// `i` from the two factors.
pub fn index_from_factors(w: &WindowSpec, h_tilde: &LowerTriangular, h_bar: &LowerTriangular) -> Result<IndexReport> {
    let vals = relative_eigenvalues(h_tilde, h_bar)?;
    Ok(report_from_eigs(IndexKind::I, w, &vals, 1.0))
}

/// `j` from the window mean covariance and `H̄`.
pub fn j_from_parts(w: &WindowSpec, mean_cov: &DenseMatrix, h_bar: &LowerTriangular) -> Result<IndexReport> {
    let gap = (mean_cov - &h_bar.outer()).symmetrize()?;
    let (vals, _) = sym_eigen(&gap)?;
    let mut sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
    sq.sort_by(f64::total_cmp);
    Ok(report_from_eigs(IndexKind::J, w, &sq, 0.0))
}

/// Population index from a covariance path, by quadrature.
pub fn theoretical_index(path: &CovariancePath, w: &WindowSpec, which: IndexKind) -> Result<IndexReport> {
    let mean_cov = path.integrate_cov(w)?;
    let h_bar = path.integrate_chol(w)?;
    match which {
        IndexKind::I => index_from_factors(w, &cholesky_lower(&mean_cov)?, &h_bar),
        IndexKind::J => j_from_parts(w, &mean_cov, &h_bar),
    }
}

/// `î = ‖H̄̂⁻¹Ĥ̃‖²₂` from least-squares residuals, the realized window covariance and
/// the corrected covariance path with bandwidth `h` and kernel `kernel`.
pub fn index_estimate(data: &DenseMatrix, p: usize, w: &WindowSpec, h: f64, kernel: KernelFn) -> Result<IndexReport> {
    let fit = ols_fit(data, p)?;
    let outer = OuterProducts::from_residuals(&fit.residuals, p);
    index_estimate_from(&outer, w, h, kernel)
}

pub fn index_estimate_from(outer: &OuterProducts, w: &WindowSpec, h: f64, kernel: KernelFn) -> Result<IndexReport> {
    let h_tilde = cholesky_lower(&realized_cov_from(outer, w)?)?;
    let h_bar = corrected_cov_path_from(outer, w, h, kernel)?.average();
    index_from_factors(w, &h_tilde, &h_bar)
}
