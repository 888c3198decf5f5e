use super::kernel::KernelFit;
use super::ols::{check_gram, regressor, residuals_for, stacked};
use crate::error::{Error, Result};
use crate::matrix::{ivec, vec, DenseMatrix};
use crate::var::VarModel;

/// Generalized least-squares fit weighted by smoothed covariances.
#[derive(Clone, Debug)]
pub struct AlsFit {
    pub theta: Vec<f64>,
    pub model: VarModel,
    pub residuals: DenseMatrix,
    /// `T⁻¹ Σ_t X̃_{t−1} X̃′_{t−1} ⊗ Σ̂_t⁻¹`.
    pub information: DenseMatrix,
}

/// `ϑ̂ = [Σ X̃X̃′ ⊗ Σ̂_t⁻¹]⁻¹ vec(Σ Σ̂_t⁻¹ X_t X̃′)`, sums over `t = p+1..T`.
pub fn als_fit(data: &DenseMatrix, p: usize, kfit: &KernelFit) -> Result<AlsFit> {
    let weights: Vec<DenseMatrix> = kfit
        .chol
        .iter()
        .map(|h| {
            let li = h.inverse();
            &li.transpose() * &li
        })
        .collect();
    als_with_weights(data, p, &weights)
}

/// Weighted least squares with explicit inverse covariances `Σ̃_t⁻¹`, `t = 1..T`.
pub fn als_with_weights(data: &DenseMatrix, p: usize, inv_sigma: &[DenseMatrix]) -> Result<AlsFit> {
    let (t_total, d) = (data.rows(), data.cols());
    if p == 0 {
        return Err(Error::Config("lag order must be at least 1".into()));
    }
    if t_total < p * d * d + 1 + p {
        return Err(Error::TooShort(format!(
            "T = {t_total} is too short for {} coefficients",
            p * d * d
        )));
    }
    if inv_sigma.len() != t_total {
        return Err(Error::ShapeMismatch(format!(
            "{} weight matrices for {t_total} observations",
            inv_sigma.len()
        )));
    }
    let k = d * p;
    let n = k * d;
    let mut info = DenseMatrix::zeros(n, n);
    let mut rhs = DenseMatrix::zeros(d, k);
    for s in p..t_total {
        let x = regressor(data, p, s);
        let w = &inv_sigma[s];
        let wy = w.mul_vec(data.row(s))?;
        for a in 0..k {
            for i in 0..d {
                rhs[(i, a)] += wy[i] * x[a];
            }
        }
        // (x x′) ⊗ W
        for a in 0..k {
            for b in 0..k {
                let xx = x[a] * x[b];
                if xx == 0.0 {
                    continue;
                }
                for i in 0..d {
                    for j in 0..d {
                        info[(a * d + i, b * d + j)] += xx * w[(i, j)];
                    }
                }
            }
        }
    }
    check_gram(&info, Error::SingularWeightedDesign)?;
    let rhs_vec = vec(&rhs);
    let sol = info
        .solve(&DenseMatrix::from_vec(n, 1, rhs_vec))
        .map_err(|_| Error::SingularWeightedDesign)?;
    let theta = sol.as_slice().to_vec();
    let model = VarModel::from_theta(&theta, d, p)?;
    let a = ivec(&theta, d, k)?;
    debug_assert_eq!(a, stacked(&model));
    let residuals = residuals_for(data, &a, p);
    Ok(AlsFit { theta, model, residuals, information: info.scale(1.0 / t_total as f64) })
}
