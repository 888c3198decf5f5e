use crate::error::{Error, Result};
use crate::matrix::{sym_eigen, vec, DenseMatrix};
use crate::var::VarModel;

/// Smallest accepted ratio of extreme eigenvalues of the regressor Gram matrix.
pub const DESIGN_RCOND: f64 = 1e-13;

/// Least-squares fit of a VAR(p).
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub theta: Vec<f64>,
    pub model: VarModel,
    /// T × d; rows `0..p` are zero and never used.
    pub residuals: DenseMatrix,
    /// `Σ_t X̃_{t−1} X̃′_{t−1}` over `t = p+1..T`.
    pub gram: DenseMatrix,
    data: DenseMatrix,
}

impl OlsFit {
    pub fn sample_size(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn lags(&self) -> usize {
        self.model.lags()
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }

    /// Residual `û_t` for 1-based `t > p`.
    pub fn residual(&self, t: usize) -> &[f64] {
        self.residuals.row(t - 1)
    }
}

/// Stacked regressor `X̃_{t−1} = (X′_{t−1}, …, X′_{t−p})′` for 0-based row `s ≥ p`.
pub fn regressor(data: &DenseMatrix, p: usize, s: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(p * data.cols());
    for l in 1..=p {
        out.extend_from_slice(data.row(s - l));
    }
    out
}

pub(crate) fn check_gram(g: &DenseMatrix, err: Error) -> Result<()> {
    let (vals, _) = sym_eigen(g)?;
    let top = *vals.last().expect("non-empty");
    if !(top > 0.0) || vals[0] <= DESIGN_RCOND * top {
        return Err(err);
    }
    Ok(())
}

/// `Â = (Σ X_t X̃′_{t−1})(Σ X̃_{t−1} X̃′_{t−1})⁻¹`, `ϑ̂ = vec(Â)`.
pub fn ols_fit(data: &DenseMatrix, p: usize) -> Result<OlsFit> {
    let (t, d) = (data.rows(), data.cols());
    if p == 0 {
        return Err(Error::Config("lag order must be at least 1".into()));
    }
    if t <= d * p + 10 {
        return Err(Error::TooShort(format!("T = {t} needs to exceed d·p + 10 = {}", d * p + 10)));
    }
    let k = d * p;
    let mut gram = DenseMatrix::zeros(k, k);
    let mut cross = DenseMatrix::zeros(d, k);
    for s in p..t {
        let x = regressor(data, p, s);
        let y = data.row(s);
        for a in 0..k {
            for b in 0..k {
                gram[(a, b)] += x[a] * x[b];
            }
            for i in 0..d {
                cross[(i, a)] += y[i] * x[a];
            }
        }
    }
    check_gram(&gram, Error::SingularDesign)?;
    // Â′ = G⁻¹ (Σ X̃ X′)
    let a_t = gram.solve(&cross.transpose()).map_err(|_| Error::SingularDesign)?;
    let a = a_t.transpose();
    let theta = vec(&a);
    let model = VarModel::from_theta(&theta, d, p)?;
    let residuals = residuals_for(data, &a, p);
    Ok(OlsFit { theta, model, residuals, gram, data: data.clone() })
}

/// `û_t = X_t − Â X̃_{t−1}` with `Â` the stacked d × pd coefficient matrix.
pub(crate) fn residuals_for(data: &DenseMatrix, a: &DenseMatrix, p: usize) -> DenseMatrix {
    let (t, d) = (data.rows(), data.cols());
    let mut res = DenseMatrix::zeros(t, d);
    for s in p..t {
        let x = regressor(data, p, s);
        let fitted = a.mul_vec(&x).expect("conformable");
        for i in 0..d {
            res[(s, i)] = data[(s, i)] - fitted[i];
        }
    }
    res
}

/// Stacked `[A_01 … A_0p]`.
pub fn stacked(model: &VarModel) -> DenseMatrix {
    let (d, p) = (model.dim(), model.lags());
    let mut a = DenseMatrix::zeros(d, d * p);
    for (l, m) in model.coeffs().iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                a[(i, l * d + j)] = m[(i, j)];
            }
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covpath::CovariancePath;
    use crate::var::{benchmark_model, simulate};

    #[test]
    fn residuals_reproduce_from_theta() {
        let path = CovariancePath::constant(DenseMatrix::identity(2)).unwrap();
        let x = simulate(&benchmark_model(), &path, 300, 1, 100).unwrap();
        let fit = ols_fit(&x, 2).unwrap();
        // û_t = X_t − (X̃′_{t−1} ⊗ I_d) ϑ̂
        for s in [2usize, 50, 299] {
            let xt = regressor(&x, 2, s);
            let kron = DenseMatrix::from_rows(&[&xt]).kron(&DenseMatrix::identity(2));
            let fitted = kron.mul_vec(&fit.theta).unwrap();
            for i in 0..2 {
                assert!((x[(s, i)] - fitted[i] - fit.residuals[(s, i)]).abs() < 1e-10);
            }
        }
        assert!(fit.residuals.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn consistency_on_var1() {
        let path = CovariancePath::constant(DenseMatrix::identity(2)).unwrap();
        let truth = benchmark_model().theta();
        let t = 2000;
        let mut hits = 0;
        for seed in 0..50 {
            let x = simulate(&benchmark_model(), &path, t, seed, 100).unwrap();
            let fit = ols_fit(&x, 1).unwrap();
            let err: f64 = fit.theta.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if err < 5.0 / (t as f64).sqrt() {
                hits += 1;
            }
        }
        assert!(hits >= 45, "{hits}/50");
    }

    #[test]
    fn degenerate_designs() {
        let zeros = DenseMatrix::zeros(50, 1);
        assert_eq!(ols_fit(&zeros, 1).unwrap_err(), Error::SingularDesign);
        let mut coll = DenseMatrix::zeros(60, 2);
        for s in 0..60 {
            let v = ((s * 7919) % 13) as f64 - 6.0;
            coll[(s, 0)] = v;
            coll[(s, 1)] = 2.0 * v;
        }
        assert_eq!(ols_fit(&coll, 1).unwrap_err(), Error::SingularDesign);
        assert!(matches!(ols_fit(&DenseMatrix::zeros(11, 1), 1), Err(Error::TooShort(_))));
    }
}
