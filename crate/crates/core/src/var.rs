//! VAR(p) model: companion form, moving-average coefficients and simulation
//! with a deterministic time-varying error covariance.

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::covpath::CovariancePath;
use crate::error::{Error, Result};
use crate::matrix::{vec, DenseMatrix};

/// Margin below one required of the companion spectral radius.
pub const STABILITY_MARGIN: f64 = 1e-8;

/// Default number of discarded pre-sample steps.
pub const DEFAULT_BURN_IN: usize = 100;

/// `X_t = A_01 X_{t-1} + … + A_0p X_{t-p} + u_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    d: usize,
    p: usize,
    coeffs: Vec<DenseMatrix>,
}

impl VarModel {
    pub fn new(coeffs: Vec<DenseMatrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::ShapeMismatch("a VAR needs at least one lag".into()))?;
        let d = first.rows();
        if coeffs.iter().any(|a| a.rows() != d || a.cols() != d) {
            return Err(Error::ShapeMismatch(format!("lag matrices must all be {d}x{d}")));
        }
        Ok(Self { d, p: coeffs.len(), coeffs })
    }

    pub fn var1(a: DenseMatrix) -> Result<Self> {
        Self::new(vec![a])
    }

    /// Rebuilds the model from `ϑ = vec(A_01, …, A_0p)`.
    pub fn from_theta(theta: &[f64], d: usize, p: usize) -> Result<Self> {
        if theta.len() != p * d * d || d == 0 || p == 0 {
            return Err(Error::ShapeMismatch(format!(
                "theta of length {} for d = {d}, p = {p}",
                theta.len()
            )));
        }
        let coeffs = (0..p)
            .map(|l| {
                let chunk = &theta[l * d * d..(l + 1) * d * d];
                crate::matrix::ivec(chunk, d, d)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }

    /// The zero VAR(p), i.e. white noise.
    pub fn zero(d: usize, p: usize) -> Self {
        Self { d, p, coeffs: vec![DenseMatrix::zeros(d, d); p] }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lags(&self) -> usize {
        self.p
    }

    pub fn coeffs(&self) -> &[DenseMatrix] {
        &self.coeffs
    }

    /// `ϑ = vec(A_01, …, A_0p)`, length `p·d²`.
    pub fn theta(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(vec).collect()
    }

    pub fn companion(&self) -> CompanionMatrix {
        let (d, p) = (self.d, self.p);
        let n = d * p;
        let mut m = DenseMatrix::zeros(n, n);
        for (l, a) in self.coeffs.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    m[(i, l * d + j)] = a[(i, j)];
                }
            }
        }
        for k in d..n {
            m[(k, k - d)] = 1.0;
        }
        let nm = DMatrix::from_row_slice(n, n, m.as_slice());
        let spectral_radius = spectral_radius(&nm);
        let sv = nm.singular_values();
        let smax = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * smax.max(1.0)).count();
        CompanionMatrix { matrix: m, d, p, spectral_radius, rank }
    }

    pub fn is_stable(&self) -> bool {
        self.companion().is_stable()
    }

    pub fn check_stable(&self) -> Result<()> {
        let c = self.companion();
        if c.is_stable() {
            Ok(())
        } else {
            Err(Error::UnstableModel(c.spectral_radius))
        }
    }

    /// `Φ_0 = I`, `Φ_i = Σ_{j=1}^{min(i,p)} Φ_{i−j} A_0j`.
    pub fn ma_coefficients(&self, horizon: usize) -> Vec<DenseMatrix> {
        let mut phi = Vec::with_capacity(horizon + 1);
        phi.push(DenseMatrix::identity(self.d));
        for i in 1..=horizon {
            let mut acc = DenseMatrix::zeros(self.d, self.d);
            for j in 1..=i.min(self.p) {
                acc = &acc + &(&phi[i - j] * &self.coeffs[j - 1]);
            }
            phi.push(acc);
        }
        phi
    }
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    if let Some(schur) = m.clone().try_schur(1e-14, 10_000) {
        return schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    }
    // Gelfand's formula with normalized repeated squaring.
    let mut a = m.clone();
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..20 {
        let s = a.norm();
        if s == 0.0 {
            return 0.0;
        }
        a /= s;
        log_scale += s.ln() / k;
        a = &a * &a;
        k *= 2.0;
    }
    (log_scale + a.norm().max(f64::MIN_POSITIVE).ln() / k).exp()
}

/// Companion matrix `𝔸` (pd × pd) with its spectral radius and numerical rank.
#[derive(Clone, Debug)]
pub struct CompanionMatrix {
    pub matrix: DenseMatrix,
    pub d: usize,
    pub p: usize,
    pub spectral_radius: f64,
    pub rank: usize,
}

impl CompanionMatrix {
    pub fn is_stable(&self) -> bool {
        self.spectral_radius < 1.0 - STABILITY_MARGIN
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.d * self.p
    }

    /// `J = (I_d, 0, …, 0)`, of shape d × pd.
    pub fn selector(&self) -> DenseMatrix {
        let mut j = DenseMatrix::zeros(self.d, self.d * self.p);
        for k in 0..self.d {
            j[(k, k)] = 1.0;
        }
        j
    }
}

/// Source of iid standardized innovation vectors.
///
/// Draws must have mean zero, identity covariance and finite fourth moments; the
/// asymptotic variance formulas additionally assume zero third moments.
pub trait Innovations: Send + Sync {
    fn fill(&self, rng: &mut dyn RngCore, out: &mut [f64]);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GaussianInnovations;

impl Innovations for GaussianInnovations {
    fn fill(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        for x in out {
            *x = StandardNormal.sample(rng);
        }
    }
}

/// Student-t draws rescaled to unit variance (`dof > 4` for finite fourth moments).
#[derive(Clone, Copy, Debug)]
pub struct StudentInnovations {
    dist: StudentT<f64>,
    scale: f64,
}

impl StudentInnovations {
    pub fn new(dof: f64) -> Result<Self> {
        if !(dof > 4.0) {
            return Err(Error::Config(format!("Student-t innovations need dof > 4, got {dof}")));
        }
        let dist = StudentT::new(dof).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self { dist, scale: ((dof - 2.0) / dof).sqrt() })
    }
}

impl Innovations for StudentInnovations {
    fn fill(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        for x in out {
            *x = self.scale * self.dist.sample(rng);
        }
    }
}

/// Cholesky factors `H(t/T)` for a fixed sample size, reusable across replications.
#[derive(Clone, Debug)]
pub struct SimulationPlan {
    model: VarModel,
    factors: Vec<DenseMatrix>,
    burn_in: usize,
}

impl SimulationPlan {
    pub fn new(model: &VarModel, path: &CovariancePath, t: usize, burn_in: usize) -> Result<Self> {
        model.check_stable()?;
        if path.dim() != model.dim() {
            return Err(Error::ShapeMismatch(format!(
                "path dimension {} does not match model dimension {}",
                path.dim(),
                model.dim()
            )));
        }
        if t == 0 {
            return Err(Error::TooShort("sample size must be positive".into()));
        }
        let factors = (1..=t)
            .map(|s| Ok(path.eval_chol(s as f64 / t as f64)?.into_matrix()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model: model.clone(), factors, burn_in })
    }

    pub fn sample_size(&self) -> usize {
        self.factors.len()
    }

    /// Draws one T × d series. Pre-sample steps use `H(1/T)`.
    pub fn draw(&self, rng: &mut dyn RngCore, innovations: &dyn Innovations) -> DenseMatrix {
        let d = self.model.dim();
        let p = self.model.lags();
        let t = self.factors.len();
        let total = self.burn_in + t;
        let mut x = vec![0.0; (total + p) * d];
        let mut eps = vec![0.0; d];
        for s in 0..total {
            innovations.fill(rng, &mut eps);
            let h = &self.factors[s.saturating_sub(self.burn_in)];
            let row = (s + p) * d;
            for i in 0..d {
                let mut v = 0.0;
                for k in 0..=i {
                    v += h[(i, k)] * eps[k];
                }
                x[row + i] = v;
            }
            for (l, a) in self.model.coeffs().iter().enumerate() {
                let lag = row - (l + 1) * d;
                for i in 0..d {
                    let mut v = 0.0;
                    for j in 0..d {
                        v += a[(i, j)] * x[lag + j];
                    }
                    x[row + i] += v;
                }
            }
        }
        let start = (self.burn_in + p) * d;
        DenseMatrix::from_vec(t, d, x[start..].to_vec())
    }
}

/// Simulates `T` observations with Gaussian innovations from a seeded ChaCha8 stream.
pub fn simulate(
    model: &VarModel,
    path: &CovariancePath,
    t: usize,
    seed: u64,
    burn_in: usize,
) -> Result<DenseMatrix> {
    let plan = SimulationPlan::new(model, path, t, burn_in)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(plan.draw(&mut rng, &GaussianInnovations))
}

/// The bivariate VAR(1) of the simulation study, `A = [[0.5, −0.3], [0.1, 0.3]]`.
pub fn benchmark_model() -> VarModel {
    VarModel::var1(DenseMatrix::from_rows(&[&[0.5, -0.3], &[0.1, 0.3]])).expect("2x2 lag matrix")
}
