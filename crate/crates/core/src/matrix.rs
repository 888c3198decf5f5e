//! Dense real matrix algebra for small systems.
//!
//! Row-major storage (`data[i * cols + j]`), sized for the d ≤ 10 systems this
//! crate deals with. Besides the usual products and solves, the module carries
//! the operators needed for delta-method calculus on Cholesky factors:
//! `vec`/`vech`, commutation and elimination matrices, the half-lower projector
//! and the Jacobian of the Cholesky map.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used by the symmetry check in [`cholesky_lower`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense real matrix in row-major order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.6} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Unchecked constructor for internal use where the shape is known.
    pub(crate) fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row slices.
    ///
    /// # Panics
    /// Panics if the rows are empty or ragged.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty(), "from_rows needs at least one row");
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_vec(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_vec(self.rows, self.cols, self.data.iter().map(|x| x * s).collect())
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &DenseMatrix) -> Self {
        let (m, n, p, q) = (self.rows, self.cols, rhs.rows, rhs.cols);
        let mut out = Self::zeros(m * p, n * q);
        for i in 0..m {
            for j in 0..n {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for k in 0..p {
                    for l in 0..q {
                        out[(i * p + k, j * q + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// `(S + S')/2`.
    pub fn symmetrize(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(not_square(self));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    /// Largest absolute asymmetry relative to the largest entry (at least 1).
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs().max(1.0);
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self[(i, j)] == 0.0))
    }

    /// Solves `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<Self> {
        if !self.is_square() {
            return Err(not_square(self));
        }
        if rhs.rows != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "right-hand side has {} rows, expected {}",
                rhs.rows, self.rows
            )));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                for j in 0..m {
                    b.swap(k * m + j, piv * m + j);
                }
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                for j in 0..m {
                    b[i * m + j] -= f * b[k * m + j];
                }
            }
        }
        for k in (0..n).rev() {
            let d = a[k * n + k];
            for j in 0..m {
                let mut s = b[k * m + j];
                for l in k + 1..n {
                    s -= a[k * n + l] * b[l * m + j];
                }
                b[k * m + j] = s / d;
            }
        }
        Ok(Self::from_vec(n, m, b))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.rows))
    }

    /// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
    pub fn spd_inverse(&self) -> Result<Self> {
        let l = cholesky_lower(self)?;
        let li = l.inverse();
        li.transpose().matmul(&li)
    }
}

fn not_square(m: &DenseMatrix) -> Error {
    Error::ShapeMismatch(format!("expected a square matrix, got {}x{}", m.rows, m.cols))
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        DenseMatrix::from_vec(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        DenseMatrix::from_vec(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        )
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    /// # Panics
    /// Panics on incompatible shapes; use [`DenseMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

/// Lower-triangular factor with a strictly positive diagonal.
#[derive(Clone, PartialEq, Debug)]
pub struct LowerTriangular(DenseMatrix);

impl LowerTriangular {
    /// Wraps a matrix after checking the triangular shape and positive diagonal.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(not_square(&m));
        }
        if !m.is_lower_triangular() {
            return Err(Error::ShapeMismatch("entries above the diagonal".into()));
        }
        if let Some((k, &p)) = m.diag().iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(Error::NonPositiveDefinite { column: k, pivot: p });
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    pub fn transpose(&self) -> DenseMatrix {
        self.0.transpose()
    }

    /// `H · H'`.
    pub fn outer(&self) -> DenseMatrix {
        &self.0 * &self.0.transpose()
    }

    /// Inverse by forward substitution; the result is lower triangular.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        let l = &self.0;
        let mut inv = DenseMatrix::zeros(n, n);
        for col in 0..n {
            inv[(col, col)] = 1.0 / l[(col, col)];
            for i in col + 1..n {
                let mut s = 0.0;
                for k in col..i {
                    s += l[(i, k)] * inv[(k, col)];
                }
                inv[(i, col)] = -s / l[(i, i)];
            }
        }
        inv
    }
}

/// Lower Cholesky factor `H` of a symmetric positive-definite `S` (`S = H H'`).
///
/// The input is symmetrized before factorization; asymmetry beyond
/// [`SYMMETRY_TOL`] (relative) is rejected.
pub fn cholesky_lower(s: &DenseMatrix) -> Result<LowerTriangular> {
    if !s.is_square() {
        return Err(not_square(s));
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NonSymmetric(asym));
    }
    let s = s.symmetrize()?;
    let n = s.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = s[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag.is_nan() || diag <= 0.0 {
            return Err(Error::NonPositiveDefinite { column: j, pivot: diag });
        }
        let djj = diag.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(LowerTriangular(l))
}

/// Column-stacking vectorization.
pub fn vec(m: &DenseMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.rows * m.cols);
    for j in 0..m.cols {
        for i in 0..m.rows {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Half-vectorization: on-and-below-diagonal entries, column by column.
pub fn vech(m: &DenseMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(not_square(m));
    }
    let n = m.rows;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            out.push(m[(i, j)]);
        }
    }
    Ok(out)
}

/// Inverse of [`vec`] for a target shape.
pub fn ivec(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix> {
    if v.len() != rows * cols || rows == 0 || cols == 0 {
        return Err(Error::ShapeMismatch(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    let mut m = DenseMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = v[j * rows + i];
        }
    }
    Ok(m)
}

/// Symmetric matrix from its `vech`.
pub fn unvech(v: &[f64], d: usize) -> Result<DenseMatrix> {
    if v.len() != d * (d + 1) / 2 {
        return Err(Error::ShapeMismatch(format!(
            "vech of length {} for dimension {d}",
            v.len()
        )));
    }
    let mut m = DenseMatrix::zeros(d, d);
    let mut idx = 0;
    for j in 0..d {
        for i in j..d {
            m[(i, j)] = v[idx];
            m[(j, i)] = v[idx];
            idx += 1;
        }
    }
    Ok(m)
}

/// Position of entry `(i, j)`, `i ≥ j`, inside `vech`.
#[inline]
pub fn vech_index(i: usize, j: usize, d: usize) -> usize {
    debug_assert!(i >= j);
    j * d - j * (j + 1) / 2 + i
}

/// Commutation matrix `K_d` with `K_d vec(G) = vec(G')`.
pub fn commutation(d: usize) -> DenseMatrix {
    let mut k = DenseMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            // vec(G)[j*d + i] = G_ij ; vec(G')[i*d + j] = G_ij
            k[(i * d + j, j * d + i)] = 1.0;
        }
    }
    k
}

/// Elimination matrix `L_d` with `L_d vec(G) = vech(G)`.
pub fn elimination(d: usize) -> DenseMatrix {
    let mut l = DenseMatrix::zeros(d * (d + 1) / 2, d * d);
    for j in 0..d {
        for i in j..d {
            l[(vech_index(i, j, d), j * d + i)] = 1.0;
        }
    }
    l
}

/// Keeps the strictly lower part, halves the diagonal and zeroes the upper part.
///
/// Also returns the diagonal matrix `Z` such that `Z vec(A) = vec(half_lower(A))`.
pub fn half_lower(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    if !a.is_square() {
        return Err(not_square(a));
    }
    let d = a.rows;
    let mut out = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            out[(i, j)] = if i == j { 0.5 * a[(i, j)] } else { a[(i, j)] };
        }
    }
    Ok((out, half_lower_selector(d)))
}

/// The diagonal `Z` of [`half_lower`], as a `d² × d²` matrix.
pub fn half_lower_selector(d: usize) -> DenseMatrix {
    let mut z = DenseMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for i in j..d {
            z[(j * d + i, j * d + i)] = if i == j { 0.5 } else { 1.0 };
        }
    }
    z
}

/// Jacobian of `vec(C(S))` with respect to `vec(S)`, where `C` is the lower Cholesky map:
/// `(I ⊗ C) Z (C⁻¹ ⊗ C⁻¹)`.
pub fn cholesky_differential(s: &DenseMatrix) -> Result<DenseMatrix> {
    let c = cholesky_lower(s)?;
    Ok(cholesky_differential_from_factor(&c))
}

/// Same as [`cholesky_differential`] when the factor is already available.
pub fn cholesky_differential_from_factor(c: &LowerTriangular) -> DenseMatrix {
    let d = c.dim();
    let ci = c.inverse();
    let left = DenseMatrix::identity(d).kron(c.as_matrix());
    let z = half_lower_selector(d);
    let right = ci.kron(&ci);
    &(&left * &z) * &right
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as columns.
pub fn sym_eigen(s: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if !s.is_square() {
        return Err(not_square(s));
    }
    let n = s.rows;
    let mut a = s.symmetrize()?;
    let mut v = DenseMatrix::identity(n);
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-12 * norm * 1e-3 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Ok((values, vectors))
}

pub fn min_eigenvalue(s: &DenseMatrix) -> Result<f64> {
    Ok(sym_eigen(s)?.0[0])
}

pub fn max_eigenvalue(s: &DenseMatrix) -> Result<f64> {
    Ok(*sym_eigen(s)?.0.last().expect("non-empty spectrum"))
}

/// Largest singular value, from the top eigenvalue of `M'M`.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    let gram = &m.transpose() * m;
    let top = max_eigenvalue(&gram).unwrap_or(0.0);
    top.max(0.0).sqrt()
}

/// Raises every eigenvalue of a symmetric matrix to at least `floor`.
///
/// Returns the projected matrix and whether any eigenvalue was lifted.
pub fn eigen_floor(s: &DenseMatrix, floor: f64) -> Result<(DenseMatrix, bool)> {
    let (vals, vecs) = sym_eigen(s)?;
    if vals[0] >= floor {
        return Ok((s.symmetrize()?, false));
    }
    let n = s.rows;
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let lam = lam.max(floor);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += lam * vecs[(i, k)] * vecs[(j, k)];
            }
        }
    }
    Ok((out.symmetrize()?, true))
}

/// Cholesky factor after lifting eigenvalues below `floor`.
pub fn floored_cholesky(s: &DenseMatrix, floor: f64) -> Result<(LowerTriangular, bool)> {
    let (m, lifted) = eigen_floor(s, floor)?;
    match cholesky_lower(&m) {
        Ok(c) => Ok((c, lifted)),
        Err(_) => {
            // Rounding can leave a pivot at zero when the floor is tiny relative to ‖S‖.
            let bump = floor.max(1e-12 * m.max_abs());
            let shifted = &m + &DenseMatrix::identity(m.rows).scale(bump);
            Ok((cholesky_lower(&shifted)?, true))
        }
    }
}

/// Relative Frobenius distance `‖a − b‖ / max(‖b‖, 1e-300)`.
pub fn rel_frobenius(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).frobenius_norm() / b.frobenius_norm().max(1e-300)
}
