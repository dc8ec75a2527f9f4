//! Small dense linear algebra: square matrices, Cholesky factors,
//! rank-one factor updates and multivariate normal sampling / densities.
//!
//! Everything here is sized for the handful-of-dimensions problems the
//! samplers deal with, so storage is a flat row-major `Vec<f64>`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::LinalgError;

const SYMMETRY_TOL: f64 = 1e-12;

/// Dense square matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        self.add(&other.scaled(-1.0))
    }

    pub fn add_to_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self[(i, i)] += v;
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len());
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self + s * u uᵀ`
    pub fn add_outer(&mut self, u: &[f64], s: f64) {
        let n = self.n;
        for i in 0..n {
            let ui = s * u[i];
            for j in 0..n {
                self.data[i * n + j] += ui * u[j];
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self[(i, j)] - self[(j, i)]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// `(A + Aᵀ) / 2`
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// A symmetric positive definite matrix.
///
/// Construction only checks symmetry; positive definiteness is certified by
/// a successful [`cholesky`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(Matrix);

impl SpdMatrix {
    /// Wraps `m` after checking symmetry to 1e-12 relative and symmetrizing.
    pub fn new(m: Matrix) -> Result<Self, LinalgError> {
        if m.dim() == 0 {
            return Err(LinalgError::Empty);
        }
        if m.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        if !m.is_symmetric(SYMMETRY_TOL) {
            return Err(LinalgError::NotSymmetric);
        }
        Ok(Self(m.symmetrized()))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(Matrix::from_diagonal(diag))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self(Matrix::identity(n).scaled(s))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Lower-triangular `L` with `L Lᵀ` equal to the factored matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor(Matrix);

impl CholeskyFactor {
    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    /// Accepts a lower-triangular matrix with a strictly positive diagonal.
    pub fn from_lower(l: Matrix) -> Result<Self, LinalgError> {
        let n = l.dim();
        for i in 0..n {
            if !(l[(i, i)] > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { pivot: i });
            }
            for j in (i + 1)..n {
                if l[(i, j)] != 0.0 {
                    return Err(LinalgError::NotLowerTriangular);
                }
            }
        }
        Ok(Self(l))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn lower(&self) -> &Matrix {
        &self.0
    }

    /// `L Lᵀ`
    pub fn recompose(&self) -> Matrix {
        let n = self.dim();
        let l = &self.0;
        Matrix::from_fn(n, |i, j| {
            let m = i.min(j);
            (0..=m).map(|k| l[(i, k)] * l[(j, k)]).sum()
        })
    }

    /// Multiplies the factor by `s > 0`, i.e. scales the factored matrix by `s²`.
    pub fn scale(&mut self, s: f64) {
        debug_assert!(s > 0.0);
        self.0 = self.0.scaled(s);
    }

    /// `L v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| dot(&self.0.row(i)[..=i], &v[..=i]))
            .collect()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = self.0.row(i);
            let s = dot(&row[..i], &y[..i]);
            y[i] = (b[i] - s) / row[i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.0[(k, i)] * x[k];
            }
            x[i] = s / self.0[(i, i)];
        }
        x
    }

    /// `(L Lᵀ)⁻¹`
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve_upper(&self.solve_lower(&e));
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrized()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.0[(i, i)].ln()).sum::<f64>()
    }

    /// Squared Mahalanobis norm `vᵀ (L Lᵀ)⁻¹ v`.
    pub fn quad_form_inv(&self, v: &[f64]) -> f64 {
        let y = self.solve_lower(v);
        dot(&y, &y)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky–Banachiewicz factorization of a symmetric positive definite matrix.
pub fn cholesky(c: &SpdMatrix) -> Result<CholeskyFactor, LinalgError> {
    cholesky_matrix(c.matrix())
}

/// Factorizes the symmetrized `m`; fails on the first non-positive pivot.
pub fn cholesky_matrix(m: &Matrix) -> Result<CholeskyFactor, LinalgError> {
    let n = m.dim();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let mut l = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            let s = a - dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite { pivot: i });
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(CholeskyFactor(l))
}

/// Returns the factor of `R Rᵀ + v vᵀ`.
pub fn rank_one_update(r: &CholeskyFactor, v: &[f64]) -> CholeskyFactor {
    let mut out = r.clone();
    rank_one_update_in_place(&mut out, v);
    out
}

/// In-place rank-one update `L Lᵀ ← L Lᵀ + v vᵀ` using Givens-style
/// rotations (LINPACK `dchud`). O(d²), never fails for an update.
pub fn rank_one_update_in_place(r: &mut CholeskyFactor, v: &[f64]) {
    let n = r.dim();
    assert_eq!(n, v.len(), "rank-one update dimension mismatch");
    let mut w = v.to_vec();
    // Leading zeros of `w` leave the corresponding columns untouched.
    let first = match w.iter().position(|&x| x != 0.0) {
        Some(k) => k,
        None => return,
    };
    let l = &mut r.0;
    for k in first..n {
        let lkk = l[(k, k)];
        let wk = w[k];
        if wk == 0.0 {
            continue;
        }
        let rad = lkk.hypot(wk);
        let c = rad / lkk;
        let s = wk / lkk;
        l[(k, k)] = rad;
        for i in (k + 1)..n {
            let lik = (l[(i, k)] + s * w[i]) / c;
            w[i] = c * w[i] - s * lik;
            l[(i, k)] = lik;
        }
    }
}

/// `mean + R z`, with `z` drawn as `d` standard normals from `rng` in index order.
pub fn mvn_sample<R: Rng + ?Sized>(mean: &[f64], r: &CholeskyFactor, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..mean.len())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    mvn_from_normals(mean, r, &z)
}

/// Deterministic part of [`mvn_sample`]: `mean + R z`.
pub fn mvn_from_normals(mean: &[f64], r: &CholeskyFactor, z: &[f64]) -> Vec<f64> {
    assert_eq!(mean.len(), r.dim());
    assert_eq!(z.len(), r.dim());
    r.mul_vec(z)
        .into_iter()
        .zip(mean)
        .map(|(a, m)| a + m)
        .collect()
}

/// Gaussian log density with its normalizing constant.
pub fn log_mvn_density(x: &[f64], mean: &[f64], c: &SpdMatrix) -> Result<f64, LinalgError> {
    let r = cholesky(c)?;
    Ok(log_mvn_density_factored(x, mean, &r))
}

/// [`log_mvn_density`] for an already factored covariance.
pub fn log_mvn_density_factored(x: &[f64], mean: &[f64], r: &CholeskyFactor) -> f64 {
    let d = r.dim();
    let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let q = r.quad_form_inv(&diff);
    -0.5 * (d as f64 * (2.0 * PI).ln() + r.log_det() + q)
}
