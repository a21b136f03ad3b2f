//! Dense symmetric linear algebra for small covariance and Hessian matrices.
//!
//! The hyperboloid problem is assembled in three steps: factor the covariance
//! `Σ = C Cᵗ`, diagonalize the sensitivity-adjusted matrix `Cᵗ Γ₁ C = O D Oᵗ`,
//! and split the eigenvalues of `D` by sign. Everything here works on row-major
//! dense storage; dimensions of interest are a few dozen at most.

use std::fmt;

use crate::error::{Error, Result};

/// Off-diagonal convergence threshold of the Jacobi sweeps, relative to `‖A‖_F`.
pub const JACOBI_REL_TOL: f64 = 1e-14;
/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Default relative threshold below which an eigenvalue is treated as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

/// Square row-major matrix.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SquareMatrix { n, data }
    }

    /// Builds a matrix from rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "matrix must have at least one row".into(),
            ));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &SquareMatrix) -> Self {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.n).map(|i| self.row(i)))
            .finish()
    }
}

/// Dense symmetric matrix; `get(i, j) == get(j, i)` holds bit for bit.
#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix(SquareMatrix);

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix(SquareMatrix::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        SymmetricMatrix(SquareMatrix::identity(n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = SquareMatrix::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        SymmetricMatrix(m)
    }

    /// Symmetrizes `m` by averaging mirrored entries, without any check.
    pub fn symmetrized(m: &SquareMatrix) -> Self {
        SymmetricMatrix(SquareMatrix::from_fn(m.dim(), |i, j| {
            if i == j {
                m.get(i, i)
            } else {
                0.5 * (m.get(i, j) + m.get(j, i))
            }
        }))
    }

    /// Accepts `m` when every mirrored pair agrees to `rel_tol · max|m|`, then
    /// averages the pairs so the stored matrix is exactly symmetric.
    pub fn from_square(m: SquareMatrix, rel_tol: f64) -> Result<Self> {
        let scale = m.max_abs();
        let n = m.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (m.get(i, j) - m.get(j, i)).abs();
                if diff > rel_tol * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric: entries ({},{}) = {} and ({},{}) = {} differ by {:e}",
                        i + 1,
                        j + 1,
                        m.get(i, j),
                        j + 1,
                        i + 1,
                        m.get(j, i),
                        diff
                    )));
                }
            }
        }
        Ok(Self::symmetrized(&m))
    }

    pub fn from_rows(rows: &[Vec<f64>], rel_tol: f64) -> Result<Self> {
        Self::from_square(SquareMatrix::from_rows(rows)?, rel_tol)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    /// Sets `(i, j)` and `(j, i)` together.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0.set(i, j, v);
        self.0.set(j, i, v);
    }

    pub fn as_square(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// Symmetric permutation `P A Pᵗ`: entry `(i, j)` of the result is `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dim());
        SymmetricMatrix(SquareMatrix::from_fn(self.dim(), |i, j| {
            self.get(perm[i], perm[j])
        }))
    }

    fn frobenius(&self) -> f64 {
        self.0.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Lower-triangular Cholesky factor with a positive diagonal.
#[derive(Clone, PartialEq, Debug)]
pub struct LowerTriangular(SquareMatrix);

impl LowerTriangular {
    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_square(&self) -> &SquareMatrix {
        &self.0
    }

    /// `C Cᵗ`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        SymmetricMatrix::symmetrized(&self.0.matmul(&self.0.transpose()))
    }
}

/// Cholesky factorization `Σ = C Cᵗ` with a scale-relative pivot test.
pub fn cholesky(sigma: &SymmetricMatrix) -> Result<LowerTriangular> {
    let n = sigma.dim();
    let max_diag = sigma.diagonal().into_iter().fold(0.0_f64, f64::max);
    let pivot_tol = n as f64 * 1e-14 * max_diag;
    let mut l = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut pivot = sigma.get(j, j);
        for k in 0..j {
            pivot -= l.get(j, k) * l.get(j, k);
        }
        if !(pivot > pivot_tol) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let mut s = sigma.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(LowerTriangular(l))
}

/// Eigenvalues (ascending) and the orthogonal matrix whose columns are the
/// matching eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub basis: SquareMatrix,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(a: &SymmetricMatrix) -> Result<Eigen> {
    let n = a.dim();
    let mut m = a.as_square().clone();
    let mut v = SquareMatrix::identity(n);
    let threshold = JACOBI_REL_TOL * a.frobenius();

    let off_norm = |m: &SquareMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.get(i, j) * m.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let basis = SquareMatrix::from_fn(n, |r, c| v.get(r, order[c]));
    Ok(Eigen { values, basis })
}

/// Eigenvalues of `Cᵗ Γ₁ C` split by sign.
///
/// `basis` columns are ordered as the positive eigenvectors (matching
/// `d_plus`), then the negative ones (matching `d_minus`), then the dropped
/// zero eigenvectors.
#[derive(Clone, Debug)]
pub struct SignedSpectrum {
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    pub basis: SquareMatrix,
    pub zero_count: usize,
}

impl SignedSpectrum {
    /// Spectrum with an identity basis, for problems given directly as eigenvalue lists.
    pub fn from_weights(d_plus: Vec<f64>, d_minus: Vec<f64>) -> Result<Self> {
        if d_plus
            .iter()
            .chain(&d_minus)
            .any(|&d| !(d > 0.0 && d.is_finite()))
        {
            return Err(Error::InvalidInput(
                "spectrum weights must be positive and finite".into(),
            ));
        }
        if d_plus.is_empty() && d_minus.is_empty() {
            return Err(Error::AllZeroSpectrum);
        }
        let mut d_plus = d_plus;
        let mut d_minus = d_minus;
        d_plus.sort_by(f64::total_cmp);
        d_minus.sort_by(f64::total_cmp);
        let n = d_plus.len() + d_minus.len();
        Ok(SignedSpectrum {
            d_plus,
            d_minus,
            basis: SquareMatrix::identity(n),
            zero_count: 0,
        })
    }

    /// Splits a list of signed eigenvalues, e.g. a published eigenvalue vector.
    pub fn from_signed_eigenvalues(eigenvalues: &[f64], zero_tol: f64) -> Result<Self> {
        let scale = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let cut = zero_tol * scale;
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut zeros = 0;
        for &e in eigenvalues {
            if e.abs() <= cut {
                zeros += 1;
            } else if e > 0.0 {
                plus.push(e);
            } else {
                minus.push(-e);
            }
        }
        let mut s = Self::from_weights(plus, minus)?;
        s.zero_count = zeros;
        s.basis = SquareMatrix::identity(eigenvalues.len());
        Ok(s)
    }

    pub fn n_plus(&self) -> usize {
        self.d_plus.len()
    }

    pub fn n_minus(&self) -> usize {
        self.d_minus.len()
    }

    pub fn dim(&self) -> usize {
        self.d_plus.len() + self.d_minus.len() + self.zero_count
    }

    /// Signed eigenvalues, ascending, zeros excluded.
    pub fn signed_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .d_minus
            .iter()
            .map(|d| -d)
            .chain(self.d_plus.iter().copied())
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Forms `M = Cᵗ Γ₁ C`, diagonalizes it and splits the eigenvalues by sign.
pub fn build_signed_spectrum(
    c: &LowerTriangular,
    gamma1: &SymmetricMatrix,
    zero_tol: f64,
) -> Result<SignedSpectrum> {
    let n = c.dim();
    if gamma1.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "Cholesky factor is {n}x{n} but Gamma1 is {0}x{0}",
            gamma1.dim()
        )));
    }
    let ct = c.as_square().transpose();
    let m = ct.matmul(gamma1.as_square()).matmul(c.as_square());
    let m = SymmetricMatrix::symmetrized(&m);
    let eig = sym_eigen(&m)?;

    let radius = eig.values.iter().fold(0.0_f64, |r, v| r.max(v.abs()));
    let cut = zero_tol * radius;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut zeros = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda.abs() <= cut {
            zeros.push(k);
        } else if lambda > 0.0 {
            plus.push(k);
        } else {
            minus.push(k);
        }
    }
    if plus.is_empty() && minus.is_empty() {
        return Err(Error::AllZeroSpectrum);
    }
    // eigenvalues ascend, so negatives ascend in magnitude when walked backwards
    minus.reverse();
    let columns: Vec<usize> = plus.iter().chain(&minus).chain(&zeros).copied().collect();
    let basis = SquareMatrix::from_fn(n, |r, col| eig.basis.get(r, columns[col]));
    Ok(SignedSpectrum {
        d_plus: plus.iter().map(|&k| eig.values[k]).collect(),
        d_minus: minus.iter().map(|&k| -eig.values[k]).collect(),
        basis,
        zero_count: zeros.len(),
    })
}
