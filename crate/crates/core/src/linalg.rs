//! Dense symmetric linear algebra.
//!
//! Row-major dense matrices, a cyclic Jacobi eigensolver and the closed-form
//! matrix-function identities the greedy selectors lean on: matrix exponential,
//! rank-one exponentials, trace of the matrix hyperbolic cosine, dilation and
//! the Loewner order test.
//!
//! Everything here is a pure function of its inputs.

use crate::error::{Error, Result};

/// Sweep cap for the Jacobi eigensolver.
pub const MAX_SWEEPS: usize = 100;

/// Above this eigenvalue magnitude `cosh` is evaluated in the log domain.
pub const LOG_DOMAIN_THRESHOLD: f64 = 30.0;

/// `exp` overflows an f64 just above this argument.
pub const EXP_LIMIT: f64 = 700.0;

/// Relative eigen-tolerance used by the self checks: `1e-10 * max(1, ||A||)`.
pub fn tau_eig(norm: f64) -> f64 {
    1e-10 * norm.max(1.0)
}

/// Dense real symmetric matrix of size `n x n`, stored row-major.
///
/// Symmetry is exact: every constructor either checks `a[i][j] == a[j][i]`
/// bit for bit or writes the lower triangle as a mirror of the upper one.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Validating constructor.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(n, data)
    }

    /// Builds the matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// `x ⊗ x`.
    pub fn outer(x: &[f64]) -> Self {
        Self::from_fn(x.len(), |i, j| x[i] * x[j])
    }

    /// All-ones matrix `J_n`.
    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0)
    }

    /// Symmetric part `(M + Mᵀ)/2` of a square matrix.
    pub fn symmetric_part(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch { expected: m.rows(), got: m.cols() });
        }
        Ok(Self::from_fn(m.rows(), |i, j| 0.5 * (m.get(i, j) + m.get(j, i))))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets `a[i][j]` and `a[j][i]`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { n: self.n, data }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * c).collect() }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &Self, c: f64) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    /// `self += c * x ⊗ x`.
    pub fn add_outer(&mut self, x: &[f64], c: f64) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let n = self.n;
        for i in 0..n {
            let ci = c * x[i];
            for j in 0..n {
                self.data[i * n + j] += ci * x[j];
            }
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix { rows: self.n, cols: self.n, data: self.data.clone() }
    }

    /// General product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Matrix> {
        self.check_same(other)?;
        self.to_matrix().mul(&other.to_matrix())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn eig(&self) -> Result<EigDecomposition> {
        sym_eig(self)
    }

    /// Eigenvalues in descending order, without eigenvectors.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        sym_eigenvalues(self)
    }

    /// `max |λ_i|`.
    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("n >= 1"))
    }
}

/// Dense general `rows x cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    /// `Aᵀ A`, symmetric by construction.
    pub fn gram(&self) -> SymMatrix {
        SymMatrix::from_fn(self.cols, |i, j| (0..self.rows).map(|r| self.get(r, i) * self.get(r, j)).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Eigen-decomposition `A = Q diag(λ) Qᵀ`; eigenvalues in descending order,
/// column `j` of `vectors` pairs with `values[j]`.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigDecomposition {
    /// `Q diag(f(λ)) Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let q = &self.vectors;
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| q.get(i, k) * fl[k] * q.get(j, k)).sum())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|l| l)
    }

    /// Max-entry deviation of `QᵀQ` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.values.len();
        let q = &self.vectors;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                let d: f64 = (0..n).map(|i| q.get(i, a) * q.get(i, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }
}

/// Cyclic Jacobi on a full symmetric work array. Returns unsorted eigenvalues.
fn jacobi(a: &mut [f64], n: usize, mut v: Option<&mut [f64]>) -> Result<Vec<f64>> {
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let tol = 1e-15 * frob;
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        let off = off.sqrt();
        if off <= tol {
            return Ok((0..n).map(|i| a[i * n + i]).collect());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
                    if theta < 0.0 { -t } else { t }
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                if let Some(v) = v.as_deref_mut() {
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = vrp - s * (vrq + tau * vrp);
                        v[r * n + q] = vrq + s * (vrp - tau * vrq);
                    }
                }
            }
        }
    }
    let mut off = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            off += a[p * n + q] * a[p * n + q];
        }
    }
    Err(Error::NonConvergence { n, residual: off.sqrt() })
}

/// Full symmetric eigen-decomposition by cyclic Jacobi rotations.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomposition> {
    let n = a.n();
    let mut work = a.as_slice().to_vec();
    let mut v = Matrix::identity(n).data;
    let values = jacobi(&mut work, n, Some(&mut v))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, new_j, v[r * n + old_j]);
        }
    }
    Ok(EigDecomposition { values: sorted, vectors })
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    let mut work = a.as_slice().to_vec();
    let mut values = jacobi(&mut work, a.n(), None)?;
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// `exp(A) = Q diag(e^λ) Qᵀ`.
pub fn matrix_exp(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(a.eig()?.map(f64::exp))
}

/// Sign of a rank-one exponent `exp(±x⊗x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Closed form of `exp(±x⊗x) = I + (e^{±|x|²} - 1)/|x|² · x⊗x`.
pub fn rank_one_exp(x: &[f64], sign: Sign) -> Result<SymMatrix> {
    let s = dot(x, x);
    if s == 0.0 || x.is_empty() {
        return Err(Error::Domain("rank-one exponential of the zero vector".into()));
    }
    let c = match sign {
        Sign::Plus => s.exp_m1() / s,
        Sign::Minus => (-s).exp_m1() / s,
    };
    let n = x.len();
    Ok(SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 } + c * x[i] * x[j]))
}

/// `trace cosh(A) = Σ cosh(λ_i)`.
///
/// Fails with [`Error::Overflow`] when an eigenvalue leaves the `exp` range;
/// use [`log_trace_cosh`] when only comparisons are needed.
pub fn trace_cosh(a: &SymMatrix) -> Result<f64> {
    let eigs = a.eigenvalues()?;
    sum_cosh(&eigs)
}

/// `Σ cosh(λ_i)` for precomputed eigenvalues.
pub fn sum_cosh(eigs: &[f64]) -> Result<f64> {
    let max_abs = eigs.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if max_abs > EXP_LIMIT {
        return Err(Error::Overflow { max_abs });
    }
    Ok(eigs.iter().map(|l| l.cosh()).sum())
}

/// `ln trace cosh(A)`.
pub fn log_trace_cosh(a: &SymMatrix) -> Result<f64> {
    Ok(log_sum_cosh(&a.eigenvalues()?))
}

/// `ln Σ cosh(λ_i)`, accurate both for tiny and for huge eigenvalues.
///
/// Small spectra go through `ln n + ln1p(Σ (cosh λ - 1) / n)` so that
/// potentials differing in the 12th digit still compare correctly; spectra with
/// some `|λ| > LOG_DOMAIN_THRESHOLD` go through log-sum-exp.
pub fn log_sum_cosh(eigs: &[f64]) -> f64 {
    let n = eigs.len() as f64;
    let max_abs = eigs.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if max_abs <= LOG_DOMAIN_THRESHOLD {
        let excess: f64 = eigs
            .iter()
            .map(|l| {
                let s = (0.5 * l).sinh();
                2.0 * s * s
            })
            .sum();
        n.ln() + (excess / n).ln_1p()
    } else {
        // ln cosh x = |x| - ln 2 + ln1p(e^{-2|x|})
        let terms: Vec<f64> = eigs
            .iter()
            .map(|l| l.abs() - std::f64::consts::LN_2 + (-2.0 * l.abs()).exp().ln_1p())
            .collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    }
}

/// Dilation `[[0, A], [Aᵀ, 0]]` of an `m x n` matrix.
pub fn dilation(a: &Matrix) -> SymMatrix {
    let (m, n) = (a.rows(), a.cols());
    SymMatrix::from_fn(m + n, |i, j| if i < m && j >= m { a.get(i, j - m) } else { 0.0 })
}

/// Largest singular value, read off as `λ_max` of the dilation.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    Ok(dilation(a).eigenvalues()?[0].max(0.0))
}

/// Loewner order test `A ⪯ B`, i.e. `λ_min(B - A) >= -slack`.
pub fn psd_leq(a: &SymMatrix, b: &SymMatrix, slack: f64) -> Result<bool> {
    if slack < 0.0 {
        return Err(Error::InvalidInput("psd_leq slack must be non-negative".into()));
    }
    Ok(b.sub(a)?.min_eigenvalue()? >= -slack)
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = SymMatrix::new(2, vec![1.0, 2.0, 3.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { i: 0, j: 1 }));
        assert!(SymMatrix::new(0, vec![]).is_err());
    }

    #[test]
    fn diagonal_eigensystem() {
        let e = sym_eig(&SymMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        // eigenvectors are a permutation of the standard basis
        for j in 0..3 {
            let col = e.vectors.column(j);
            let ones = col.iter().filter(|v| v.abs() == 1.0).count();
            let zeros = col.iter().filter(|v| **v == 0.0).count();
            assert_eq!((ones, zeros), (1, 2));
        }
    }

    #[test]
    fn swap_matrix_spectrum() {
        let a = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let v = a.eigenvalues().unwrap();
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(v[1], -1.0, epsilon = 1e-15);
        assert_relative_eq!(operator_norm(&a.to_matrix()).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_sym(8, &mut rng);
        let e = a.eig().unwrap();
        let tol = tau_eig(a.spectral_norm().unwrap());
        assert!(e.reconstruct().max_abs_diff(&a) < 1e-10);
        assert!(e.orthogonality_defect() < tol);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let z = matrix_exp(&SymMatrix::zeros(4)).unwrap();
        assert!(z.max_abs_diff(&SymMatrix::identity(4)) < 1e-15);
        let d = matrix_exp(&SymMatrix::diag(&[0.5, -1.0, 2.0])).unwrap();
        let want = SymMatrix::diag(&[0.5f64.exp(), (-1.0f64).exp(), 2.0f64.exp()]);
        assert!(d.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn rank_one_exp_unit_vector() {
        let e1 = [1.0, 0.0, 0.0];
        let plus = rank_one_exp(&e1, Sign::Plus).unwrap();
        let mut want = SymMatrix::identity(3);
        want.set(0, 0, std::f64::consts::E);
        assert!(plus.max_abs_diff(&want) < 1e-15);
        let minus = rank_one_exp(&e1, Sign::Minus).unwrap();
        want.set(0, 0, 1.0 - (1.0 - (-1.0f64).exp()));
        assert!(minus.max_abs_diff(&want) < 1e-15);
        let via_eig = matrix_exp(&SymMatrix::outer(&e1)).unwrap();
        assert!(via_eig.max_abs_diff(&plus) < 1e-14);
    }

    #[test]
    fn rank_one_exp_zero_vector_is_domain_error() {
        assert!(matches!(rank_one_exp(&[0.0, 0.0], Sign::Plus), Err(Error::Domain(_))));
    }

    #[test]
    fn trace_cosh_small_cases() {
        assert_eq!(trace_cosh(&SymMatrix::zeros(5)).unwrap(), 5.0);
        let t = trace_cosh(&SymMatrix::diag(&[1.0, -1.0])).unwrap();
        assert_relative_eq!(t, 2.0 * 1.0f64.cosh(), max_relative = 1e-15);
    }

    #[test]
    fn trace_cosh_overflow_is_reported() {
        let a = SymMatrix::diag(&[800.0, 1.0]);
        assert!(matches!(trace_cosh(&a), Err(Error::Overflow { .. })));
        // the log-domain route keeps working
        let l = log_trace_cosh(&a).unwrap();
        assert_relative_eq!(l, 800.0 - std::f64::consts::LN_2, max_relative = 1e-14);
    }

    #[test]
    fn log_sum_cosh_matches_direct_in_both_regimes() {
        let small = [0.1, -0.3, 2.0, 0.0];
        let direct: f64 = small.iter().map(|l: &f64| l.cosh()).sum::<f64>().ln();
        assert_relative_eq!(log_sum_cosh(&small), direct, max_relative = 1e-14);
        let big = [31.0, -29.0, 0.5];
        let direct: f64 = big.iter().map(|l: &f64| l.cosh()).sum::<f64>().ln();
        assert_relative_eq!(log_sum_cosh(&big), direct, max_relative = 1e-14);
    }

    #[test]
    fn dilation_small_cases() {
        let d = dilation(&Matrix::from_rows(&[vec![2.0]]).unwrap());
        let v = d.eigenvalues().unwrap();
        assert_relative_eq!(v[0], 2.0);
        assert_relative_eq!(v[1], -2.0);
        let z = dilation(&Matrix::zeros(2, 3));
        assert_eq!(z, SymMatrix::zeros(5));
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let a = SymMatrix::diag(&[-3.0, 2.0]);
        assert_relative_eq!(operator_norm(&a.to_matrix()).unwrap(), 3.0, epsilon = 1e-14);
        assert_relative_eq!(a.spectral_norm().unwrap(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn operator_norm_matches_gram_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let rows: Vec<Vec<f64>> =
                (0..3).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let a = Matrix::from_rows(&rows).unwrap();
            let gram_top = a.gram().eigenvalues().unwrap()[0].sqrt();
            assert!((operator_norm(&a).unwrap() - gram_top).abs() < 1e-10);
        }
    }

    #[test]
    fn psd_order_basic() {
        let i = SymMatrix::identity(3);
        let two = i.scale(2.0);
        assert!(psd_leq(&i, &two, 0.0).unwrap());
        assert!(!psd_leq(&two, &i, 0.0).unwrap());
        assert!(psd_leq(&i, &i, 0.0).unwrap());
        assert!(psd_leq(&i, &SymMatrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn non_finite_input_does_not_converge() {
        let a = SymMatrix::from_fn(3, |i, j| if i != j { f64::NAN } else { 1.0 });
        assert!(matches!(a.eigenvalues(), Err(Error::NonConvergence { n: 3, .. })));
    }
}
