#![allow(dead_code)]

use hcosh::{Matrix, SymMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, scale * rng.random_range(-1.0..1.0));
        }
    }
    m
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for _ in 0..n {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        m.add_outer(&v, 1.0).unwrap();
    }
    m
}

/// Random symmetric matrix rescaled to spectral norm exactly 1.
pub fn random_unit_norm(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let m = random_sym(rng, n, 1.0);
    let s = oracle_eigenvalues(&m).iter().fold(0.0f64, |a, l| a.max(l.abs()));
    m.scale(1.0 / s)
}

/// m×n matrix with orthonormal columns, by modified Gram–Schmidt on Gaussian-ish columns.
pub fn orthonormal_columns(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.iter().map(|x| x / norm).collect());
        }
    }
    let mut a = Matrix::zeros(m, n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..m {
            a.set(i, j, c[i]);
        }
    }
    a
}

pub fn to_nalgebra(m: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.n(), m.n(), m.as_slice())
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> SymMatrix {
    let n = m.nrows();
    SymMatrix::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Eigenvalues by nalgebra, descending.
pub fn oracle_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = to_nalgebra(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

pub fn oracle_norm(m: &SymMatrix) -> f64 {
    oracle_eigenvalues(m).iter().fold(0.0f64, |a, l| a.max(l.abs()))
}

/// exp(A) by nalgebra's eigendecomposition.
pub fn oracle_exp(m: &SymMatrix) -> DMatrix<f64> {
    let e = to_nalgebra(m).symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f64::exp));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

pub fn oracle_trace_cosh(m: &SymMatrix) -> f64 {
    oracle_eigenvalues(m).iter().map(|l| l.cosh()).sum()
}
