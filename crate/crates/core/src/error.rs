use thiserror::Error;

/// Errors raised by the linear algebra kernels and the sparsification drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric: entry ({i}, {j}) differs from ({j}, {i})")]
    NotSymmetric { i: usize, j: usize },

    #[error("Jacobi eigensolver did not converge for n = {n} (off-diagonal residual {residual:e})")]
    NonConvergence { n: usize, residual: f64 },

    #[error("trace cosh overflows: max |eigenvalue| = {max_abs} exceeds the exp range")]
    Overflow { max_abs: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} guard exceeded: {size} > {limit}")]
    GuardExceeded { what: &'static str, size: u128, limit: u128 },

    #[error("sample oracle failed at step {step}, index {index}: {source}")]
    Oracle {
        step: usize,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("certification failed: {metric} = {achieved} exceeds bound {bound}")]
    Certification { metric: &'static str, achieved: f64, bound: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
