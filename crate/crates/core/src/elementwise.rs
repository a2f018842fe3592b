//! Entry-wise sparsification of symmetric matrices.
//!
//! Two routes are provided. The generic sparsifier runs the greedy selector on
//! dilations of rescaled single-entry matrices. The SDD route writes
//! `A = CCᵀ + diag(A) - R` with one column of `C` per off-diagonal pair and then
//! sparsifies `CCᵀ`, either by column sampling or with [`crate::spectral`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypercosine::{optimal_epsilon, select_indices, SampleFamily, SelectionResult};
use crate::isotropic::secular_eigs;
use crate::linalg::{dilation, log_sum_cosh, operator_norm, Matrix, SymMatrix};
use crate::spectral::{spectral_sparsify_with, OuterProductSum, SpectralOptions};

/// Largest dimension accepted by [`sparsify_generic`].
pub const GENERIC_MAX_N: usize = 64;

/// `(||A||_∞ / ||A||)²`, the least `θ` for which `A` is `θ`-SDD.
pub fn theta_of(a: &SymMatrix) -> Result<f64> {
    let norm = a.spectral_norm()?;
    if norm == 0.0 {
        return Err(Error::InvalidInput("theta is undefined for the zero matrix".into()));
    }
    Ok((a.inf_norm() / norm).powi(2))
}

/// `||A||_F² / ||A||²` from the entries.
pub fn stable_rank(a: &SymMatrix) -> Result<f64> {
    let norm = a.spectral_norm()?;
    if norm == 0.0 {
        return Err(Error::InvalidInput("stable rank is undefined for the zero matrix".into()));
    }
    Ok(a.frobenius_norm().powi(2) / (norm * norm))
}

/// `Σ λ² / max λ²` from the spectrum.
pub fn stable_rank_spectral(a: &SymMatrix) -> Result<f64> {
    let eig = a.eigenvalues()?;
    let top = eig.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if top == 0.0 {
        return Err(Error::InvalidInput("stable rank is undefined for the zero matrix".into()));
    }
    Ok(eig.iter().map(|l| l * l).sum::<f64>() / (top * top))
}

/// Zeroes entries with `|A_ij| < ε/(2n)`.
pub fn zero_small_entries(a: &SymMatrix, epsilon: f64) -> SymMatrix {
    let cut = epsilon / (2.0 * a.n() as f64);
    SymMatrix::from_fn(a.n(), |i, j| {
        let v = a.get(i, j);
        if v.abs() < cut {
            0.0
        } else {
            v
        }
    })
}

/// Sparse symmetric matrix in upper-triangular coordinate form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsifiedMatrix {
    pub n: usize,
    /// `(i, j, value)` with `i <= j`, sorted, non-zero values only.
    pub entries: Vec<(usize, usize, f64)>,
    /// Non-zeros of the full matrix (off-diagonal entries count twice).
    pub nnz: usize,
    /// Certified `||A - Ã||`, when computed.
    pub error: Option<f64>,
}

impl SparsifiedMatrix {
    pub fn from_sym(m: &SymMatrix) -> Self {
        let n = m.n();
        let mut entries = Vec::new();
        let mut nnz = 0;
        for i in 0..n {
            for j in i..n {
                let v = m.get(i, j);
                if v != 0.0 {
                    entries.push((i, j, v));
                    nnz += if i == j { 1 } else { 2 };
                }
            }
        }
        Self { n, entries, nnz, error: None }
    }

    pub fn to_sym(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.n);
        for &(i, j, v) in &self.entries {
            m.set(i, j, v);
        }
        m
    }

    fn certify(mut self, a: &SymMatrix) -> Result<Self> {
        self.error = Some(a.sub(&self.to_sym())?.spectral_norm()?);
        Ok(self)
    }
}

/// Dilation family `h(l) = D(A_l/p_l · E_l - A)` over the non-zero entries of
/// `A`, with `p_l = A_l²/||A||_F²` and entries enumerated row by row.
pub struct EntryFamily {
    n: usize,
    a: Matrix,
    /// `(row, col)` of every candidate in row-major order.
    entries: Vec<(usize, usize)>,
    coef: Vec<f64>,
    p: Vec<f64>,
    gamma: f64,
    rho_sq: f64,
}

impl EntryFamily {
    /// `γ` and `ρ²` are supplied by the caller.
    pub fn new(a: &SymMatrix, gamma: f64, rho_sq: f64) -> Result<Self> {
        let n = a.n();
        let frob2 = a.frobenius_norm().powi(2);
        if frob2 == 0.0 {
            return Err(Error::InvalidInput("cannot sparsify the zero matrix".into()));
        }
        let mut entries = Vec::new();
        let mut coef = Vec::new();
        let mut p = Vec::new();
        for l in 0..n * n {
            let (i, j) = (l / n, l % n);
            let v = a.get(i, j);
            if v != 0.0 {
                entries.push((i, j));
                p.push(v * v / frob2);
                coef.push(frob2 / v);
            }
        }
        Ok(Self { n, a: a.to_matrix(), entries, coef, p, gamma, rho_sq })
    }

    pub fn entry(&self, k: usize) -> (usize, usize) {
        self.entries[k]
    }

    /// `A_l / p_l` for candidate `k`.
    pub fn coefficient(&self, k: usize) -> f64 {
        self.coef[k]
    }

    fn block(&self, k: usize) -> Matrix {
        let mut m = self.a.scale(-1.0);
        let (i, j) = self.entries[k];
        m.set(i, j, m.get(i, j) + self.coef[k]);
        m
    }
}

impl SampleFamily for EntryFamily {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    fn evaluate(&self, _step: usize, k: usize) -> Result<SymMatrix> {
        Ok(dilation(&self.block(k)))
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn rho_sq(&self) -> f64 {
        self.rho_sq
    }

    fn weights(&self) -> Vec<f64> {
        self.p.clone()
    }

    /// The dilation of `X` has eigenvalues `±σ(X)`. A candidate changes one
    /// entry `(a, b)` of `Y = running - A`, so `X'ᵀX' = M_a + x xᵀ` with
    /// `M_a = YᵀY - y_a y_aᵀ` and `x = y_a + c e_b`. One eigensolve of `M_a`
    /// per row serves every candidate in that row through a secular solve.
    fn candidate_log_potentials(&self, _step: usize, running: &SymMatrix, theta: f64) -> Option<Result<Vec<f64>>> {
        Some(self.fast_potentials(running, theta))
    }
}

impl EntryFamily {
    fn fast_potentials(&self, running: &SymMatrix, theta: f64) -> Result<Vec<f64>> {
        let n = self.n;
        let y = Matrix::new(
            n,
            n,
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| running.get(i, n + j) - self.a.get(i, j)).collect(),
        )?;
        let gram = y.gram();
        let mut rows: Vec<usize> = self.entries.iter().map(|e| e.0).collect();
        rows.dedup();
        let per_row: Vec<Vec<(usize, f64)>> = rows
            .par_iter()
            .map(|&a| -> Result<Vec<(usize, f64)>> {
                let mut m = gram.clone();
                m.add_outer(y.row(a), -1.0)?;
                let eig = m.eig()?;
                let q = &eig.vectors;
                let base: Vec<f64> = (0..n).map(|c| (0..n).map(|r| q.get(r, c) * y.get(a, r)).sum()).collect();
                let mut out = Vec::new();
                for (k, &(row, b)) in self.entries.iter().enumerate() {
                    if row != a {
                        continue;
                    }
                    let c = self.coef[k];
                    let z: Vec<f64> = (0..n).map(|col| base[col] + c * q.get(b, col)).collect();
                    let sec = secular_eigs(&eig.values, &z, false)?;
                    let sv: Vec<f64> = sec.values.iter().map(|&l| theta * l.max(0.0).sqrt()).collect();
                    out.push((k, 4f64.ln() + log_sum_cosh(&sv)));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut logs = vec![0.0; self.entries.len()];
        for (k, v) in per_row.into_iter().flatten() {
            logs[k] = v;
        }
        Ok(logs)
    }
}

/// Same candidates as [`EntryFamily`], always evaluated by dense eigensolves.
pub struct DenseEntryFamily<'a>(pub &'a EntryFamily);

impl SampleFamily for DenseEntryFamily<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn len(&self) -> usize {
        self.0.len()
    }
    fn evaluate(&self, step: usize, k: usize) -> Result<SymMatrix> {
        self.0.evaluate(step, k)
    }
    fn gamma(&self) -> f64 {
        self.0.gamma
    }
    fn rho_sq(&self) -> f64 {
        self.0.rho_sq
    }
    fn weights(&self) -> Vec<f64> {
        self.0.weights()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenericPlan {
    pub stable_rank: f64,
    pub gamma: f64,
    pub rho_sq: f64,
    pub t: usize,
    /// `28 n ln(√2 n) sr / ε²`.
    pub budget: f64,
}

pub fn generic_plan(n: usize, stable_rank: f64, epsilon: f64) -> GenericPlan {
    let nf = n as f64;
    let budget = 28.0 * nf * (std::f64::consts::SQRT_2 * nf).ln() * stable_rank / (epsilon * epsilon);
    GenericPlan {
        stable_rank,
        gamma: 4.0 * nf * stable_rank / epsilon,
        rho_sq: nf * stable_rank,
        t: (budget.ceil() as usize).max(1),
        budget,
    }
}

#[derive(Debug, Clone)]
pub struct GenericResult {
    /// Symmetric part of the greedy average, in the units of the input.
    pub matrix: SparsifiedMatrix,
    /// `||A||`, the normalization factor.
    pub scale: f64,
    /// Certified `||A/||A|| - Ã/||A|| ||`.
    pub normalized_error: f64,
    /// The same error before symmetrization.
    pub unsymmetrized_error: f64,
    /// Error introduced by zeroing small entries (normalized units).
    pub zeroing_error: f64,
    pub plan: GenericPlan,
    /// Parameter handed to the selector.
    pub selector_epsilon: f64,
    /// `(row, col)` chosen at every step, 0-based.
    pub selected: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default)]
pub struct GenericOptions {
    /// Override of the step count.
    pub t: Option<usize>,
    /// Evaluate candidates by dense eigensolves instead of secular updates.
    pub dense: bool,
    pub certify: bool,
}

pub fn sparsify_generic(a: &SymMatrix, epsilon: f64) -> Result<GenericResult> {
    sparsify_generic_with(a, epsilon, &GenericOptions { certify: true, ..Default::default() })
}

pub fn sparsify_generic_with(a: &SymMatrix, epsilon: f64, opts: &GenericOptions) -> Result<GenericResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let n = a.n();
    if n > GENERIC_MAX_N {
        return Err(Error::GuardExceeded { what: "generic sparsifier dimension (use the sdd route)", size: n as u128, limit: GENERIC_MAX_N as u128 });
    }
    let scale = a.spectral_norm()?;
    if scale == 0.0 {
        return Err(Error::InvalidInput("cannot sparsify the zero matrix".into()));
    }
    let a1 = a.scale(1.0 / scale);
    let a2 = zero_small_entries(&a1, epsilon);
    let zeroing_error = a1.sub(&a2)?.spectral_norm()?;
    let mut plan = generic_plan(n, stable_rank(&a1)?, epsilon);
    if let Some(t) = opts.t {
        plan.t = t;
    }
    let family = EntryFamily::new(&a2, plan.gamma, plan.rho_sq)?;
    // the selector's ε minimizing its own bound, with the dilation dimension 2n
    let selector_epsilon = optimal_epsilon(plan.gamma, plan.rho_sq, 2 * n, plan.t);
    let sel: SelectionResult = if opts.dense {
        select_indices(&DenseEntryFamily(&family), selector_epsilon, plan.t)?
    } else {
        select_indices(&family, selector_epsilon, plan.t)?
    };
    let mut counts = vec![0usize; family.len()];
    for &k in &sel.indices {
        counts[k] += 1;
    }
    let mut approx = Matrix::zeros(n, n);
    for (k, &c) in counts.iter().enumerate().filter(|(_, c)| **c > 0) {
        let (i, j) = family.entry(k);
        approx.set(i, j, family.coefficient(k) * c as f64 / plan.t as f64);
    }
    let unsymmetrized_error = operator_norm(&a1.to_matrix().sub(&approx)?)?;
    let sym = SymMatrix::symmetric_part(&approx)?;
    let normalized_error = a1.sub(&sym)?.spectral_norm()?;
    if opts.certify && normalized_error > epsilon {
        return Err(Error::Certification { metric: "generic sparsifier error", achieved: normalized_error, bound: epsilon });
    }
    let mut matrix = SparsifiedMatrix::from_sym(&sym.scale(scale));
    matrix.error = Some(normalized_error * scale);
    Ok(GenericResult {
        matrix,
        scale,
        normalized_error,
        unsymmetrized_error,
        zeroing_error,
        plan,
        selector_epsilon,
        selected: sel.indices.iter().map(|&k| family.entry(k)).collect(),
    })
}

/// `A = CCᵀ + diag(A) - R`; the column for pair `(i, j, a)` is
/// `√|a| e_i + sign(a) √|a| e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SddDecomposition {
    pub n: usize,
    /// `(i, j, A_ij)` with `i < j` and `A_ij != 0`, row-major.
    pub pairs: Vec<(usize, usize, f64)>,
    pub diag: Vec<f64>,
    /// `R_i = Σ_{j≠i} |A_ij|`.
    pub r: Vec<f64>,
}

impl SddDecomposition {
    pub fn column(&self, k: usize) -> Vec<f64> {
        let (i, j, a) = self.pairs[k];
        let mut v = vec![0.0; self.n];
        v[i] = a.abs().sqrt();
        v[j] = a.signum() * a.abs().sqrt();
        v
    }

    /// `Σ_k w_k C_k C_kᵀ`, assembled from `|A_ij|` without square roots.
    pub fn weighted_cct(&self, w: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.n);
        for (&(i, j, a), &wk) in self.pairs.iter().zip(w) {
            if wk == 0.0 {
                continue;
            }
            m.set(i, i, m.get(i, i) + wk * a.abs());
            m.set(j, j, m.get(j, j) + wk * a.abs());
            m.set(i, j, m.get(i, j) + wk * a);
        }
        m
    }

    /// `C̃C̃ᵀ + diag(A) - R` for column weights `w`.
    pub fn assemble(&self, w: &[f64]) -> SymMatrix {
        let mut m = self.weighted_cct(w);
        for i in 0..self.n {
            m.set(i, i, m.get(i, i) + self.diag[i] - self.r[i]);
        }
        m
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.assemble(&vec![1.0; self.pairs.len()])
    }
}

pub fn sdd_decompose(a: &SymMatrix) -> SddDecomposition {
    let n = a.n();
    let mut pairs = Vec::new();
    let mut r = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = a.get(i, j);
            if v != 0.0 {
                pairs.push((i, j, v));
                r[i] += v.abs();
                r[j] += v.abs();
            }
        }
    }
    SddDecomposition { n, pairs, diag: (0..n).map(|i| a.get(i, i)).collect(), r }
}

#[derive(Debug, Clone)]
pub struct SddResult {
    pub matrix: SparsifiedMatrix,
    pub theta: f64,
    /// Number of samples (randomized) or the support budget (deterministic).
    pub t: usize,
    /// `n + 2t` (randomized) or `n + 2 ceil(n/ε'²)` (deterministic).
    pub nnz_budget: usize,
    pub inner_epsilon: Option<f64>,
    pub seed: Option<u64>,
}

/// `ceil(38 n θ ln(√2 n) / ε²)`.
pub fn sdd_sample_count(n: usize, theta: f64, epsilon: f64) -> usize {
    let nf = n as f64;
    ((38.0 * nf * theta * (std::f64::consts::SQRT_2 * nf).ln() / (epsilon * epsilon)).ceil() as usize).max(1)
}

/// Column sampling with `p_l ∝ ||C_l||²`; `norm_a` estimates `||A||`.
pub fn sdd_sparsify_randomized(a: &SymMatrix, norm_a: f64, epsilon: f64, seed: u64) -> Result<SddResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(norm_a > 0.0) {
        return Err(Error::InvalidInput("norm estimate must be positive".into()));
    }
    let n = a.n();
    let theta = (a.inf_norm() / norm_a).powi(2);
    let t = sdd_sample_count(n, theta, epsilon);
    let dec = sdd_decompose(a);
    let mut w = vec![0.0; dec.pairs.len()];
    if !dec.pairs.is_empty() {
        let mass: Vec<f64> = dec.pairs.iter().map(|p| 2.0 * p.2.abs()).collect();
        let total: f64 = mass.iter().sum();
        let dist = WeightedAliasIndex::new(mass.clone()).map_err(|e| Error::Domain(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..t {
            let l = dist.sample(&mut rng);
            w[l] += total / (mass[l] * t as f64);
        }
    }
    let matrix = SparsifiedMatrix::from_sym(&dec.assemble(&w));
    Ok(SddResult { matrix, theta, t, nnz_budget: n + 2 * t, inner_epsilon: None, seed: Some(seed) })
}

pub fn sdd_certify(a: &SymMatrix, result: SddResult) -> Result<SddResult> {
    Ok(SddResult { matrix: result.matrix.certify(a)?, ..result })
}

#[derive(Debug, Clone, Default)]
pub struct DeterministicOptions {
    /// Replaces `ε' = ε/(10√θ)` for the spectral stage.
    pub inner_epsilon: Option<f64>,
    pub spectral: SpectralOptions,
}

pub fn sdd_sparsify_deterministic(a: &SymMatrix, epsilon: f64) -> Result<SddResult> {
    sdd_sparsify_deterministic_with(a, epsilon, &DeterministicOptions::default())
}

pub fn sdd_sparsify_deterministic_with(a: &SymMatrix, epsilon: f64, opts: &DeterministicOptions) -> Result<SddResult> {
    // the stage-two Weyl step needs ε' < 1/2, which ε' = ε/(10√θ) meets for any ε <= 1/2
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    let n = a.n();
    let norm = a.spectral_norm()?;
    let theta = theta_of(a)?;
    let inner = opts.inner_epsilon.unwrap_or(epsilon / (10.0 * theta.sqrt()));
    let dec = sdd_decompose(a);
    let budget = crate::spectral::support_budget(n, inner);
    let w = if dec.pairs.is_empty() {
        Vec::new()
    } else {
        let ops = OuterProductSum::new((0..dec.pairs.len()).map(|k| dec.column(k)).collect())?;
        spectral_sparsify_with(&ops, inner, &opts.spectral)?.weights.s
    };
    let mut matrix = SparsifiedMatrix::from_sym(&dec.assemble(&w)).certify(a)?;
    if opts.inner_epsilon.is_none() && opts.spectral.certify {
        let err = matrix.error.unwrap_or(f64::INFINITY);
        if err > epsilon * norm {
            return Err(Error::Certification { metric: "sdd error", achieved: err, bound: epsilon * norm });
        }
    }
    matrix.error = matrix.error.or(Some(0.0));
    Ok(SddResult { matrix, theta, t: budget, nnz_budget: n + 2 * budget, inner_epsilon: Some(inner), seed: None })
}

/// Power iteration for `||A||` from a fixed start vector.
pub fn power_norm_estimate(a: &SymMatrix, max_iter: usize, rtol: f64) -> f64 {
    let n = a.n();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0).sqrt().fract()).collect();
    let mut est = 0.0;
    for _ in 0..max_iter {
        let nx = crate::linalg::norm2(&x);
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.mul_vec(&x);
        let next = crate::linalg::norm2(&y);
        let done = (next - est).abs() <= rtol * next;
        est = next;
        x = y;
        if done {
            break;
        }
    }
    est
}
