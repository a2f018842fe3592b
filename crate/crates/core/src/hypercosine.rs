//! Greedy matrix hyperbolic cosine selection.
//!
//! Given an indexed family `f_j : [m] -> S^{n x n}` with `||f_j(k)|| <= γ`,
//! zero mean under `weights` and variance bounded by `ρ²`, the selector picks
//! one index per step so that the potential
//! `Φ = 2 tr cosh(θ Σ f_j(x_j))`, `θ = ε/γ`, never grows by more than
//! `exp(ε²ρ²/γ²)` per step. The final average then satisfies
//! `||(1/t) Σ f_j(x_j)|| <= γ ln(2n)/(tε) + ερ²/γ`.
//!
//! Potentials are compared as logarithms throughout. Ties are broken toward the
//! smallest index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{log_sum_cosh, SymMatrix};

/// Relative slack under which two log-potentials count as tied.
pub const TIE_RTOL: f64 = 1e-12;

/// Enumeration guard for [`verify_family`]: `m * n^2` must not exceed this.
pub const VERIFY_GUARD: u128 = 100_000_000;

/// Abstract sample family fed to [`select_indices`].
///
/// Indices `step` and `k` are 0-based.
pub trait SampleFamily: Sync {
    /// Matrix dimension `n`.
    fn dim(&self) -> usize;
    /// Index-set size `m`.
    fn len(&self) -> usize;
    /// Number of distinct step functions, `None` for a stationary family.
    fn steps(&self) -> Option<usize> {
        None
    }
    fn evaluate(&self, step: usize, k: usize) -> Result<SymMatrix>;
    fn gamma(&self) -> f64;
    fn rho_sq(&self) -> f64;
    /// Sampling distribution over `[m]`.
    fn weights(&self) -> Vec<f64>;

    /// Specialized evaluation of `ln(2 tr cosh(theta * (running + f_step(k))))`
    /// for every `k`. Returning `None` selects the dense eigensolver path.
    fn candidate_log_potentials(
        &self,
        _step: usize,
        _running: &SymMatrix,
        _theta: f64,
    ) -> Option<Result<Vec<f64>>> {
        None
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Output of [`select_indices`].
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    /// `||(1/t) Σ f_j(x_j)||`, from a direct eigensolve.
    pub final_norm: f64,
    /// `γ ln(2n)/(tε) + ερ²/γ`.
    pub bound: f64,
    /// `ln Φ^{(i)}` for `i = 0..=t`.
    pub potential_trace: Vec<f64>,
    pub epsilon: f64,
    pub theta: f64,
    /// Unscaled running sum `Σ f_j(x_j)`.
    pub sum: SymMatrix,
}

impl SelectionResult {
    /// Largest per-step ratio `Φ^{(i)} / Φ^{(i-1)}` as a logarithm.
    pub fn max_log_growth(&self) -> f64 {
        self.potential_trace.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Guarantee `γ ln(2n)/(tε) + ερ²/γ` on the final average.
pub fn selection_bound(gamma: f64, rho_sq: f64, n: usize, t: usize, epsilon: f64) -> f64 {
    gamma * (2.0 * n as f64).ln() / (t as f64 * epsilon) + epsilon * rho_sq / gamma
}

/// Index of the smallest value; values within `TIE_RTOL` of the minimum
/// resolve to the lowest index.
pub fn argmin_tie_lowest(values: &[f64]) -> Option<usize> {
    let best = values.iter().cloned().filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let slack = TIE_RTOL * best.abs().max(1.0);
    values.iter().position(|&v| v <= best + slack)
}

/// `ln(2 tr cosh(M))` by eigensolve.
pub fn log_potential(m: &SymMatrix) -> Result<f64> {
    Ok(std::f64::consts::LN_2 + log_sum_cosh(&m.eigenvalues()?))
}

fn generic_log_potentials(
    family: &dyn SampleFamily,
    step: usize,
    running: &SymMatrix,
    theta: f64,
) -> Result<Vec<f64>> {
    let out: Vec<Result<f64>> = (0..family.len())
        .into_par_iter()
        .map(|k| {
            let f = family
                .evaluate(step, k)
                .map_err(|e| Error::Oracle { step, index: k, source: Box::new(e) })?;
            let mut cand = running.add(&f)?;
            cand = cand.scale(theta);
            log_potential(&cand)
        })
        .collect();
    out.into_iter().collect()
}

/// Log-potentials of every candidate at `step`, using the family's
/// specialized route when it has one.
pub fn candidate_potentials(
    family: &dyn SampleFamily,
    step: usize,
    running: &SymMatrix,
    theta: f64,
) -> Result<Vec<f64>> {
    match family.candidate_log_potentials(step, running, theta) {
        Some(r) => r,
        None => generic_log_potentials(family, step, running, theta),
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Greedy selection of `t` indices (0-based) minimizing the cosh potential.
pub fn select_indices(family: &dyn SampleFamily, epsilon: f64, t: usize) -> Result<SelectionResult> {
    select_indices_with(family, epsilon, t, |_, _, _| Ok(()))
}

/// As [`select_indices`], calling `observe(step, candidate_log_potentials, chosen)`
/// after every step. An error from the observer aborts the run.
pub fn select_indices_with(
    family: &dyn SampleFamily,
    epsilon: f64,
    t: usize,
    mut observe: impl FnMut(usize, &[f64], usize) -> Result<()>,
) -> Result<SelectionResult> {
    check_epsilon(epsilon)?;
    if t == 0 {
        return Err(Error::InvalidInput("t must be at least 1".into()));
    }
    if family.is_empty() {
        return Err(Error::InvalidInput("sample family has no candidates".into()));
    }
    if let Some(s) = family.steps() {
        if t > s {
            return Err(Error::InvalidInput(format!("family defines {s} steps, {t} requested")));
        }
    }
    let n = family.dim();
    let gamma = family.gamma();
    let rho_sq = family.rho_sq();
    if !(gamma > 0.0 && rho_sq > 0.0) {
        return Err(Error::InvalidInput("gamma and rho_sq must be positive".into()));
    }
    let theta = epsilon / gamma;
    let mut running = SymMatrix::zeros(n);
    let mut trace = vec![(2.0 * n as f64).ln()];
    let mut indices = Vec::with_capacity(t);
    for step in 0..t {
        let logs = candidate_potentials(family, step, &running, theta)?;
        let k = argmin_tie_lowest(&logs)
            .ok_or_else(|| Error::Domain(format!("no finite candidate potential at step {step}")))?;
        let f = family
            .evaluate(step, k)
            .map_err(|e| Error::Oracle { step, index: k, source: Box::new(e) })?;
        running.add_scaled(&f, 1.0)?;
        trace.push(logs[k]);
        indices.push(k);
        observe(step, &logs, k)?;
    }
    let final_norm = running.spectral_norm()? / t as f64;
    Ok(SelectionResult {
        indices,
        final_norm,
        bound: selection_bound(gamma, rho_sq, n, t, epsilon),
        potential_trace: trace,
        epsilon,
        theta,
        sum: running,
    })
}

/// Stationary family backed by explicit matrices.
#[derive(Debug, Clone)]
pub struct MatrixFamily {
    mats: Vec<SymMatrix>,
    weights: Vec<f64>,
    gamma: f64,
    rho_sq: f64,
}

impl MatrixFamily {
    /// Family with caller-declared bounds.
    pub fn new(mats: Vec<SymMatrix>, weights: Vec<f64>, gamma: f64, rho_sq: f64) -> Result<Self> {
        validate_members(&mats, &weights)?;
        Ok(Self { mats, weights, gamma, rho_sq })
    }

    /// Subtracts the weighted mean from every member and sets `γ` and `ρ²` to
    /// the exact norm and variance of the centered family.
    pub fn centered(mats: Vec<SymMatrix>, weights: Vec<f64>) -> Result<Self> {
        validate_members(&mats, &weights)?;
        let n = mats[0].n();
        let mut mean = SymMatrix::zeros(n);
        for (m, &w) in mats.iter().zip(&weights) {
            mean.add_scaled(m, w)?;
        }
        let centered: Vec<SymMatrix> = mats.iter().map(|m| m.sub(&mean)).collect::<Result<_>>()?;
        let (gamma, rho_sq) = exact_bounds(&centered, &weights)?;
        Ok(Self {
            mats: centered,
            weights,
            gamma: if gamma > 0.0 { gamma } else { 1.0 },
            rho_sq: if rho_sq > 0.0 { rho_sq } else { 1.0 },
        })
    }

    pub fn members(&self) -> &[SymMatrix] {
        &self.mats
    }
}

fn validate_members(mats: &[SymMatrix], weights: &[f64]) -> Result<()> {
    if mats.is_empty() {
        return Err(Error::InvalidInput("empty matrix family".into()));
    }
    if weights.len() != mats.len() {
        return Err(Error::DimensionMismatch { expected: mats.len(), got: weights.len() });
    }
    let n = mats[0].n();
    for m in mats {
        if m.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.n() });
        }
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("weights must be a probability vector".into()));
    }
    Ok(())
}

/// `(max_k ||f_k||, ||Σ w_k f_k²||)`.
pub fn exact_bounds(mats: &[SymMatrix], weights: &[f64]) -> Result<(f64, f64)> {
    let n = mats[0].n();
    let mut gamma: f64 = 0.0;
    let mut second = SymMatrix::zeros(n);
    for (m, &w) in mats.iter().zip(weights) {
        gamma = gamma.max(m.spectral_norm()?);
        let sq = SymMatrix::symmetric_part(&m.mul(m)?)?;
        second.add_scaled(&sq, w)?;
    }
    Ok((gamma, second.spectral_norm()?))
}

impl SampleFamily for MatrixFamily {
    fn dim(&self) -> usize {
        self.mats[0].n()
    }
    fn len(&self) -> usize {
        self.mats.len()
    }
    fn evaluate(&self, _step: usize, k: usize) -> Result<SymMatrix> {
        self.mats
            .get(k)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("candidate index {k} out of range")))
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
    fn rho_sq(&self) -> f64 {
        self.rho_sq
    }
    fn weights(&self) -> Vec<f64> {
        self.weights.clone()
    }
}

/// Non-stationary balancing family: at step `j` the candidates are
/// `+M_j` (index 0) and `-M_j` (index 1), each with weight 1/2.
#[derive(Debug, Clone)]
pub struct SignFamily {
    mats: Vec<SymMatrix>,
    gamma: f64,
    rho_sq: f64,
}

impl SignFamily {
    pub fn new(mats: Vec<SymMatrix>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::InvalidInput("no matrices to balance".into()));
        }
        let n = mats[0].n();
        for (i, m) in mats.iter().enumerate() {
            if m.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.n() });
            }
            let norm = m.spectral_norm()?;
            if norm > 1.0 + 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "matrix {} has spectral norm {norm} > 1",
                    i + 1
                )));
            }
        }
        // E f² = M_j² has norm ||M_j||² ≤ 1
        Ok(Self { mats, gamma: 1.0, rho_sq: 1.0 })
    }
}

impl SampleFamily for SignFamily {
    fn dim(&self) -> usize {
        self.mats[0].n()
    }
    fn len(&self) -> usize {
        2
    }
    fn steps(&self) -> Option<usize> {
        Some(self.mats.len())
    }
    fn evaluate(&self, step: usize, k: usize) -> Result<SymMatrix> {
        let m = self
            .mats
            .get(step)
            .ok_or_else(|| Error::InvalidInput(format!("step {step} out of range")))?;
        match k {
            0 => Ok(m.clone()),
            1 => Ok(m.scale(-1.0)),
            _ => Err(Error::InvalidInput(format!("candidate index {k} out of range"))),
        }
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
    fn rho_sq(&self) -> f64 {
        self.rho_sq
    }
    fn weights(&self) -> Vec<f64> {
        vec![0.5, 0.5]
    }
}

/// Signs chosen by the balancing game together with `||Σ s_i M_i||`.
#[derive(Debug, Clone)]
pub struct Balance {
    pub signs: Vec<i8>,
    pub value: f64,
    pub bound: f64,
}

/// `2 sqrt(n ln(2n))`.
pub fn balance_bound(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (n * (2.0 * n).ln()).sqrt()
}

/// Deterministic signs with `||Σ s_i M_i|| <= 2 sqrt(n ln 2n)` for `n`
/// matrices of norm at most 1, where `n` is the number of matrices.
pub fn balance_matrices(mats: &[SymMatrix]) -> Result<Balance> {
    let family = SignFamily::new(mats.to_vec())?;
    let n = mats.len();
    let dim = mats[0].n();
    let epsilon = ((2.0 * dim as f64).ln() / n as f64).sqrt().min(0.999_999);
    let sel = select_indices(&family, epsilon, n)?;
    let signs: Vec<i8> = sel.indices.iter().map(|&k| if k == 0 { 1 } else { -1 }).collect();
    Ok(Balance { value: sel.final_norm * n as f64, bound: balance_bound(n), signs })
}

/// `||Σ s_i M_i||`.
pub fn signed_sum_norm(mats: &[SymMatrix], signs: &[i8]) -> Result<f64> {
    if mats.len() != signs.len() || mats.is_empty() {
        return Err(Error::DimensionMismatch { expected: mats.len(), got: signs.len() });
    }
    let mut sum = SymMatrix::zeros(mats[0].n());
    for (m, &s) in mats.iter().zip(signs) {
        sum.add_scaled(m, s as f64)?;
    }
    sum.spectral_norm()
}

/// Uniform random signs from a ChaCha8 stream seeded with `seed`.
pub fn random_signs_baseline(mats: &[SymMatrix], seed: u64) -> Result<Balance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs: Vec<i8> = mats.iter().map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let value = signed_sum_norm(mats, &signs)?;
    Ok(Balance { signs, value, bound: balance_bound(mats.len()) })
}

/// Enumeration of the family invariants.
#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub max_norm: f64,
    pub gamma: f64,
    /// Max-entry norm of `Σ w_k f(k)`, worst over steps.
    pub zero_mean_residual: f64,
    /// `||Σ w_k f(k)²||`, worst over steps.
    pub variance: f64,
    pub rho_sq: f64,
    pub steps_checked: usize,
}

impl FamilyReport {
    pub fn norm_ok(&self) -> bool {
        self.max_norm <= self.gamma * (1.0 + 1e-9)
    }
    pub fn mean_ok(&self) -> bool {
        self.zero_mean_residual <= 1e-8
    }
    pub fn variance_ok(&self) -> bool {
        self.variance <= self.rho_sq * (1.0 + 1e-9)
    }
    pub fn ok(&self) -> bool {
        self.norm_ok() && self.mean_ok() && self.variance_ok()
    }
}

/// Enumerates every candidate of every step and measures the invariants.
pub fn verify_family(family: &dyn SampleFamily) -> Result<FamilyReport> {
    let m = family.len() as u128;
    let n = family.dim();
    let steps = family.steps().unwrap_or(1);
    let size = m * (n as u128) * (n as u128) * steps as u128;
    if size > VERIFY_GUARD {
        return Err(Error::GuardExceeded { what: "family enumeration", size, limit: VERIFY_GUARD });
    }
    let weights = family.weights();
    let mut report = FamilyReport {
        max_norm: 0.0,
        gamma: family.gamma(),
        zero_mean_residual: 0.0,
        variance: 0.0,
        rho_sq: family.rho_sq(),
        steps_checked: steps,
    };
    for step in 0..steps {
        let mut mean = SymMatrix::zeros(n);
        let mut second = SymMatrix::zeros(n);
        for (k, &w) in weights.iter().enumerate() {
            let f = family
                .evaluate(step, k)
                .map_err(|e| Error::Oracle { step, index: k, source: Box::new(e) })?;
            report.max_norm = report.max_norm.max(f.spectral_norm()?);
            mean.add_scaled(&f, w)?;
            second.add_scaled(&SymMatrix::symmetric_part(&f.mul(&f)?)?, w)?;
        }
        report.zero_mean_residual = report.zero_mean_residual.max(mean.max_abs());
        report.variance = report.variance.max(second.spectral_norm()?);
    }
    Ok(report)
}

/// Step count and accuracy parameter meeting a target bound.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub t: usize,
    pub epsilon: f64,
    pub bound: f64,
    pub formula: &'static str,
}

/// The `ε` minimizing `γ ln(2n)/(tε) + ερ²/γ` for fixed `t`, namely
/// `γ sqrt(ln(2n)/(tρ²))`, capped just below 1.
pub fn optimal_epsilon(gamma: f64, rho_sq: f64, n: usize, t: usize) -> f64 {
    let e = gamma * ((2.0 * n as f64).ln() / (t as f64 * rho_sq)).sqrt();
    e.min(0.999)
}

/// Smallest plan whose bound is at most `target`.
///
/// With the unconstrained optimum the bound is `2 sqrt(ρ² ln(2n)/t)`, so
/// `t = ceil(4ρ² ln(2n)/target²)`. When that optimum would need `ε >= 1`,
/// `ε` is capped at 0.999 and `t` solves the bound for that `ε`.
pub fn plan_steps(gamma: f64, rho_sq: f64, n: usize, target: f64) -> Result<StepPlan> {
    if !(target > 0.0 && gamma > 0.0 && rho_sq > 0.0) {
        return Err(Error::InvalidInput("target, gamma and rho_sq must be positive".into()));
    }
    let ln2n = (2.0 * n as f64).ln();
    let t = (4.0 * rho_sq * ln2n / (target * target)).ceil().max(1.0) as usize;
    let eps = optimal_epsilon(gamma, rho_sq, n, t);
    if selection_bound(gamma, rho_sq, n, t, eps) <= target * (1.0 + 1e-12) {
        return Ok(StepPlan {
            t,
            epsilon: eps,
            bound: selection_bound(gamma, rho_sq, n, t, eps),
            formula: "t = ceil(4 rho^2 ln(2n) / target^2), eps = gamma sqrt(ln(2n) / (t rho^2))",
        });
    }
    let eps = 0.999;
    let room = target - eps * rho_sq / gamma;
    if room <= 0.0 {
        return Err(Error::Domain(format!(
            "target {target} is below the variance floor {} reachable with eps < 1",
            eps * rho_sq / gamma
        )));
    }
    let t = (gamma * ln2n / (eps * room)).ceil().max(1.0) as usize;
    Ok(StepPlan {
        t,
        epsilon: eps,
        bound: selection_bound(gamma, rho_sq, n, t, eps),
        formula: "eps = 0.999, t = ceil(gamma ln(2n) / (eps (target - eps rho^2 / gamma)))",
    })
}
