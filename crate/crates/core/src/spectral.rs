//! Spectral sparsification of sums of outer products.
//!
//! The pipeline whitens the vectors on the range of `A`, sparsifies them with
//! the isotropic greedy, and then reweights the survivors down to at most
//! `ceil(n/ε²)` vectors with the two-barrier method. Each stage loses a factor
//! `(1 ± ε)`, so the final certificate is `(1-ε)³ A ⪯ Ã ⪯ (1+ε)³ A`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypercosine::argmin_tie_lowest;
use crate::isotropic::{isotropic_sparsify_with, IsotropicOptions, RowFamily};
use crate::linalg::{dot, psd_leq, Matrix, SymMatrix};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// `A = Σ v_i ⊗ v_i` together with its generating vectors.
#[derive(Debug, Clone)]
pub struct OuterProductSum {
    n: usize,
    vectors: Vec<Vec<f64>>,
    a: SymMatrix,
}

impl OuterProductSum {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let n = vectors.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("no vectors".into()))?;
        if n == 0 {
            return Err(Error::InvalidInput("vectors must have positive length".into()));
        }
        let mut a = SymMatrix::zeros(n);
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::InvalidInput(format!("vector {} has length {}, expected {n}", i + 1, v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("vector {} has a non-finite entry", i + 1)));
            }
            a.add_outer(v, 1.0)?;
        }
        Ok(Self { n, vectors, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.a
    }

    /// `Σ s_i v_i ⊗ v_i`.
    pub fn weighted(&self, s: &[f64]) -> Result<SymMatrix> {
        if s.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: s.len() });
        }
        let mut out = SymMatrix::zeros(self.n);
        for (v, &w) in self.vectors.iter().zip(s) {
            if w != 0.0 {
                out.add_outer(v, w)?;
            }
        }
        Ok(out)
    }
}

/// Non-negative weights over the input vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub s: Vec<f64>,
    pub support_size: usize,
}

impl WeightVector {
    pub fn new(s: Vec<f64>) -> Self {
        let support_size = s.iter().filter(|&&w| w != 0.0).count();
        Self { s, support_size }
    }

    /// 0-based indices with non-zero weight.
    pub fn support(&self) -> Vec<usize> {
        self.s.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, _)| i).collect()
    }
}

/// Pseudo-inverse square root restricted to the numerical range of `A`.
#[derive(Debug, Clone)]
pub struct RangeWhitening {
    /// `A^{-1/2}` on the range, zero on the null space.
    pub inv_sqrt: SymMatrix,
    /// Orthonormal basis of the range, `n × rank`.
    pub basis: Matrix,
    /// Eigenvalues on the range, descending.
    pub values: Vec<f64>,
}

impl RangeWhitening {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `diag(λ)^{-1/2} Qᵀ v`, the whitened vector in range coordinates.
    pub fn whiten(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rank())
            .map(|j| {
                let q: f64 = (0..self.basis.rows()).map(|i| self.basis.get(i, j) * v[i]).sum();
                q / self.values[j].sqrt()
            })
            .collect()
    }
}

pub fn inverse_sqrt(a: &SymMatrix, rank_tol: f64) -> Result<RangeWhitening> {
    let eig = a.eig()?;
    let n = a.n();
    let top = eig.values[0].max(0.0);
    let floor = -1e-9 * top.max(1.0);
    if let Some(&low) = eig.values.last() {
        if low < floor {
            return Err(Error::InvalidInput(format!("matrix is not positive semi-definite: eigenvalue {low:e}")));
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&j| top > 0.0 && eig.values[j] >= rank_tol * top).collect();
    let mut basis = Matrix::zeros(n, keep.len());
    let mut inv_sqrt = SymMatrix::zeros(n);
    let mut values = Vec::with_capacity(keep.len());
    for (c, &j) in keep.iter().enumerate() {
        let col = eig.vectors.column(j);
        for (i, &x) in col.iter().enumerate() {
            basis.set(i, c, x);
        }
        inv_sqrt.add_outer(&col, 1.0 / eig.values[j].sqrt())?;
        values.push(eig.values[j]);
    }
    Ok(RangeWhitening { inv_sqrt, basis, values })
}

#[derive(Debug, Clone)]
pub struct SpectralOptions {
    pub rank_tol: f64,
    /// Skip a stage whose budget is at least the number of vectors it receives;
    /// keeping every vector with its current weight is then exact.
    pub skip_trivial_stages: bool,
    pub isotropic: IsotropicOptions,
    pub certify: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { rank_tol: DEFAULT_RANK_TOL, skip_trivial_stages: true, isotropic: IsotropicOptions::default(), certify: true }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub weights: WeightVector,
    pub rank: usize,
    /// Support after the isotropic stage (`None` if skipped).
    pub stage1_support: Option<usize>,
    /// `||B - I||` after the isotropic stage.
    pub stage1_residual: f64,
    pub stage2_skipped: bool,
    /// Smallest eigenvalue of `Ã - (1-ε)³A` and of `(1+ε)³A - Ã`.
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub slack: f64,
}

impl SpectralResult {
    pub fn certified(&self) -> bool {
        self.lower_margin >= -self.slack && self.upper_margin >= -self.slack
    }
}

/// `ceil(n/ε²)`.
pub fn support_budget(n: usize, epsilon: f64) -> usize {
    (n as f64 / (epsilon * epsilon)).ceil() as usize
}

pub fn spectral_sparsify(ops: &OuterProductSum, epsilon: f64) -> Result<SpectralResult> {
    spectral_sparsify_with(ops, epsilon, &SpectralOptions::default())
}

pub fn spectral_sparsify_with(ops: &OuterProductSum, epsilon: f64, opts: &SpectralOptions) -> Result<SpectralResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let m = ops.m();
    let white = inverse_sqrt(ops.matrix(), opts.rank_tol)?;
    let r = white.rank();
    if r == 0 {
        return Err(Error::InvalidInput("matrix has rank zero".into()));
    }
    let u: Vec<Vec<f64>> = ops.vectors().iter().map(|v| white.whiten(v)).collect();

    // Stage 1: isotropic sparsification of the whitened vectors.
    let t1 = opts.isotropic.t.unwrap_or_else(|| crate::isotropic::step_budget(opts.isotropic.c_iso, r, epsilon));
    let nonzero = u.iter().filter(|x| x.iter().any(|&v| v != 0.0)).count();
    let (tau, stage1_support, stage1_residual) = if opts.skip_trivial_stages && t1 >= nonzero {
        (vec![1.0; m], None, 0.0)
    } else {
        let rows = Matrix::from_rows(&u)?;
        let family = RowFamily::with_tolerance(&rows, 1e-6)?;
        let res = isotropic_sparsify_with(&family, epsilon, &opts.isotropic)?;
        let tau = res.weights_by_row(m);
        let support = tau.iter().filter(|&&w| w != 0.0).count();
        (tau, Some(support), res.residual)
    };

    // Stage 2: re-isotropize the survivors and reweight with the barrier method.
    let support: Vec<usize> = (0..m).filter(|&i| tau[i] != 0.0).collect();
    let mut b = SymMatrix::zeros(r);
    for &i in &support {
        b.add_outer(&u[i], tau[i])?;
    }
    let bw = inverse_sqrt(&b, opts.rank_tol)?;
    if bw.rank() != r {
        return Err(Error::Certification { metric: "isotropic stage rank", achieved: bw.rank() as f64, bound: r as f64 });
    }
    let w: Vec<Vec<f64>> = support
        .iter()
        .map(|&i| {
            let scaled: Vec<f64> = u[i].iter().map(|x| x * tau[i].sqrt()).collect();
            bw.inv_sqrt.mul_vec(&scaled)
        })
        .collect();
    let stage2_skipped = opts.skip_trivial_stages && support_budget(r, epsilon) >= w.len();
    let sigma = if stage2_skipped { WeightVector::new(vec![1.0; w.len()]) } else { bss_reweight(&w, epsilon)? };

    let mut s = vec![0.0; m];
    for (k, &i) in support.iter().enumerate() {
        s[i] = tau[i] * sigma.s[k];
    }
    let weights = WeightVector::new(s);
    let a = ops.matrix();
    let approx = ops.weighted(&weights.s)?;
    let slack = 1e-8 * a.spectral_norm()?.max(f64::MIN_POSITIVE);
    let lower_margin = approx.sub(&a.scale((1.0 - epsilon).powi(3)))?.min_eigenvalue()?;
    let upper_margin = a.scale((1.0 + epsilon).powi(3)).sub(&approx)?.min_eigenvalue()?;
    let result =
        SpectralResult { weights, rank: r, stage1_support, stage1_residual, stage2_skipped, lower_margin, upper_margin, slack };
    if opts.certify {
        if !result.certified() {
            return Err(Error::Certification {
                metric: "spectral sandwich",
                achieved: -(lower_margin.min(upper_margin)),
                bound: slack,
            });
        }
        let budget = support_budget(r, epsilon);
        if result.weights.support_size > budget {
            return Err(Error::Certification {
                metric: "support size",
                achieved: result.weights.support_size as f64,
                bound: budget as f64,
            });
        }
    }
    Ok(result)
}

/// Barrier-method constants for `d = 1/ε²` in dimension `n`.
#[derive(Debug, Clone, Copy)]
pub struct BarrierParams {
    pub steps: usize,
    pub delta_u: f64,
    pub delta_l: f64,
    pub eps_u: f64,
    pub eps_l: f64,
    pub u0: f64,
    pub l0: f64,
}

impl BarrierParams {
    pub fn new(n: usize, epsilon: f64) -> Self {
        let d = 1.0 / (epsilon * epsilon);
        let sd = d.sqrt();
        let nf = n as f64;
        let eps_u = (sd - 1.0) / (d + sd);
        Self {
            steps: support_budget(n, epsilon),
            delta_u: (sd + 1.0) / (sd - 1.0),
            delta_l: 1.0,
            eps_u,
            eps_l: 1.0 / sd,
            u0: nf / eps_u,
            l0: -nf * sd,
        }
    }
}

/// Two-barrier reweighting of vectors with `Σ u_i ⊗ u_i = I`: returns at most
/// `ceil(n/ε²)` non-zero weights with `(1-ε)² I ⪯ Σ s_i u_i ⊗ u_i ⪯ (1+ε)² I`.
pub fn bss_reweight(u: &[Vec<f64>], epsilon: f64) -> Result<WeightVector> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let n = u.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("no vectors".into()))?;
    let mut gram = SymMatrix::zeros(n);
    for v in u {
        gram.add_outer(v, 1.0)?;
    }
    let dev = gram.max_abs_diff(&SymMatrix::identity(n));
    if dev > 1e-6 {
        return Err(Error::InvalidInput(format!("vectors are not in isotropic position: deviation {dev:e}")));
    }
    let p = BarrierParams::new(n, epsilon);
    let mut a = SymMatrix::zeros(n);
    let mut s = vec![0.0; u.len()];
    let (mut upper, mut lower) = (p.u0, p.l0);
    for step in 0..p.steps {
        let eig = a.eig()?;
        let (nu, nl) = (upper + p.delta_u, lower + p.delta_l);
        let phi_u: f64 = eig.values.iter().map(|l| 1.0 / (upper - l)).sum();
        let phi_nu: f64 = eig.values.iter().map(|l| 1.0 / (nu - l)).sum();
        let phi_l: f64 = eig.values.iter().map(|l| 1.0 / (l - lower)).sum();
        let phi_nl: f64 = eig.values.iter().map(|l| 1.0 / (l - nl)).sum();
        let (du, dl) = (phi_u - phi_nu, phi_nl - phi_l);
        let cols: Vec<Vec<f64>> = (0..n).map(|j| eig.vectors.column(j)).collect();
        let scores: Vec<(f64, f64)> = u
            .par_iter()
            .map(|v| {
                let (mut u1, mut u2, mut l1, mut l2) = (0.0, 0.0, 0.0, 0.0);
                for (j, &lam) in eig.values.iter().enumerate() {
                    let y = dot(&cols[j], v);
                    let y2 = y * y;
                    let gu = 1.0 / (nu - lam);
                    let gl = 1.0 / (lam - nl);
                    u1 += y2 * gu;
                    u2 += y2 * gu * gu;
                    l1 += y2 * gl;
                    l2 += y2 * gl * gl;
                }
                (u2 / du + u1, l2 / dl - l1)
            })
            .collect();
        let gaps: Vec<f64> = scores.iter().map(|(su, sl)| -(sl - su)).collect();
        let k = argmin_tie_lowest(&gaps).ok_or_else(|| Error::Domain(format!("no barrier score at step {}", step + 1)))?;
        let (su, sl) = scores[k];
        if !(su <= sl) || su <= 0.0 {
            return Err(Error::Domain(format!(
                "barrier infeasible at step {}: upper score {su:e} exceeds lower score {sl:e}",
                step + 1
            )));
        }
        let weight = 2.0 / (su + sl);
        a.add_outer(&u[k], weight)?;
        s[k] += weight;
        let after = a.eigenvalues()?;
        let phi_after_u: f64 = after.iter().map(|l| 1.0 / (nu - l)).sum();
        let phi_after_l: f64 = after.iter().map(|l| 1.0 / (l - nl)).sum();
        let tol = 1e-9;
        if after[0] >= nu || *after.last().unwrap() <= nl || phi_after_u > phi_u * (1.0 + tol) || phi_after_l > phi_l * (1.0 + tol) {
            return Err(Error::Domain(format!("barrier potential increased at step {}", step + 1)));
        }
        upper = nu;
        lower = nl;
    }
    let scale = (1.0 - epsilon).powi(2) / lower;
    for w in &mut s {
        *w *= scale;
    }
    let eigs = a.scale(scale).eigenvalues()?;
    let (hi, lo) = (eigs[0], *eigs.last().unwrap());
    if hi > (1.0 + epsilon).powi(2) + 1e-8 || lo < (1.0 - epsilon).powi(2) - 1e-8 {
        return Err(Error::Certification { metric: "barrier sandwich", achieved: hi.max(1.0 / lo.max(f64::MIN_POSITIVE)), bound: (1.0 + epsilon).powi(2) });
    }
    Ok(WeightVector::new(s))
}

/// Edge list `(i, j, w)` with 0-based vertices `i < j` and `w > 0`.
pub fn laplacian_from_graph(edges: &[(usize, usize, f64)], n: usize) -> Result<OuterProductSum> {
    if edges.is_empty() {
        return Err(Error::InvalidInput("graph has no edges".into()));
    }
    let vectors = edges
        .iter()
        .enumerate()
        .map(|(k, &(i, j, w))| {
            if i == j {
                return Err(Error::InvalidInput(format!("edge {} is a self-loop at vertex {}", k + 1, i + 1)));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("edge {} leaves the vertex range 1..={n}", k + 1)));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!("edge {} has non-positive weight {w}", k + 1)));
            }
            let mut v = vec![0.0; n];
            v[i] = w.sqrt();
            v[j] = -w.sqrt();
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    OuterProductSum::new(vectors)
}

/// Worst relative deviation of `xᵀ L̃ x` from `xᵀ L x` over all cut indicators
/// `x = 1_S` with `S` a non-empty subset of the first `n - 1` vertices.
pub fn max_cut_distortion(original: &SymMatrix, sparse: &SymMatrix) -> Result<CutReport> {
    let n = original.n();
    if n > 24 {
        return Err(Error::GuardExceeded { what: "cut enumeration", size: 1u128 << n.min(127), limit: 1 << 24 });
    }
    let mut worst_low = f64::INFINITY;
    let mut worst_high: f64 = 0.0;
    let mut cuts = 0usize;
    for mask in 1u64..(1u64 << (n - 1)) {
        let x: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
        let c0 = dot(&x, &original.mul_vec(&x));
        let c1 = dot(&x, &sparse.mul_vec(&x));
        cuts += 1;
        if c0 > 0.0 {
            worst_low = worst_low.min(c1 / c0);
            worst_high = worst_high.max(c1 / c0);
        } else if c1 != 0.0 {
            worst_high = f64::INFINITY;
        }
    }
    Ok(CutReport { cuts, min_ratio: worst_low, max_ratio: worst_high })
}

#[derive(Debug, Clone, Copy)]
pub struct CutReport {
    pub cuts: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl CutReport {
    pub fn within(&self, epsilon: f64) -> bool {
        self.min_ratio >= (1.0 - epsilon).powi(3) - 1e-9 && self.max_ratio <= (1.0 + epsilon).powi(3) + 1e-9
    }
}

/// `psd_leq`-based restatement of the sandwich, used by tests and reports.
pub fn sandwich_holds(a: &SymMatrix, approx: &SymMatrix, lower: f64, upper: f64, slack: f64) -> Result<bool> {
    Ok(psd_leq(&a.scale(lower), approx, slack)? && psd_leq(approx, &a.scale(upper), slack)?)
}
