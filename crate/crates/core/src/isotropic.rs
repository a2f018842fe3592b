//! Isotropic sparsification by rank-one eigenvalue updates.
//!
//! For rows `a_k` with `Σ a_k ⊗ a_k = I` the selector keeps the running sum
//! `θ Σ â ⊗ â` (with `â_k = a_k / sqrt(p_k)`) in its own eigenbasis: the
//! eigenvalues `Λ` and the rows `Z = sqrt(θ) Â Q`. Scoring candidate `k` only
//! needs the spectrum of `diag(Λ) + z_k ⊗ z_k`, which the secular equation
//! delivers in `O(n²)`. After the choice, `Z` is rotated by the eigenvectors
//! of the chosen update.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypercosine::{argmin_tie_lowest, select_indices, SampleFamily};
use crate::linalg::{dot, log_sum_cosh, Matrix, SymMatrix};

/// Relative threshold below which a component of `z` is deflated.
pub const DEFLATE_Z: f64 = 1e-14;
/// Relative gap below which two diagonal entries are merged.
pub const DEFLATE_D: f64 = 1e-14;

/// Eigenpairs of `diag(sigma) + z ⊗ z`.
#[derive(Debug, Clone)]
pub struct SecularEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` pairs with `values[j]`; present when requested.
    pub vectors: Option<Matrix>,
}

struct Root {
    origin: usize,
    mu: f64,
}

/// Finds the root of `1 + Σ z_i²/(d_i - λ)` above `d[j]`, with `d` strictly
/// ascending and every `z_i ≠ 0`.
fn secular_root(d: &[f64], z2: &[f64], j: usize, z2sum: f64) -> Root {
    let k = d.len();
    let last = j + 1 == k;
    let (origin, mut lo, mut hi) = if last {
        (j, 0.0, z2sum)
    } else {
        let gap = d[j + 1] - d[j];
        let half = 0.5 * gap;
        let f_mid = 1.0 + (0..k).map(|i| z2[i] / ((d[i] - d[j]) - half)).sum::<f64>();
        if f_mid >= 0.0 {
            (j, 0.0, half)
        } else {
            (j + 1, -half, 0.0)
        }
    };
    let delta: Vec<f64> = d.iter().map(|&di| di - d[origin]).collect();
    let left_pole = delta[j];
    let right_pole = if last { f64::INFINITY } else { delta[j + 1] };
    let mut mu = 0.5 * (lo + hi);
    for iter in 0..200 {
        let (mut psi, mut dpsi, mut phi, mut dphi) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..k {
            let r = 1.0 / (delta[i] - mu);
            let term = z2[i] * r;
            if i <= j {
                psi += term;
                dpsi += term * r;
            } else {
                phi += term;
                dphi += term * r;
            }
        }
        let f = 1.0 + psi + phi;
        if f > 0.0 {
            hi = mu;
        } else if f < 0.0 {
            lo = mu;
        } else {
            break;
        }
        let noise = 16.0 * f64::EPSILON * k as f64 * (1.0 + psi.abs() + phi.abs());
        let width = hi - lo;
        if f.abs() <= noise || width <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        let dl = left_pole - mu;
        let eta = if last {
            let b = dpsi * dl * dl;
            let w = 1.0 + psi - dpsi * dl;
            if w > 0.0 {
                Some(dl + b / w)
            } else {
                None
            }
        } else {
            let dr = right_pole - mu;
            let b = dpsi * dl * dl;
            let e = dphi * dr * dr;
            let w = 1.0 + (psi - dpsi * dl) + (phi - dphi * dr);
            let qa = w;
            let qb = -(w * (dl + dr) + b + e);
            let qc = dl * dr * f;
            quadratic_root_in(qa, qb, qc, lo - mu, hi - mu)
        };
        let next = match eta {
            Some(step) if iter < 150 => mu + step,
            _ => f64::NAN,
        };
        mu = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Root { origin, mu }
}

/// Root of `a x² + b x + c` strictly inside `(lo, hi)`, if any.
fn quadratic_root_in(a: f64, b: f64, c: f64, lo: f64, hi: f64) -> Option<f64> {
    let inside = |x: f64| x.is_finite() && x > lo && x < hi;
    if a == 0.0 {
        let x = -c / b;
        return inside(x).then_some(x);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let x1 = q / a;
    let x2 = if q != 0.0 { c / q } else { f64::NAN };
    match (inside(x1), inside(x2)) {
        (true, _) => Some(x1),
        (_, true) => Some(x2),
        _ => None,
    }
}

/// Eigenvalues (ascending) and optionally eigenvectors of `diag(sigma) + z⊗z`.
pub fn secular_eigs(sigma: &[f64], z: &[f64], want_vectors: bool) -> Result<SecularEig> {
    let n = sigma.len();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty secular problem".into()));
    }
    if sigma.iter().chain(z).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite secular input".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
    let d: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let mut zz: Vec<f64> = order.iter().map(|&i| z[i]).collect();
    let znorm2 = dot(&zz, &zz);
    let znorm = znorm2.sqrt();
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs())) + znorm2;

    // sorted-coordinate positions whose eigenpair is (d_i, e_i)
    let mut deflated: Vec<usize> = Vec::new();
    let mut rotations: Vec<(usize, usize, f64, f64)> = Vec::new();
    if znorm > 0.0 {
        let tol_z = DEFLATE_Z * znorm;
        let tol_d = DEFLATE_D * scale;
        for (i, zi) in zz.iter_mut().enumerate() {
            if zi.abs() <= tol_z {
                *zi = 0.0;
                deflated.push(i);
            }
        }
        let mut prev: Option<usize> = None;
        for i in 0..n {
            if zz[i] == 0.0 {
                continue;
            }
            if let Some(p) = prev {
                if d[i] - d[p] <= tol_d {
                    let r = zz[p].hypot(zz[i]);
                    let c = zz[i] / r;
                    let s = zz[p] / r;
                    zz[i] = r;
                    zz[p] = 0.0;
                    rotations.push((p, i, c, s));
                    deflated.push(p);
                }
            }
            prev = Some(i);
        }
    } else {
        deflated.extend(0..n);
    }
    let active: Vec<usize> = (0..n).filter(|&i| zz[i] != 0.0).collect();
    let da: Vec<f64> = active.iter().map(|&i| d[i]).collect();
    let z2: Vec<f64> = active.iter().map(|&i| zz[i] * zz[i]).collect();
    let z2sum: f64 = z2.iter().sum();
    let roots: Vec<Root> = (0..active.len()).map(|j| secular_root(&da, &z2, j, z2sum)).collect();

    let mut pairs: Vec<(f64, Option<Vec<f64>>)> = Vec::with_capacity(n);
    for &i in &deflated {
        let v = want_vectors.then(|| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        });
        pairs.push((d[i], v));
    }
    let k = active.len();
    let zhat: Vec<f64> = if want_vectors && k > 0 {
        (0..k)
            .map(|i| {
                let gap = |j: usize| (da[roots[j].origin] - da[i]) + roots[j].mu;
                let mut prod = gap(k - 1);
                for j in 0..i {
                    prod *= gap(j) / (da[j] - da[i]);
                }
                for j in i..k - 1 {
                    prod *= gap(j) / (da[j + 1] - da[i]);
                }
                prod.max(0.0).sqrt().copysign(zz[active[i]])
            })
            .collect()
    } else {
        Vec::new()
    };
    for root in &roots {
        let value = da[root.origin] + root.mu;
        let v = want_vectors.then(|| {
            let mut v = vec![0.0; n];
            for (ii, &pos) in active.iter().enumerate() {
                v[pos] = zhat[ii] / ((da[ii] - da[root.origin]) - root.mu);
            }
            let nv = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            v
        });
        pairs.push((value, v));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vectors = if want_vectors {
        let mut m = Matrix::zeros(n, n);
        for (col, (_, v)) in pairs.iter_mut().enumerate() {
            let v = v.as_mut().expect("vector requested");
            for &(p, i, c, s) in rotations.iter().rev() {
                let (yp, yi) = (v[p], v[i]);
                v[p] = c * yp + s * yi;
                v[i] = -s * yp + c * yi;
            }
            for (pos, &orig) in order.iter().enumerate() {
                m.set(orig, col, v[pos]);
            }
        }
        Some(m)
    } else {
        None
    };
    Ok(SecularEig { values, vectors })
}

/// Checks `σ_(j) <= λ_(j) <= σ_(j+1)` and `λ_(n) <= σ_(n) + ||z||²` with
/// absolute slack `tol`.
pub fn interlaces(sigma: &[f64], z: &[f64], values: &[f64], tol: f64) -> bool {
    let mut s = sigma.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    let top = s[n - 1] + dot(z, z);
    (0..n).all(|j| {
        let upper = if j + 1 < n { s[j + 1] } else { top };
        values[j] >= s[j] - tol && values[j] <= upper + tol
    })
}

/// Cauchy matrix-vector product `y_i = Σ_j x_j / (t_i - s_j)`.
///
/// The product is evaluated exactly in `O(mn)`; `_tolerance` is the accuracy
/// knob of a fast approximate backend and is unused here.
pub fn cauchy_apply(t_nodes: &[f64], s_nodes: &[f64], x: &[f64], _tolerance: f64) -> Result<Vec<f64>> {
    if x.len() != s_nodes.len() {
        return Err(Error::DimensionMismatch { expected: s_nodes.len(), got: x.len() });
    }
    for (i, &ti) in t_nodes.iter().enumerate() {
        for (j, &sj) in s_nodes.iter().enumerate() {
            if ti == sj {
                return Err(Error::InvalidInput(format!("Cauchy node collision at ({}, {})", i + 1, j + 1)));
            }
        }
    }
    Ok(t_nodes
        .iter()
        .map(|&ti| s_nodes.iter().zip(x).map(|(&sj, &xj)| xj / (ti - sj)).sum())
        .collect())
}

/// Rows in isotropic position, `Σ row_k ⊗ row_k = I`, with zero rows removed.
#[derive(Debug, Clone)]
pub struct RowFamily {
    rows: Matrix,
    /// Original (input) row number of every retained row.
    source: Vec<usize>,
    p: Vec<f64>,
    dropped: Vec<usize>,
}

impl RowFamily {
    /// Validates isotropy within `1e-8` max-entry.
    pub fn new(rows: &Matrix) -> Result<Self> {
        Self::with_tolerance(rows, 1e-8)
    }

    pub fn with_tolerance(rows: &Matrix, tol: f64) -> Result<Self> {
        let (m, n) = (rows.rows(), rows.cols());
        if n == 0 || m < n {
            return Err(Error::InvalidInput(format!("row family needs m >= n >= 1, got {m} x {n}")));
        }
        let gram = rows.gram();
        let dev = gram.max_abs_diff(&SymMatrix::identity(n));
        if !(dev <= tol) {
            return Err(Error::InvalidInput(format!(
                "rows are not in isotropic position: max |AᵀA - I| = {dev:e}"
            )));
        }
        let mut kept = Vec::new();
        let mut source = Vec::new();
        let mut dropped = Vec::new();
        let mut norms = Vec::new();
        for k in 0..m {
            let r = rows.row(k);
            let s = dot(r, r);
            if s == 0.0 {
                dropped.push(k);
            } else {
                kept.push(r.to_vec());
                source.push(k);
                norms.push(s);
            }
        }
        let total: f64 = norms.iter().sum();
        let p = norms.iter().map(|s| s / total).collect();
        Ok(Self { rows: Matrix::from_rows(&kept)?, source, p, dropped })
    }

    pub fn m(&self) -> usize {
        self.rows.rows()
    }

    pub fn n(&self) -> usize {
        self.rows.cols()
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Input row numbers that were removed as zero rows.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn source_index(&self, k: usize) -> usize {
        self.source[k]
    }

    /// `row_k / sqrt(p_k)`.
    pub fn rescaled_row(&self, k: usize) -> Vec<f64> {
        let s = 1.0 / self.p[k].sqrt();
        self.rows.row(k).iter().map(|v| v * s).collect()
    }

    /// `||Σ_j s_j row_{x_j} ⊗ row_{x_j} - I||` for retained-row indices.
    pub fn residual(&self, indices: &[usize], scalars: &[f64]) -> Result<f64> {
        let mut acc = SymMatrix::identity(self.n()).scale(-1.0);
        for (&k, &s) in indices.iter().zip(scalars) {
            acc.add_outer(self.rows.row(k), s)?;
        }
        acc.spectral_norm()
    }
}

/// The sample family `f(k) = â_k ⊗ â_k - I` with `γ = n`.
pub struct IsotropicFamily<'a> {
    family: &'a RowFamily,
}

impl<'a> IsotropicFamily<'a> {
    pub fn new(family: &'a RowFamily) -> Self {
        Self { family }
    }
}

impl SampleFamily for IsotropicFamily<'_> {
    fn dim(&self) -> usize {
        self.family.n()
    }
    fn len(&self) -> usize {
        self.family.m()
    }
    fn evaluate(&self, _step: usize, k: usize) -> Result<SymMatrix> {
        let r = self.family.rescaled_row(k);
        let mut f = SymMatrix::outer(&r);
        f.add_scaled(&SymMatrix::identity(r.len()), -1.0)?;
        Ok(f)
    }
    fn gamma(&self) -> f64 {
        self.family.n() as f64
    }
    fn rho_sq(&self) -> f64 {
        ((self.family.n() - 1) as f64).max(1.0)
    }
    fn weights(&self) -> Vec<f64> {
        self.family.p().to_vec()
    }
}

#[derive(Debug, Clone)]
pub struct IsotropicOptions {
    pub c_iso: f64,
    pub max_doublings: usize,
    /// Fixed step count; disables doubling.
    pub t: Option<usize>,
    /// Check the rotating basis against a direct accumulation every this many steps.
    pub audit_every: Option<usize>,
    pub certify: bool,
}

impl Default for IsotropicOptions {
    fn default() -> Self {
        Self { c_iso: 8.0, max_doublings: 3, t: None, audit_every: None, certify: true }
    }
}

#[derive(Debug, Clone)]
pub struct SparseIsotropicResult {
    /// Input row numbers (0-based), one per step.
    pub indices: Vec<usize>,
    /// `1/(t p_k)` per step.
    pub scalars: Vec<f64>,
    pub residual: f64,
    pub t: usize,
    pub c_iso: f64,
    pub theta: f64,
    pub doublings: usize,
    pub log_potentials: Vec<f64>,
}

impl SparseIsotropicResult {
    /// Summed weight per distinct input row.
    pub fn weights_by_row(&self, m: usize) -> Vec<f64> {
        let mut w = vec![0.0; m];
        for (&k, &s) in self.indices.iter().zip(&self.scalars) {
            w[k] += s;
        }
        w
    }
}

/// `ceil(c n ln n / ε²)`, at least 1.
pub fn step_budget(c: f64, n: usize, epsilon: f64) -> usize {
    let nf = n as f64;
    ((c * nf * nf.ln() / (epsilon * epsilon)).ceil() as usize).max(1)
}

/// Greedy state in the rotating eigenbasis.
struct FastState {
    theta: f64,
    lambda: Vec<f64>,
    z: Matrix,
    q: Option<Matrix>,
    steps: usize,
    chosen: Vec<usize>,
    log_potentials: Vec<f64>,
}

impl FastState {
    fn new(family: &RowFamily, theta: f64, track_basis: bool) -> Self {
        let (m, n) = (family.m(), family.n());
        let mut z = Matrix::zeros(m, n);
        for k in 0..m {
            let r = family.rescaled_row(k);
            for (dst, v) in z.row_mut(k).iter_mut().zip(r) {
                *dst = theta.sqrt() * v;
            }
        }
        Self {
            theta,
            lambda: vec![0.0; n],
            z,
            q: track_basis.then(|| Matrix::identity(n)),
            steps: 0,
            chosen: Vec::new(),
            log_potentials: Vec::new(),
        }
    }

    fn step(&mut self) -> Result<()> {
        let shift = self.theta * (self.steps + 1) as f64;
        let m = self.z.rows();
        let logs: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|k| {
                let eig = secular_eigs(&self.lambda, self.z.row(k), false)?;
                let shifted: Vec<f64> = eig.values.iter().map(|l| l - shift).collect();
                Ok(std::f64::consts::LN_2 + log_sum_cosh(&shifted))
            })
            .collect::<Result<_>>()?;
        let k = argmin_tie_lowest(&logs)
            .ok_or_else(|| Error::Domain(format!("no finite potential at step {}", self.steps)))?;
        let eig = secular_eigs(&self.lambda, self.z.row(k), true)?;
        let u = eig.vectors.expect("vectors requested");
        self.z = self.z.mul(&u)?;
        if let Some(q) = &self.q {
            self.q = Some(q.mul(&u)?);
        }
        self.lambda = eig.values;
        self.chosen.push(k);
        self.log_potentials.push(logs[k]);
        self.steps += 1;
        Ok(())
    }

    /// Max-entry mismatch of the tracked basis against direct accumulation.
    fn audit(&self, family: &RowFamily) -> Result<f64> {
        let q = self.q.as_ref().expect("basis tracked");
        let n = family.n();
        let mut direct = SymMatrix::zeros(n);
        for &k in &self.chosen {
            direct.add_outer(&family.rescaled_row(k), self.theta)?;
        }
        let rebuilt = SymMatrix::from_fn(n, |i, j| {
            (0..n).map(|c| q.get(i, c) * self.lambda[c] * q.get(j, c)).sum()
        });
        let mut worst = rebuilt.max_abs_diff(&direct);
        for k in 0..family.m() {
            let r = family.rescaled_row(k);
            for c in 0..n {
                let expect: f64 = (0..n).map(|i| r[i] * q.get(i, c)).sum::<f64>() * self.theta.sqrt();
                worst = worst.max((expect - self.z.get(k, c)).abs());
            }
        }
        Ok(worst)
    }
}

/// Fast isotropic sparsification with greedy parameter `θ = ε/(2n)`.
pub fn isotropic_sparsify(family: &RowFamily, epsilon: f64) -> Result<SparseIsotropicResult> {
    isotropic_sparsify_with(family, epsilon, &IsotropicOptions::default())
}

pub fn isotropic_sparsify_with(
    family: &RowFamily,
    epsilon: f64,
    opts: &IsotropicOptions,
) -> Result<SparseIsotropicResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let n = family.n();
    let theta = epsilon / (2.0 * n as f64);
    let mut state = FastState::new(family, theta, opts.audit_every.is_some());
    let mut c = opts.c_iso;
    let mut doublings = 0;
    loop {
        let t = opts.t.unwrap_or_else(|| step_budget(c, n, epsilon));
        while state.steps < t {
            state.step()?;
            if let Some(every) = opts.audit_every {
                if state.steps.is_multiple_of(every) {
                    let worst = state.audit(family)?;
                    if worst > 1e-7 {
                        return Err(Error::Certification {
                            metric: "basis bookkeeping",
                            achieved: worst,
                            bound: 1e-7,
                        });
                    }
                }
            }
        }
        let scalars: Vec<f64> = state.chosen.iter().map(|&k| 1.0 / (t as f64 * family.p()[k])).collect();
        let residual = family.residual(&state.chosen, &scalars)?;
        let ok = residual <= epsilon;
        if ok || !opts.certify || opts.t.is_some() || doublings >= opts.max_doublings {
            if opts.certify && !ok {
                return Err(Error::Certification { metric: "isotropic residual", achieved: residual, bound: epsilon });
            }
            return Ok(SparseIsotropicResult {
                indices: state.chosen.iter().map(|&k| family.source_index(k)).collect(),
                scalars,
                residual,
                t,
                c_iso: c,
                theta,
                doublings,
                log_potentials: state.log_potentials.clone(),
            });
        }
        c *= 2.0;
        doublings += 1;
    }
}

/// Maximum `m n³ t` for which [`equivalence_audit`] runs the dense path.
pub const AUDIT_GUARD: u128 = 1_000_000_000;

/// Runs the fast path and the generic selector on `f(k) = â_k⊗â_k - I` for
/// `t_small` steps and reports whether the index sequences coincide.
pub fn equivalence_audit(family: &RowFamily, epsilon: f64, t_small: usize) -> Result<bool> {
    let (m, n) = (family.m() as u128, family.n() as u128);
    let size = m * n * n * n * t_small as u128;
    if size > AUDIT_GUARD {
        return Err(Error::GuardExceeded { what: "equivalence audit", size, limit: AUDIT_GUARD });
    }
    let opts = IsotropicOptions { t: Some(t_small), certify: false, ..Default::default() };
    let fast = isotropic_sparsify_with(family, epsilon, &opts)?;
    let generic = select_indices(&IsotropicFamily::new(family), epsilon / 2.0, t_small)?;
    let generic: Vec<usize> = generic.indices.iter().map(|&k| family.source_index(k)).collect();
    Ok(fast.indices == generic)
}
