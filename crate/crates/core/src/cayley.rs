//! Expanding Cayley graphs by greedy even-Estrada minimization.
//!
//! A finite group is given by its multiplication table. Group-algebra elements
//! are coefficient vectors over the group and multiply by convolution, which
//! the right regular representation `R` turns into matrix multiplication:
//! `R(g)_{x,y} = 1` iff `y = x·g`, so `R(a ⋆ b) = R(a) R(b)` and
//! `tr R(a) = n · a[id]`.
//!
//! The greedy adds a pair `{g, g⁻¹}` per step, choosing `g` to minimize the
//! even Estrada index of the resulting Cayley graph. That index is evaluated
//! purely by convolutions with a truncated Taylor series; no matrix is formed
//! on the hot path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypercosine::{argmin_tie_lowest, MatrixFamily};
use crate::linalg::{trace_cosh, Matrix, SymMatrix};

/// Largest group order accepted by [`generate_table`].
pub const MAX_ORDER: usize = 10_000;

/// Multiplication table of a finite group with 0-based element ids.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTable {
    n: usize,
    /// `product[g * n + h] = g·h`.
    product: Vec<usize>,
    /// `right[h * n + g] = g·h`, the permutation "multiply by h on the right".
    right: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
}

impl GroupTable {
    /// Validates the Latin-square property, finds the identity and inverses and
    /// checks associativity on `10 n` sampled triples.
    pub fn new(n: usize, product: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("group order must be at least 1".into()));
        }
        if product.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: product.len() });
        }
        if let Some(&bad) = product.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidInput(format!("table entry {} is outside 1..={n}", bad + 1)));
        }
        for g in 0..n {
            let mut seen = vec![false; n];
            for h in 0..n {
                let v = product[g * n + h];
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidInput(format!(
                        "row {} repeats element {} (not a Latin square)",
                        g + 1,
                        v + 1
                    )));
                }
            }
        }
        for h in 0..n {
            let mut seen = vec![false; n];
            for g in 0..n {
                let v = product[g * n + h];
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidInput(format!(
                        "column {} repeats element {} (not a Latin square)",
                        h + 1,
                        v + 1
                    )));
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| product[e * n + g] == g && product[g * n + e] == g))
            .ok_or_else(|| Error::InvalidInput("table has no two-sided identity".into()))?;
        let mut inverse = vec![0; n];
        for g in 0..n {
            inverse[g] = (0..n)
                .find(|&h| product[g * n + h] == identity && product[h * n + g] == identity)
                .ok_or_else(|| Error::InvalidInput(format!("element {} has no two-sided inverse", g + 1)))?;
        }
        let mut right = vec![0; n * n];
        for g in 0..n {
            for h in 0..n {
                right[h * n + g] = product[g * n + h];
            }
        }
        let table = Self { n, product, right, identity, inverse };
        table.check_associativity_sampled(10 * n, 0x5EED)?;
        Ok(table)
    }

    fn check_triple(&self, a: usize, b: usize, c: usize) -> Result<()> {
        if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
            return Err(Error::InvalidInput(format!(
                "associativity fails on ({}, {}, {})",
                a + 1,
                b + 1,
                c + 1
            )));
        }
        Ok(())
    }

    pub fn check_associativity_sampled(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let (a, b, c) = (rng.random_range(0..self.n), rng.random_range(0..self.n), rng.random_range(0..self.n));
            self.check_triple(a, b, c)?;
        }
        Ok(())
    }

    /// Exhaustive `O(n³)` associativity check.
    pub fn check_associativity_full(&self) -> Result<()> {
        for a in 0..self.n {
            for b in 0..self.n {
                for c in 0..self.n {
                    self.check_triple(a, b, c)?;
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.product[g * self.n + h]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.n).all(|g| (0..self.n).all(|h| self.mul(g, h) == self.mul(h, g)))
    }

    fn right_row(&self, h: usize) -> &[usize] {
        &self.right[h * self.n..(h + 1) * self.n]
    }
}

/// Parses `n` followed by `n` rows of 1-based products.
pub fn parse_group_table(text: &str) -> Result<GroupTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (ln, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty group table".into() })?;
    let n: usize = first
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line: ln + 1, msg: format!("expected group order, got {first:?}") })?;
    let mut product = Vec::with_capacity(n * n);
    for _ in 0..n {
        let (ln, row) = lines.next().ok_or(Error::Parse { line: ln + 2, msg: "missing table rows".into() })?;
        let before = product.len();
        for tok in row.split_whitespace() {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::Parse { line: ln + 1, msg: format!("bad element {tok:?}") })?;
            if v == 0 || v > n {
                return Err(Error::Parse { line: ln + 1, msg: format!("element {v} outside 1..={n}") });
            }
            product.push(v - 1);
        }
        if product.len() - before != n {
            return Err(Error::Parse {
                line: ln + 1,
                msg: format!("expected {n} entries, found {}", product.len() - before),
            });
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse { line: ln + 1, msg: "trailing data after table".into() });
    }
    GroupTable::new(n, product)
}

/// Inverse of [`parse_group_table`].
pub fn format_group_table(table: &GroupTable) -> String {
    let mut s = format!("{}\n", table.n);
    for g in 0..table.n {
        let row: Vec<String> = (0..table.n).map(|h| (table.mul(g, h) + 1).to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// `Z_n`, element `k` (0-based) is the residue `k`.
    Cyclic(usize),
    /// Symmetries of the regular `n`-gon, order `2n`; element `a + n b` is `r^a s^b`.
    Dihedral(usize),
    /// Permutations of `k` points in lexicographic order, identity first.
    Symmetric(usize),
}

pub fn generate_table(kind: GroupKind) -> Result<GroupTable> {
    let order = match kind {
        GroupKind::Cyclic(n) => Some(n),
        GroupKind::Dihedral(n) => n.checked_mul(2),
        GroupKind::Symmetric(k) => (1..=k).try_fold(1usize, |acc, x| acc.checked_mul(x)),
    };
    let order = order.filter(|&o| o <= MAX_ORDER).ok_or(Error::GuardExceeded {
        what: "group order",
        size: u128::MAX,
        limit: MAX_ORDER as u128,
    })?;
    if order == 0 {
        return Err(Error::InvalidInput("group order must be at least 1".into()));
    }
    let mut product = vec![0; order * order];
    match kind {
        GroupKind::Cyclic(n) => {
            for g in 0..n {
                for h in 0..n {
                    product[g * n + h] = (g + h) % n;
                }
            }
        }
        GroupKind::Dihedral(n) => {
            for g in 0..order {
                let (a, b) = (g % n, g / n);
                for h in 0..order {
                    let (c, d) = (h % n, h / n);
                    // r^a s^b r^c s^d = r^(a ± c) s^(b + d)
                    let rot = if b == 0 { (a + c) % n } else { (a + n - c) % n };
                    product[g * order + h] = rot + n * ((b + d) % 2);
                }
            }
        }
        GroupKind::Symmetric(k) => {
            let perms = permutations(k);
            let index: std::collections::HashMap<&[usize], usize> =
                perms.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
            for (g, pg) in perms.iter().enumerate() {
                for (h, ph) in perms.iter().enumerate() {
                    let composed: Vec<usize> = (0..k).map(|x| pg[ph[x]]).collect();
                    product[g * order + h] = index[composed.as_slice()];
                }
            }
        }
    }
    GroupTable::new(order, product)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..k).collect();
    let mut out = vec![cur.clone()];
    while let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) {
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

/// Element of the group algebra `R[G]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAlgebraElement {
    pub coeffs: Vec<f64>,
}

impl GroupAlgebraElement {
    pub fn zero(n: usize) -> Self {
        Self { coeffs: vec![0.0; n] }
    }

    /// Point mass at `g`.
    pub fn delta(n: usize, g: usize) -> Self {
        let mut e = Self::zero(n);
        e.coeffs[g] = 1.0;
        e
    }

    /// `tr R(self) = n · self[id]`.
    pub fn regular_trace(&self, table: &GroupTable) -> f64 {
        table.n() as f64 * self.coeffs[table.identity()]
    }

    fn support(&self) -> Vec<(usize, f64)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(g, &c)| (g, c)).collect()
    }
}

/// `a ⋆ b`: `out[g·h] += a[g] b[h]`, in `O(n · supp(b))`.
pub fn convolve(a: &GroupAlgebraElement, b: &GroupAlgebraElement, table: &GroupTable) -> Result<GroupAlgebraElement> {
    let n = table.n();
    if a.coeffs.len() != n || b.coeffs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.coeffs.len().min(b.coeffs.len()) });
    }
    let mut out = vec![0.0; n];
    convolve_sparse(&a.coeffs, &b.support(), table, &mut out);
    Ok(GroupAlgebraElement { coeffs: out })
}

fn convolve_sparse(a: &[f64], b: &[(usize, f64)], table: &GroupTable, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for &(h, bh) in b {
        for (g, &prod) in table.right_row(h).iter().enumerate() {
            out[prod] += a[g] * bh;
        }
    }
}

/// Permutation matrix `R(g)` with `R(g)_{x,y} = 1` iff `y = x·g`.
pub fn right_regular(g: usize, table: &GroupTable) -> Matrix {
    let n = table.n();
    let mut m = Matrix::zeros(n, n);
    for x in 0..n {
        m.set(x, table.mul(x, g), 1.0);
    }
    m
}

/// Multiset of group elements closed under inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMultiset {
    counts: Vec<usize>,
}

impl GeneratorMultiset {
    pub fn empty(n: usize) -> Self {
        Self { counts: vec![0; n] }
    }

    /// Builds the multiset from a list of 0-based elements, rejecting lists that
    /// are not closed under inversion.
    pub fn from_elements(elements: &[usize], table: &GroupTable) -> Result<Self> {
        let mut counts = vec![0; table.n()];
        for &s in elements {
            if s >= table.n() {
                return Err(Error::InvalidInput(format!("element {} outside the group", s + 1)));
            }
            counts[s] += 1;
        }
        for s in 0..table.n() {
            if counts[s] != counts[table.inverse(s)] {
                return Err(Error::InvalidInput(format!(
                    "multiset is not symmetric: element {} occurs {} times, its inverse {} occurs {} times",
                    s + 1,
                    counts[s],
                    table.inverse(s) + 1,
                    counts[table.inverse(s)]
                )));
            }
        }
        Ok(Self { counts })
    }

    /// Adds `g` and `g⁻¹` (two copies of `g` when it is self-inverse).
    pub fn add_pair(&mut self, g: usize, table: &GroupTable) {
        self.counts[g] += 1;
        self.counts[table.inverse(g)] += 1;
    }

    pub fn size(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn count(&self, g: usize) -> usize {
        self.counts[g]
    }

    /// Sorted 0-based elements with repetition.
    pub fn elements(&self) -> Vec<usize> {
        self.counts.iter().enumerate().flat_map(|(g, &c)| std::iter::repeat_n(g, c)).collect()
    }

    /// `(element, multiplicity)` for elements that occur.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        self.counts.iter().enumerate().filter(|(_, c)| **c > 0).map(|(g, &c)| (g, c)).collect()
    }

    /// `Σ_{s∈S} s` in the group algebra.
    pub fn as_element(&self) -> GroupAlgebraElement {
        GroupAlgebraElement { coeffs: self.counts.iter().map(|&c| c as f64).collect() }
    }
}

/// Adjacency matrix `Σ_{s∈S} R(s)`.
pub fn cayley_adjacency(table: &GroupTable, s: &GeneratorMultiset) -> Result<SymMatrix> {
    let n = table.n();
    let mut m = Matrix::zeros(n, n);
    for (g, c) in s.multiplicities() {
        for x in 0..n {
            let y = table.mul(x, g);
            m.set(x, y, m.get(x, y) + c as f64);
        }
    }
    SymMatrix::symmetric_part(&m)
}

/// Second largest absolute eigenvalue of the normalized adjacency matrix.
pub fn lambda_of_cayley(table: &GroupTable, s: &GeneratorMultiset) -> Result<f64> {
    let size = s.size();
    if size == 0 {
        return Err(Error::InvalidInput("empty generator multiset".into()));
    }
    let a = cayley_adjacency(table, s)?.scale(1.0 / size as f64);
    let eig = a.eigenvalues()?;
    Ok(eig[1..].iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Truncation order `ceil(max(log2(n/δ), 2e² |S| θ))` for a `δ`-accurate Taylor sum.
pub fn truncation_order(n: usize, size: usize, theta: f64, delta: f64) -> usize {
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let l = (n as f64 / delta).log2().max(2.0 * e2 * size as f64 * theta);
    l.ceil().max(2.0) as usize
}

/// `EE_even(A_S, θ) = tr cosh(θ Σ_{s∈S} R(s))` within additive `δ`.
pub fn estrada_even(s: &GeneratorMultiset, theta: f64, delta: f64, table: &GroupTable) -> Result<f64> {
    if !(theta > 0.0 && delta > 0.0) {
        return Err(Error::InvalidInput("theta and delta must be positive".into()));
    }
    if s.size() == 0 {
        return Err(Error::InvalidInput("empty generator multiset".into()));
    }
    estrada_even_order(s, theta, truncation_order(table.n(), s.size(), theta, delta), table)
}

/// Even Taylor sum `Σ_{2k <= l} n (h^{2k})[id]/(2k)!` with `h = θ Σ s`.
pub fn estrada_even_order(s: &GeneratorMultiset, theta: f64, l: usize, table: &GroupTable) -> Result<f64> {
    let n = table.n();
    let id = table.identity();
    let h: Vec<(usize, f64)> = s.multiplicities().into_iter().map(|(g, c)| (g, theta * c as f64)).collect();
    let mut p = vec![0.0; n];
    p[id] = 1.0;
    let mut next = vec![0.0; n];
    let mut sum = n as f64;
    for m in 1..=l {
        convolve_sparse(&p, &h, table, &mut next);
        let inv = 1.0 / m as f64;
        for (dst, v) in p.iter_mut().zip(&next) {
            *dst = v * inv;
        }
        if m % 2 == 0 {
            sum += n as f64 * p[id];
        }
    }
    if !sum.is_finite() {
        return Err(Error::Overflow { max_abs: theta * s.size() as f64 });
    }
    Ok(sum)
}

/// `tr cosh(R(x))` for `x = h - shift·u`, where `h` is given by its support,
/// `u = (1/n) Σ_g g` and `shift` is the coefficient sum of `h`.
///
/// Since `x ⋆ u = 0`, `x^m = x^{m-1} ⋆ h` for `m >= 2`, so every power costs
/// one sparse convolution. Terms stop once a rigorous tail bound falls below
/// `max(δ, 1e-15 · sum)`; `(tr x^m)^{1/m}` bounds `||R(x)||` from above.
fn projected_trace_cosh(table: &GroupTable, h: &[(usize, f64)], shift: f64, delta: f64, lmax: usize) -> Result<f64> {
    let n = table.n();
    let nf = n as f64;
    let id = table.identity();
    let mut dense = vec![-shift / nf; n];
    for &(g, c) in h {
        dense[g] += c;
    }
    let mut p = dense;
    let mut next = vec![0.0; n];
    let mut sum = nf;
    let mut ln_fact = 0.0;
    for m in 2..=lmax.max(2) {
        convolve_sparse(&p, h, table, &mut next);
        let inv = 1.0 / m as f64;
        for (dst, v) in p.iter_mut().zip(&next) {
            *dst = v * inv;
        }
        ln_fact += (m as f64).ln();
        if m % 2 == 1 {
            continue;
        }
        let c = nf * p[id];
        if !c.is_finite() || sum > 1e300 {
            return Err(Error::Overflow { max_abs: shift });
        }
        sum += c;
        if c <= 0.0 {
            break;
        }
        let norm_bound = ((c.ln() + ln_fact) / m as f64).exp();
        let r = norm_bound * norm_bound / ((m + 1) as f64 * (m + 2) as f64);
        if r < 1.0 && nf * c * r / (1.0 - r) <= delta.max(1e-15 * sum) {
            break;
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone)]
pub struct ExpanderOptions {
    /// Initial constant in `t = ceil(c ln n / ε²)`.
    pub c0: f64,
    pub max_doublings: usize,
    /// Multiplier of `Σ_j f(g_j)` in the potential; defaults to `ε`.
    pub theta: Option<f64>,
    /// Truncation budget per Estrada evaluation; defaults to `e^{ε²}/n⁴`.
    pub delta: Option<f64>,
    /// Leave the identity out of the candidate set.
    pub exclude_identity: bool,
    /// Record the Estrada identity on every step (dense matrices, small groups only).
    pub audit: bool,
    pub certify: bool,
}

impl Default for ExpanderOptions {
    fn default() -> Self {
        Self { c0: 8.0, max_doublings: 3, theta: None, delta: None, exclude_identity: false, audit: false, certify: true }
    }
}

/// Truncation budget of the audit's own Estrada evaluation.
pub const AUDIT_DELTA: f64 = 1e-12;

/// Per-step record of the potential identity.
#[derive(Debug, Clone)]
pub struct StepAudit {
    pub step: usize,
    /// `tr cosh(θ Σ_j f(g_j))` by dense eigensolve.
    pub trace_cosh: f64,
    /// `EE_even(A, θ/2) + 1 - cosh(θ t)` by group-algebra Taylor sums
    /// truncated at [`AUDIT_DELTA`].
    pub estrada_side: f64,
    /// The hot-path value `tr cosh(R(x))`.
    pub projected: f64,
    /// `|trace_cosh - estrada_side| / max(1, EE_even)`.
    pub identity_residual: f64,
    /// `|trace_cosh - projected|`, bounded by the run's `δ` up to rounding.
    pub projected_error: f64,
}

#[derive(Debug, Clone)]
pub struct ExpanderResult {
    pub multiset: GeneratorMultiset,
    pub lambda: f64,
    /// Number of greedy steps; `|S| = 2t`.
    pub t: usize,
    pub c: f64,
    pub doublings: usize,
    /// Element chosen at every step (0-based).
    pub chosen: Vec<usize>,
    pub log_potentials: Vec<f64>,
    pub theta: f64,
    pub delta: f64,
    pub audit: Vec<StepAudit>,
}

/// `ceil(c ln n / ε²)`.
pub fn expander_steps(c: f64, n: usize, epsilon: f64) -> usize {
    ((c * (n as f64).ln() / (epsilon * epsilon)).ceil() as usize).max(1)
}

pub fn build_expander(table: &GroupTable, epsilon: f64) -> Result<ExpanderResult> {
    build_expander_with(table, epsilon, &ExpanderOptions::default())
}

pub fn build_expander_with(table: &GroupTable, epsilon: f64, opts: &ExpanderOptions) -> Result<ExpanderResult> {
    let n = table.n();
    if n < 2 {
        return Err(Error::InvalidInput("expanders need a group of order at least 2".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let theta = opts.theta.unwrap_or(epsilon);
    let delta = opts.delta.unwrap_or_else(|| (epsilon * epsilon).exp() / (n as f64).powi(4));
    let candidates: Vec<usize> =
        (0..n).filter(|&g| !(opts.exclude_identity && g == table.identity())).collect();
    let mut multiset = GeneratorMultiset::empty(n);
    let mut chosen = Vec::new();
    let mut log_potentials = Vec::new();
    let mut audit = Vec::new();
    let mut c = opts.c0;
    let mut doublings = 0;
    loop {
        let t = expander_steps(c, n, epsilon);
        while chosen.len() < t {
            let steps = chosen.len() + 1;
            let shift = theta * steps as f64;
            let lmax = truncation_order(n, 2 * steps, theta / 2.0, delta);
            let base: Vec<f64> = (0..n).map(|g| 0.5 * theta * multiset.count(g) as f64).collect();
            let sums: Vec<f64> = candidates
                .par_iter()
                .map(|&g| {
                    let mut h = base.clone();
                    h[g] += 0.5 * theta;
                    h[table.inverse(g)] += 0.5 * theta;
                    let support: Vec<(usize, f64)> =
                        h.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i, v)).collect();
                    projected_trace_cosh(table, &support, shift, delta, lmax).map(f64::ln)
                })
                .collect::<Result<_>>()?;
            let k = argmin_tie_lowest(&sums)
                .ok_or_else(|| Error::Domain(format!("no finite potential at step {steps}")))?;
            let g = candidates[k];
            multiset.add_pair(g, table);
            chosen.push(g);
            log_potentials.push(sums[k]);
            if opts.audit {
                audit.push(audit_step(table, &multiset, theta, delta, steps, sums[k].exp())?);
            }
        }
        let lambda = lambda_of_cayley(table, &multiset)?;
        if lambda <= epsilon || !opts.certify || doublings >= opts.max_doublings {
            if opts.certify && lambda > epsilon {
                return Err(Error::Certification { metric: "cayley lambda", achieved: lambda, bound: epsilon });
            }
            return Ok(ExpanderResult {
                multiset,
                lambda,
                t,
                c,
                doublings,
                chosen,
                log_potentials,
                theta,
                delta,
                audit,
            });
        }
        c *= 2.0;
        doublings += 1;
    }
}

fn audit_step(
    table: &GroupTable,
    s: &GeneratorMultiset,
    theta: f64,
    delta: f64,
    steps: usize,
    projected: f64,
) -> Result<StepAudit> {
    let n = table.n();
    // θ Σ_j f(g_j) = (θ/2) A_S - θ t J/n
    let a = cayley_adjacency(table, s)?;
    let shift = theta * steps as f64 / n as f64;
    let m = SymMatrix::from_fn(n, |i, j| 0.5 * theta * a.get(i, j) - shift);
    let dense = trace_cosh(&m)?;
    let ee = estrada_even(s, theta / 2.0, AUDIT_DELTA.min(delta), table)?;
    let estrada_side = ee + 1.0 - (theta * steps as f64).cosh();
    Ok(StepAudit {
        step: steps,
        trace_cosh: dense,
        estrada_side,
        projected,
        identity_residual: (dense - estrada_side).abs() / ee.max(1.0),
        projected_error: (dense - projected).abs(),
    })
}

/// The dense family `f(g) = (R(g) + R(g⁻¹))/2 - J/n` under the uniform
/// distribution, with `γ = ρ² = 2`.
pub fn cayley_family(table: &GroupTable) -> Result<MatrixFamily> {
    let n = table.n();
    let nf = n as f64;
    let mats: Vec<SymMatrix> = (0..n)
        .map(|g| {
            let r = right_regular(g, table);
            let ri = right_regular(table.inverse(g), table);
            SymMatrix::from_fn(n, |i, j| 0.5 * (r.get(i, j) + ri.get(i, j)) - 1.0 / nf)
        })
        .collect();
    MatrixFamily::new(mats, vec![1.0 / nf; n], 2.0, 2.0)
}
