//! Randomized checks of the matrix identities the greedy potentials rest on.

use hcosh::linalg::{dilation, matrix_exp, psd_leq, rank_one_exp, trace_cosh, Sign};
use hcosh::{Result, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub trials: usize,
    /// Largest normalized violation over all trials.
    pub worst: f64,
    pub failures: usize,
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, scale * rng.random_range(-1.0..1.0));
        }
    }
    m
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for _ in 0..n {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        m.add_outer(&v, 1.0).expect("matching dimension");
    }
    m
}

fn cosh_m(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(matrix_exp(a)?.add(&matrix_exp(&a.scale(-1.0))?)?.scale(0.5))
}

fn trace_product(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let n = a.n();
    (0..n).map(|i| (0..n).map(|j| a.get(i, j) * b.get(j, i)).sum::<f64>()).sum()
}

fn check(name: &'static str, trials: usize, mut trial: impl FnMut() -> Result<f64>) -> Result<IdentityCheck> {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..trials {
        let v = trial()?;
        worst = worst.max(v);
        if !(v <= IDENTITY_TOL) {
            failures += 1;
        }
    }
    Ok(IdentityCheck { name, trials, worst, failures })
}

/// Runs every check `trials` times from one ChaCha8 stream.
pub fn run_identity_suite(trials: usize, seed: u64) -> Result<Vec<IdentityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    out.push(check("rank_one_exp", trials, || {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut worst = 0.0f64;
        for (sign, s) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
            let closed = rank_one_exp(&x, sign)?;
            let dense = matrix_exp(&SymMatrix::outer(&x).scale(s))?;
            worst = worst.max(closed.max_abs_diff(&dense) / dense.max_abs().max(1.0));
        }
        Ok(worst)
    })?);

    out.push(check("dilation_trace", trials, || {
        let n = rng.random_range(1..7);
        let a = random_sym(&mut rng, n, 1.5);
        let lhs = matrix_exp(&dilation(&a.to_matrix()))?.trace();
        let rhs = 2.0 * trace_cosh(&a)?;
        Ok((lhs - rhs).abs() / rhs)
    })?);

    out.push(check("projector_cosh", trials, || {
        let n = rng.random_range(2..9);
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        // symmetric circulant, so it commutes with J
        let c: Vec<f64> = (0..n).map(|k| 0.5 * (row[k] + row[(n - k) % n])).collect();
        let a = SymMatrix::from_fn(n, |i, j| c[(j + n - i) % n]);
        let avg = SymMatrix::ones(n).scale(1.0 / n as f64);
        let mut worst = 0.0f64;
        for p in [avg.clone(), SymMatrix::identity(n).sub(&avg)?] {
            let lhs = cosh_m(&SymMatrix::symmetric_part(&p.mul(&a)?)?)?;
            let rhs = SymMatrix::symmetric_part(&p.mul(&cosh_m(&a)?)?)?.add(&SymMatrix::identity(n))?.sub(&p)?;
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
        Ok(worst)
    })?);

    out.push(check("golden_thompson", trials, || {
        let n = rng.random_range(1..7);
        let a = random_sym(&mut rng, n, 1.0);
        let b = random_sym(&mut rng, n, 1.0);
        let lhs = matrix_exp(&a.add(&b)?)?.trace();
        let rhs = trace_product(&matrix_exp(&a)?, &matrix_exp(&b)?);
        Ok(((lhs - rhs) / rhs.max(1.0)).max(0.0))
    })?);

    out.push(check("trace_monotonicity", trials, || {
        let n = rng.random_range(1..7);
        let a = random_psd(&mut rng, n);
        let b = random_sym(&mut rng, n, 1.0);
        let c = b.add(&random_psd(&mut rng, n))?;
        if !psd_leq(&b, &c, 1e-12)? {
            return Ok(f64::INFINITY);
        }
        Ok((trace_product(&a, &b) - trace_product(&a, &c)).max(0.0))
    })?);

    Ok(out)
}
