//! One function per subcommand. Each returns the `outputs` and `certification`
//! parts of the report; timing and the input echo are filled in by `main`.

use crate::identities::{run_identity_suite, IDENTITY_TOL};
use crate::report::Certification;
use hcosh::cayley::{
    build_expander_with, generate_table, parse_group_table, ExpanderOptions, GroupKind, GroupTable,
};
use hcosh::elementwise::{
    power_norm_estimate, sdd_certify, sdd_sparsify_deterministic_with, sdd_sparsify_randomized,
    sparsify_generic_with, theta_of, DeterministicOptions, GenericOptions, SparsifiedMatrix,
};
use hcosh::hypercosine::{balance_matrices, random_signs_baseline, verify_family, MatrixFamily};
use hcosh::io;
use hcosh::isotropic::{isotropic_sparsify_with, IsotropicOptions, RowFamily};
use hcosh::spectral::{
    laplacian_from_graph, max_cut_distortion, spectral_sparsify_with, support_budget, OuterProductSum,
    SpectralOptions, SpectralResult,
};
use hcosh::{Error, SymMatrix};
use serde_json::{json, Value};
use std::path::Path;

/// Largest vertex count for the brute-force cut check.
const CUT_CHECK_MAX_N: usize = 24;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub struct Outcome {
    pub outputs: Value,
    pub certification: Option<Certification>,
}

pub fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn write_output(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn entries_json(m: &SparsifiedMatrix) -> Value {
    Value::Array(m.entries.iter().map(|&(i, j, v)| json!([i + 1, j + 1, v])).collect())
}

/// `cyclic:N`, `dihedral:N` or `symmetric:K`.
pub fn parse_group_kind(s: &str) -> CliResult<GroupKind> {
    let bad = || CliError::Input(format!("group must look like cyclic:N, dihedral:N or symmetric:K, got {s:?}"));
    let (kind, size) = s.split_once(':').ok_or_else(bad)?;
    let size: usize = size.parse().map_err(|_| bad())?;
    match kind {
        "cyclic" => Ok(GroupKind::Cyclic(size)),
        "dihedral" => Ok(GroupKind::Dihedral(size)),
        "symmetric" => Ok(GroupKind::Symmetric(size)),
        _ => Err(bad()),
    }
}

pub fn load_group(table: Option<&Path>, group: Option<&str>) -> CliResult<GroupTable> {
    match (table, group) {
        (Some(p), None) => Ok(parse_group_table(&read_input(p)?)?),
        (None, Some(g)) => Ok(generate_table(parse_group_kind(g)?)?),
        _ => Err(CliError::Input("give exactly one of --table or --group".into())),
    }
}

pub fn balance(mats: &[SymMatrix], seed: Option<u64>) -> CliResult<Outcome> {
    if mats.is_empty() {
        return Err(CliError::Input("matrix list is empty".into()));
    }
    for (i, m) in mats.iter().enumerate() {
        let norm = m.spectral_norm()?;
        if norm > 1.0 + 1e-12 {
            return Err(CliError::Input(format!("matrix {} has norm {norm} > 1", i + 1)));
        }
    }
    let b = balance_matrices(mats)?;
    let mut outputs = json!({
        "count": mats.len(),
        "dim": mats[0].n(),
        "signs": b.signs,
        "value": b.value,
        "bound": b.bound,
    });
    if let Some(seed) = seed {
        let r = random_signs_baseline(mats, seed)?;
        let n = mats.len() as f64;
        outputs["random_baseline"] = json!({
            "seed": seed,
            "signs": r.signs,
            "value": r.value,
            "reference": 4.0 * (n * n.ln()).sqrt(),
        });
    }
    Ok(Outcome { outputs, certification: Some(Certification::new("balance value", b.value, b.bound, 1e-8)) })
}

pub struct CayleyArgs {
    pub epsilon: f64,
    pub c0: f64,
    pub max_doublings: usize,
    pub exclude_identity: bool,
    pub audit: bool,
    pub certify: bool,
}

pub fn cayley(table: &GroupTable, a: &CayleyArgs) -> CliResult<Outcome> {
    let opts = ExpanderOptions {
        c0: a.c0,
        max_doublings: a.max_doublings,
        exclude_identity: a.exclude_identity,
        audit: a.audit,
        certify: a.certify,
        ..Default::default()
    };
    let r = build_expander_with(table, a.epsilon, &opts)?;
    let multiset: Vec<Value> =
        r.multiset.multiplicities().into_iter().map(|(g, k)| json!({"element": g + 1, "count": k})).collect();
    let audit: Vec<Value> = r
        .audit
        .iter()
        .map(|s| {
            json!({
                "step": s.step,
                "trace_cosh": s.trace_cosh,
                "estrada_side": s.estrada_side,
                "projected": s.projected,
                "identity_residual": s.identity_residual,
                "projected_error": s.projected_error,
            })
        })
        .collect();
    let outputs = json!({
        "order": table.n(),
        "abelian": table.is_abelian(),
        "size": r.multiset.size(),
        "t": r.t,
        "c": r.c,
        "doublings": r.doublings,
        "theta": r.theta,
        "delta": r.delta,
        "lambda": r.lambda,
        "multiset": multiset,
        "chosen": one_based(&r.chosen),
        "log_potentials": r.log_potentials,
        "audit": audit,
    });
    let certification = a.certify.then(|| Certification::new("cayley lambda", r.lambda, a.epsilon, 0.0));
    Ok(Outcome { outputs, certification })
}

pub fn isotropic(rows: &hcosh::Matrix, epsilon: f64, t: Option<usize>, c_iso: f64, certify: bool) -> CliResult<Outcome> {
    let family = RowFamily::new(rows)?;
    let opts = IsotropicOptions { c_iso, t, certify, ..Default::default() };
    let r = isotropic_sparsify_with(&family, epsilon, &opts)?;
    let weights = r.weights_by_row(rows.rows());
    let support = weights.iter().filter(|&&w| w != 0.0).count();
    let outputs = json!({
        "m": rows.rows(),
        "n": rows.cols(),
        "t": r.t,
        "c_iso": r.c_iso,
        "doublings": r.doublings,
        "theta": r.theta,
        "indices": one_based(&r.indices),
        "scalars": r.scalars,
        "weights": weights,
        "support": support,
        "residual": r.residual,
    });
    let certification = certify.then(|| Certification::new("isotropic residual", r.residual, epsilon, 0.0));
    Ok(Outcome { outputs, certification })
}

fn spectral_certification(r: &SpectralResult) -> Certification {
    let violation = -(r.lower_margin.min(r.upper_margin));
    Certification::new("sandwich violation", violation, 0.0, r.slack)
}

fn spectral_outputs(ops: &OuterProductSum, r: &SpectralResult, epsilon: f64) -> Value {
    json!({
        "m": ops.m(),
        "n": ops.n(),
        "rank": r.rank,
        "support": r.weights.support_size,
        "budget": support_budget(r.rank, epsilon),
        "stage1_support": r.stage1_support,
        "stage1_residual": r.stage1_residual,
        "stage2_skipped": r.stage2_skipped,
        "lower_margin": r.lower_margin,
        "upper_margin": r.upper_margin,
        "weights": r.weights.s,
    })
}

pub fn spectral(vectors: &hcosh::Matrix, epsilon: f64, certify: bool) -> CliResult<Outcome> {
    let ops = OuterProductSum::new((0..vectors.rows()).map(|i| vectors.row(i).to_vec()).collect())?;
    let opts = SpectralOptions { certify, ..Default::default() };
    let r = spectral_sparsify_with(&ops, epsilon, &opts)?;
    let certification = certify.then(|| spectral_certification(&r));
    Ok(Outcome { outputs: spectral_outputs(&ops, &r, epsilon), certification })
}

pub fn graph(
    n: usize,
    edges: &[(usize, usize, f64)],
    epsilon: f64,
    certify: bool,
    sparse_out: Option<&Path>,
) -> CliResult<Outcome> {
    let ops = laplacian_from_graph(edges, n)?;
    let opts = SpectralOptions { certify, ..Default::default() };
    let r = spectral_sparsify_with(&ops, epsilon, &opts)?;
    let kept: Vec<(usize, usize, f64)> =
        edges.iter().zip(&r.weights.s).filter(|(_, &s)| s != 0.0).map(|(&(i, j, w), &s)| (i, j, w * s)).collect();
    let mut outputs = spectral_outputs(&ops, &r, epsilon);
    outputs["edges"] = Value::Array(kept.iter().map(|&(i, j, w)| json!([i + 1, j + 1, w])).collect());
    if certify && n <= CUT_CHECK_MAX_N {
        let cuts = max_cut_distortion(ops.matrix(), &ops.weighted(&r.weights.s)?)?;
        outputs["cuts"] = json!({
            "count": cuts.cuts,
            "min_ratio": cuts.min_ratio,
            "max_ratio": cuts.max_ratio,
            "within": cuts.within(epsilon),
        });
    }
    if let Some(p) = sparse_out {
        write_output(p, &io::format_edge_list(n, &kept))?;
    }
    let certification = certify.then(|| spectral_certification(&r));
    Ok(Outcome { outputs, certification })
}

pub fn elementwise(
    a: &SymMatrix,
    epsilon: f64,
    t: Option<usize>,
    dense: bool,
    certify: bool,
    matrix_out: Option<&Path>,
) -> CliResult<Outcome> {
    let r = sparsify_generic_with(a, epsilon, &GenericOptions { t, dense, certify })?;
    if let Some(p) = matrix_out {
        write_output(p, &io::format_matrix_market(&r.matrix))?;
    }
    let outputs = json!({
        "n": a.n(),
        "nnz": r.matrix.nnz,
        "error": r.matrix.error,
        "theta": theta_of(a)?,
        "budget": r.plan.budget,
        "seed": Value::Null,
        "t": r.plan.t,
        "stable_rank": r.plan.stable_rank,
        "gamma": r.plan.gamma,
        "rho_sq": r.plan.rho_sq,
        "selector_epsilon": r.selector_epsilon,
        "scale": r.scale,
        "normalized_error": r.normalized_error,
        "unsymmetrized_error": r.unsymmetrized_error,
        "zeroing_error": r.zeroing_error,
        "entries": entries_json(&r.matrix),
    });
    let certification = certify.then(|| Certification::new("normalized error", r.normalized_error, epsilon, 0.0));
    Ok(Outcome { outputs, certification })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SddMode {
    Det,
    Rand,
}

pub struct SddArgs {
    pub epsilon: f64,
    pub mode: SddMode,
    pub seed: u64,
    pub norm: Option<f64>,
    pub inner_epsilon: Option<f64>,
    pub certify: bool,
}

pub fn sdd(a: &SymMatrix, args: &SddArgs, matrix_out: Option<&Path>) -> CliResult<Outcome> {
    let (r, norm_estimate, norm_source) = match args.mode {
        SddMode::Rand => {
            let (est, src) = match args.norm {
                Some(v) => (v, "given"),
                None => (power_norm_estimate(a, 1000, 1e-12), "power iteration"),
            };
            let r = sdd_sparsify_randomized(a, est, args.epsilon, args.seed)?;
            let r = if args.certify { sdd_certify(a, r)? } else { r };
            (r, Some(est), Some(src))
        }
        SddMode::Det => {
            let mut opts = DeterministicOptions { inner_epsilon: args.inner_epsilon, ..Default::default() };
            opts.spectral.certify = args.certify;
            (sdd_sparsify_deterministic_with(a, args.epsilon, &opts)?, None, None)
        }
    };
    if let Some(p) = matrix_out {
        write_output(p, &io::format_matrix_market(&r.matrix))?;
    }
    let norm = if args.certify { Some(a.spectral_norm()?) } else { None };
    let outputs = json!({
        "n": a.n(),
        "mode": match args.mode { SddMode::Det => "det", SddMode::Rand => "rand" },
        "nnz": r.matrix.nnz,
        "error": r.matrix.error,
        "theta": r.theta,
        "budget": r.nnz_budget,
        "seed": r.seed,
        "t": r.t,
        "inner_epsilon": r.inner_epsilon,
        "norm": norm,
        "norm_estimate": norm_estimate,
        "norm_source": norm_source,
        "entries": entries_json(&r.matrix),
    });
    let certification = match (norm, r.matrix.error) {
        (Some(norm), Some(err)) => Some(Certification::new("sdd error", err, args.epsilon * norm, 1e-12 * norm)),
        _ => None,
    };
    Ok(Outcome { outputs, certification })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Family,
    Group,
}

pub fn verify_identities(trials: usize, seed: u64) -> CliResult<Outcome> {
    let checks = run_identity_suite(trials, seed)?;
    let failures: usize = checks.iter().map(|c| c.failures).sum();
    let list: Vec<Value> = checks
        .iter()
        .map(|c| json!({"name": c.name, "trials": c.trials, "worst": c.worst, "failures": c.failures}))
        .collect();
    Ok(Outcome {
        outputs: json!({"tolerance": IDENTITY_TOL, "checks": list}),
        certification: Some(Certification::new("identity failures", failures as f64, 0.0, 0.0)),
    })
}

pub fn verify_family_file(mats: Vec<SymMatrix>) -> CliResult<Outcome> {
    if mats.is_empty() {
        return Err(CliError::Input("matrix list is empty".into()));
    }
    let w = vec![1.0 / mats.len() as f64; mats.len()];
    let family = MatrixFamily::centered(mats, w)?;
    let r = verify_family(&family)?;
    let violations = [r.norm_ok(), r.mean_ok(), r.variance_ok()].iter().filter(|ok| !**ok).count();
    Ok(Outcome {
        outputs: json!({
            "max_norm": r.max_norm,
            "gamma": r.gamma,
            "zero_mean_residual": r.zero_mean_residual,
            "variance": r.variance,
            "rho_sq": r.rho_sq,
            "steps_checked": r.steps_checked,
        }),
        certification: Some(Certification::new("family invariant violations", violations as f64, 0.0, 0.0)),
    })
}

pub fn verify_group(table: &GroupTable) -> CliResult<Outcome> {
    let assoc = table.check_associativity_full();
    let inverses: Vec<usize> = (0..table.n()).map(|g| table.inverse(g) + 1).collect();
    Ok(Outcome {
        outputs: json!({
            "order": table.n(),
            "identity": table.identity() + 1,
            "inverses": inverses,
            "abelian": table.is_abelian(),
            "associative": assoc.is_ok(),
        }),
        certification: Some(Certification::new("associativity violations", if assoc.is_ok() { 0.0 } else { 1.0 }, 0.0, 0.0)),
    })
}
