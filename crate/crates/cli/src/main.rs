//! `hcosh`: command-line front end for the sparsification toolkit.
//!
//! Every run prints a JSON report on standard output. Exit status is 0 when
//! certification passes (or is switched off), 2 on input errors and 3 when
//! certification fails.

mod commands;
mod identities;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{CliError, Outcome, SddMode, Suite};
use hcosh::{io, Error};
use report::{Certification, RunReport};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "hcosh", version, about = "Deterministic matrix sparsification and balancing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args, Clone)]
struct Common {
    /// Worker threads for the candidate scans (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "on")]
    certify: OnOff,
    /// Also write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sign a list of matrices of norm at most one.
    Balance {
        /// `k n` header followed by `k` blocks of `n` rows.
        #[arg(long)]
        matrices: PathBuf,
        /// Also report uniformly random signs drawn from this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Greedy expanding generator multiset for a finite group.
    Cayley {
        #[arg(long)]
        table: Option<PathBuf>,
        /// Built-in group: cyclic:N, dihedral:N or symmetric:K.
        #[arg(long)]
        group: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 8.0)]
        c0: f64,
        #[arg(long, default_value_t = 3)]
        max_doublings: usize,
        #[arg(long)]
        exclude_identity: bool,
        /// Record the Estrada identity at every step (small groups).
        #[arg(long)]
        audit: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sparsify rows in isotropic position.
    Isotropic {
        /// Dense `m n` matrix whose rows satisfy Σ u uᵀ = I.
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 8.0)]
        c_iso: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Reweight a sum of outer products.
    Spectral {
        /// Dense `m n` matrix, one vector per row.
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Spectral sparsifier of a weighted graph.
    Graph {
        /// `n m` header followed by `m` lines `i j w`.
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// Write the reweighted edge list here.
        #[arg(long)]
        sparse_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Element-wise sparsifier of a symmetric matrix.
    Elementwise {
        /// Dense or Matrix Market file.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long)]
        t: Option<usize>,
        /// Evaluate candidates by full eigensolves.
        #[arg(long)]
        dense: bool,
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Element-wise sparsifier of a diagonally dominant (θ-SDD) matrix.
    Sdd {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "det")]
        mode: SddMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Upper estimate of ||A|| for the sampler (default: power iteration).
        #[arg(long)]
        norm: Option<f64>,
        /// Override of the spectral-stage accuracy.
        #[arg(long)]
        inner_epsilon: Option<f64>,
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Self-checks: matrix identities, family invariants, group tables.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        matrices: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        group: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("--{flag} is required for this suite")))
}

fn inputs(cmd: &Command) -> Value {
    match cmd {
        Command::Balance { matrices, seed, .. } => json!({"matrices": matrices, "seed": seed}),
        Command::Cayley { table, group, epsilon, c0, max_doublings, exclude_identity, audit, .. } => json!({
            "table": table, "group": group, "epsilon": epsilon, "c0": c0,
            "max_doublings": max_doublings, "exclude_identity": exclude_identity, "audit": audit,
        }),
        Command::Isotropic { vectors, epsilon, t, c_iso, .. } => {
            json!({"vectors": vectors, "epsilon": epsilon, "t": t, "c_iso": c_iso})
        }
        Command::Spectral { vectors, epsilon, .. } => json!({"vectors": vectors, "epsilon": epsilon}),
        Command::Graph { edges, epsilon, .. } => json!({"edges": edges, "epsilon": epsilon}),
        Command::Elementwise { matrix, epsilon, t, dense, .. } => {
            json!({"matrix": matrix, "epsilon": epsilon, "t": t, "dense": dense})
        }
        Command::Sdd { matrix, epsilon, mode, seed, norm, inner_epsilon, .. } => json!({
            "matrix": matrix, "epsilon": epsilon, "mode": format!("{mode:?}").to_lowercase(),
            "seed": (*mode == SddMode::Rand).then_some(*seed), "norm": norm, "inner_epsilon": inner_epsilon,
        }),
        Command::Verify { suite, trials, seed, matrices, table, group, .. } => json!({
            "suite": format!("{suite:?}").to_lowercase(), "trials": trials, "seed": seed,
            "matrices": matrices, "table": table, "group": group,
        }),
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome, CliError> {
    use commands::*;
    let certify = common(cmd).certify == OnOff::On;
    match cmd {
        Command::Balance { matrices, seed, .. } => balance(&io::parse_matrix_list(&read_input(matrices)?)?, *seed),
        Command::Cayley { table, group, epsilon, c0, max_doublings, exclude_identity, audit, .. } => {
            let g = load_group(table.as_deref(), group.as_deref())?;
            let args = CayleyArgs {
                epsilon: *epsilon,
                c0: *c0,
                max_doublings: *max_doublings,
                exclude_identity: *exclude_identity,
                audit: *audit,
                certify,
            };
            cayley(&g, &args)
        }
        Command::Isotropic { vectors, epsilon, t, c_iso, .. } => {
            isotropic(&io::parse_dense(&read_input(vectors)?)?, *epsilon, *t, *c_iso, certify)
        }
        Command::Spectral { vectors, epsilon, .. } => spectral(&io::parse_dense(&read_input(vectors)?)?, *epsilon, certify),
        Command::Graph { edges, epsilon, sparse_out, .. } => {
            let (n, list) = io::parse_edge_list(&read_input(edges)?)?;
            graph(n, &list, *epsilon, certify, sparse_out.as_deref())
        }
        Command::Elementwise { matrix, epsilon, t, dense, matrix_out, .. } => {
            let a = io::parse_symmetric(&read_input(matrix)?)?;
            elementwise(&a, *epsilon, *t, *dense, certify, matrix_out.as_deref())
        }
        Command::Sdd { matrix, epsilon, mode, seed, norm, inner_epsilon, matrix_out, .. } => {
            let a = io::parse_symmetric(&read_input(matrix)?)?;
            let args = SddArgs {
                epsilon: *epsilon,
                mode: *mode,
                seed: *seed,
                norm: *norm,
                inner_epsilon: *inner_epsilon,
                certify,
            };
            sdd(&a, &args, matrix_out.as_deref())
        }
        Command::Verify { suite, trials, seed, matrices, table, group, .. } => match suite {
            Suite::Identities => verify_identities(*trials, *seed),
            Suite::Family => {
                let path = need(matrices.as_ref(), "matrices")?;
                verify_family_file(io::parse_matrix_list(&read_input(path)?)?)
            }
            Suite::Group => verify_group(&load_group(table.as_deref(), group.as_deref())?),
        },
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Balance { common, .. }
        | Command::Cayley { common, .. }
        | Command::Isotropic { common, .. }
        | Command::Spectral { common, .. }
        | Command::Graph { common, .. }
        | Command::Elementwise { common, .. }
        | Command::Sdd { common, .. }
        | Command::Verify { common, .. } => common,
    }
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Balance { .. } => "balance",
        Command::Cayley { .. } => "cayley",
        Command::Isotropic { .. } => "isotropic",
        Command::Spectral { .. } => "spectral",
        Command::Graph { .. } => "graph",
        Command::Elementwise { .. } => "elementwise",
        Command::Sdd { .. } => "sdd",
        Command::Verify { .. } => "verify",
    }
}

fn emit(report: &RunReport, out: Option<&PathBuf>) -> ExitCode {
    let text = report.to_json();
    print!("{text}");
    if let Some(p) = out {
        if let Err(e) = commands::write_output(p, &text) {
            return fail(e);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn fail(e: CliError) -> ExitCode {
    match e {
        CliError::Input(msg) => eprintln!("error: {msg}"),
        CliError::Core(err) => eprintln!("error: {err}"),
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = common(&cli.command).clone();
    if let Some(k) = opts.threads {
        if k == 0 {
            return fail(CliError::Input("--threads must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return fail(CliError::Input(format!("cannot size the thread pool: {e}")));
        }
    }
    let start = Instant::now();
    let (outputs, certification) = match dispatch(&cli.command) {
        Ok(Outcome { outputs, certification }) => (outputs, certification),
        Err(CliError::Core(Error::Certification { metric, achieved, bound })) => (
            json!({"error": format!("{metric} = {achieved:e} exceeds {bound:e}")}),
            Some(Certification::new(metric, achieved, bound, 0.0)),
        ),
        Err(e) => return fail(e),
    };
    let report = RunReport {
        subcommand: subcommand_name(&cli.command).to_string(),
        inputs: inputs(&cli.command),
        outputs,
        certification,
        timing: start.elapsed().as_secs_f64(),
    };
    emit(&report, opts.out.as_ref())
}
