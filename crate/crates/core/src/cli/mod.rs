//! Command-line interface.
//!
//! One executable with subcommands covering the whole pipeline. Every
//! subcommand takes `--seed` and honors it end to end; `pipeline` runs the
//! full chain from one TOML config and emits a hash manifest over its
//! artifacts, so identical configs produce byte-identical run directories.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 input or validation failure.

mod commands;
pub mod config;
mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use commands::{parse_input_format, parse_seeding};

pub use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "social-circuits",
    version,
    about = "Strategic-circuit reconstruction from conflict participation time series"
)]
struct Cli {
    /// Worker threads for parallel sections (0 = library default).
    /// Env override: SOCIAL_CIRCUITS_WORKERS.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Series file.
    input: PathBuf,
    /// Input layout: lines or matrix.
    #[arg(long, default_value = "lines")]
    input_format: String,
    /// Drop events smaller than this during ingestion.
    #[arg(long, default_value_t = 1)]
    min_size: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a series file and print a summary (event count, roster, sizes).
    Validate(ValidateCmd),
    /// Measure strategic edges for one class against the permutation null.
    Extract(ExtractCmd),
    /// Generate a synthetic series from a circuit file.
    Simulate(SimulateCmd),
    /// Compare two series (size distributions plus fine-grained statistics).
    Compare(CompareCmd),
    /// Fit the sparse group decomposition and emit groups.
    SparseCode(SparseCodeCmd),
    /// Measure edges over sparse groups (reduced strategy space).
    SparseExtract(SparseExtractCmd),
    /// Perturbation scan: how stable is the output distribution?
    Degeneracy(DegeneracyCmd),
    /// Produce planted-circuit synthetic data for testing and tutorials.
    Generate(GenerateCmd),
    /// Run the full pipeline from a TOML config into a run directory.
    Pipeline(PipelineCmd),
}

#[derive(Args)]
struct ValidateCmd {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct ExtractCmd {
    #[command(flatten)]
    input: InputArgs,
    /// Strategy class, e.g. "C(2,1)".
    #[arg(long)]
    class: String,
    /// Monte-Carlo permutation count.
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    /// Enumerate all orderings instead of sampling (short series only).
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum source-tuple support N(i).
    #[arg(long, default_value_t = 5)]
    min_source_count: u32,
    /// Drop edges whose source and target tuples share members.
    #[arg(long)]
    exclude_overlapping: bool,
    /// Benjamini-Hochberg FDR post-filter (0 = off).
    #[arg(long, default_value_t = 0.0)]
    bh_q: f64,
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Tabular output format: json (JSON lines) or csv.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct SimulateCmd {
    /// Circuit JSON file.
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    n_events: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// empirical_first or random_pair.
    #[arg(long, default_value = "random_pair")]
    seeding: String,
    /// Observed series for empirical_first seeding.
    #[arg(long)]
    series: Option<PathBuf>,
    #[arg(long, default_value = "lines")]
    input_format: String,
    #[arg(long, default_value_t = 2)]
    min_fight_size: usize,
    #[arg(long, default_value_t = 100)]
    max_resample: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareCmd {
    observed: PathBuf,
    simulated: PathBuf,
    #[arg(long, default_value = "lines")]
    input_format: String,
    /// json or csv.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct SparseCodeCmd {
    #[command(flatten)]
    input: InputArgs,
    /// Number of components.
    #[arg(long, default_value_t = 12)]
    k: usize,
    /// Sparsity penalty; negative selects from a built-in grid.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Group threshold: "otsu" or "relative:<frac>".
    #[arg(long, default_value = "otsu")]
    threshold: String,
    /// Write the fitted basis JSON here.
    #[arg(long)]
    basis_out: Option<PathBuf>,
    /// Groups JSON-lines output (stdout when omitted).
    #[arg(long)]
    groups_out: Option<PathBuf>,
    /// Sweep component counts, e.g. "4,8,12,16"; prints an error/sparsity
    /// curve instead of fitting once.
    #[arg(long)]
    sweep_k: Option<String>,
}

#[derive(Args)]
struct SparseExtractCmd {
    #[command(flatten)]
    input: InputArgs,
    /// Groups file (JSON lines, as written by sparse-code).
    #[arg(long)]
    groups: PathBuf,
    /// Widest group treated as a tuple.
    #[arg(long, default_value_t = 5)]
    max_tuple: usize,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    min_source_count: u32,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct DegeneracyCmd {
    #[arg(long)]
    circuit: PathBuf,
    /// Observed series (seeding pool for simulations).
    #[arg(long)]
    series: PathBuf,
    #[arg(long, default_value = "lines")]
    input_format: String,
    /// Comma-separated modes: shuffle_weights, rescale(F), jitter(S).
    #[arg(long, default_value = "shuffle_weights,rescale(0.5),jitter(0.05)")]
    modes: String,
    #[arg(long, default_value_t = 20)]
    n_perturbations: usize,
    /// Events per simulation (0 = observed length).
    #[arg(long, default_value_t = 0)]
    n_events: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "empirical_first")]
    seeding: String,
    #[arg(long, default_value_t = 2)]
    min_fight_size: usize,
    #[arg(long, default_value_t = 100)]
    max_resample: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateCmd {
    #[arg(long)]
    roster_size: usize,
    #[arg(long)]
    n_events: usize,
    /// Uniform baseline join probability.
    #[arg(long, default_value_t = 0.15)]
    baseline: f64,
    /// Planted edge, repeatable: "A,B->C=0.6".
    #[arg(long = "edge")]
    edges: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    min_fight_size: usize,
    #[arg(long, default_value_t = 100)]
    max_resample: usize,
    /// sum or max_magnitude.
    #[arg(long, default_value = "sum")]
    combine: String,
    /// Series output (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the generating circuit JSON.
    #[arg(long)]
    circuit_out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineCmd {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
}

/// Exit code for a failed run: 2 for input/validation problems, 1 for
/// runtime failures.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ParseError { .. }
        | Error::EmptyEvent { .. }
        | Error::DuplicateId { .. }
        | Error::EmptySeries
        | Error::UnknownIndividual { .. }
        | Error::InvalidConfig(_)
        | Error::ExhaustiveTooLarge { .. }
        | Error::MissingSeedSeries
        | Error::RosterMismatch { .. }
        | Error::Io(_) => 2,
        Error::NoObservations { .. }
        | Error::MissingNullKey { .. }
        | Error::EmptyFamily
        | Error::Json(_) => 1,
    }
}

fn workers_from(cli_value: usize) -> usize {
    std::env::var("SOCIAL_CIRCUITS_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(cli_value)
}

fn dispatch(cli: Cli) -> crate::Result<()> {
    let workers = workers_from(cli.workers);
    if workers > 0 {
        // First initialization wins; later calls are no-ops.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match cli.command {
        Command::Validate(c) => commands::cmd_validate(&commands::ValidateArgs {
            input: c.input.input,
            input_format: parse_input_format(&c.input.input_format)?,
            min_size: c.input.min_size,
        }),
        Command::Extract(c) => commands::cmd_extract(&commands::ExtractArgs {
            input: c.input.input,
            input_format: parse_input_format(&c.input.input_format)?,
            min_size: c.input.min_size,
            class: c.class,
            permutations: c.permutations,
            exhaustive: c.exhaustive,
            seed: c.seed,
            min_source_count: c.min_source_count,
            exclude_overlapping: c.exclude_overlapping,
            bh_q: c.bh_q,
            output: c.output,
            format: c.format,
        }),
        Command::Simulate(c) => commands::cmd_simulate(&commands::SimulateArgs {
            circuit: c.circuit,
            n_events: c.n_events,
            seed: c.seed,
            seeding: parse_seeding(&c.seeding)?,
            series: c.series,
            input_format: parse_input_format(&c.input_format)?,
            min_fight_size: c.min_fight_size,
            max_resample: c.max_resample,
            output: c.output,
        }),
        Command::Compare(c) => commands::cmd_compare(&commands::CompareArgs {
            observed: c.observed,
            simulated: c.simulated,
            input_format: parse_input_format(&c.input_format)?,
            format: c.format,
        }),
        Command::SparseCode(c) => commands::cmd_sparse_code(&commands::SparseCodeArgs {
            input: c.input.input,
            input_format: parse_input_format(&c.input.input_format)?,
            min_size: c.input.min_size,
            k: c.k,
            lambda: c.lambda,
            max_iters: c.max_iters,
            tol: c.tol,
            seed: c.seed,
            threshold: c.threshold,
            basis_out: c.basis_out,
            groups_out: c.groups_out,
            sweep_k: c.sweep_k,
        }),
        Command::SparseExtract(c) => commands::cmd_sparse_extract(&commands::SparseExtractArgs {
            input: c.input.input,
            input_format: parse_input_format(&c.input.input_format)?,
            min_size: c.input.min_size,
            groups: c.groups,
            max_tuple: c.max_tuple,
            permutations: c.permutations,
            exhaustive: c.exhaustive,
            seed: c.seed,
            min_source_count: c.min_source_count,
            output: c.output,
            format: c.format,
        }),
        Command::Degeneracy(c) => commands::cmd_degeneracy(&commands::DegeneracyArgs {
            circuit: c.circuit,
            series: c.series,
            input_format: parse_input_format(&c.input_format)?,
            modes: c.modes,
            n_perturbations: c.n_perturbations,
            n_events: c.n_events,
            seed: c.seed,
            seeding: parse_seeding(&c.seeding)?,
            min_fight_size: c.min_fight_size,
            max_resample: c.max_resample,
            output: c.output,
        }),
        Command::Generate(c) => commands::cmd_generate(&commands::GenerateArgs {
            roster_size: c.roster_size,
            n_events: c.n_events,
            baseline: c.baseline,
            edges: c.edges,
            seed: c.seed,
            min_fight_size: c.min_fight_size,
            max_resample: c.max_resample,
            combine: c.combine,
            output: c.output,
            circuit_out: c.circuit_out,
        }),
        Command::Pipeline(c) => commands::cmd_pipeline(&commands::PipelineArgs { config: c.config }),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
