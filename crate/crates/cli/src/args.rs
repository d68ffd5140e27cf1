use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tzsolve_core::pipeline::{Format, DEFAULT_EPS};

#[derive(Debug, Parser)]
#[command(name = "tzsolve", version, about = "Superfast Toeplitz solver")]
pub struct CliConfig {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "TZSOLVE_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve T x = b.
    Solve(SolveArgs),
    /// Compress the Cauchy-like form of T and report ranks.
    Compress(CompressArgs),
    /// Print a priori rank bounds per tree level as CSV.
    Ranks(RanksArgs),
    /// Time build and solve over a range of sizes.
    Bench(BenchArgs),
    /// Run the dense-oracle checks at a small size.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Tuning {
    /// Target relative accuracy, in (0, 1).
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub tol: f64,

    /// Smallest leaf size of the cluster tree.
    #[arg(long, default_value_t = 64)]
    pub n_min: usize,

    #[arg(long, default_value_t = Format::Hss)]
    pub format: Format,

    /// HODLR: one fADI per tree level.
    #[arg(long)]
    pub fast: bool,

    /// HSS: all leaf bases from a single fADI.
    #[arg(long)]
    pub leaf_accel: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Toeplitz matrix JSON: {"n", "col", "row"}.
    #[arg(long)]
    pub matrix: PathBuf,

    /// Right-hand side JSON: [[re, im], ...] or {"b": [[re, im], ...]}.
    #[arg(long)]
    pub rhs: PathBuf,

    /// Output path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also compute the residual and, for small n, the dense error.
    #[arg(long)]
    pub verify: bool,

    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// Toeplitz matrix JSON; a seeded random matrix of size --n otherwise.
    #[arg(long, conflicts_with = "n")]
    pub matrix: Option<PathBuf>,

    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Stats JSON path (stdout if omitted).
    #[arg(long)]
    pub stats: Option<PathBuf>,

    /// Measure errors against the dense matrix (n <= 2048).
    #[arg(long)]
    pub verify: bool,

    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct RanksArgs {
    #[arg(long)]
    pub n: usize,

    #[arg(long, default_value_t = 2)]
    pub rho: usize,

    #[arg(long)]
    pub eps: f64,

    #[arg(long, default_value_t = 1)]
    pub sep: usize,

    #[arg(long, default_value_t = 64)]
    pub n_min: usize,

    /// Also measure the epsilon-rank of one block per level on a seeded
    /// random Cauchy-like matrix (n <= 2048).
    #[arg(long)]
    pub measure: bool,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Benchmark this matrix instead of random ones.
    #[arg(long)]
    pub matrix: Option<PathBuf>,

    #[arg(long, default_value_t = 10)]
    pub min_log2: u32,

    #[arg(long, default_value_t = 15)]
    pub max_log2: u32,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Timed runs per size; the median is reported.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,

    /// Also report the relative residual.
    #[arg(long)]
    pub verify: bool,

    /// CSV path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 256)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long, default_value_t = 64)]
    pub n_min: usize,

    /// Report path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
