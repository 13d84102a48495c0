use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Kernel discrepancy statistics over CSV samples, reported as JSON.
#[derive(Debug, Parser)]
#[command(name = "kdisc", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-sample discrepancy between two CSV samples.
    Mmd(MmdArgs),
    /// Dependence between two paired data streams.
    Hsic(HsicArgs),
    /// Goodness of fit of a sample against a score model.
    Ksd(KsdArgs),
}

#[derive(Debug, Args)]
pub struct MmdArgs {
    /// First sample (CSV).
    pub x: PathBuf,
    /// Second sample (CSV).
    pub y: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct HsicArgs {
    /// First stream (CSV), or the combined file when --split is given.
    pub x: PathBuf,
    /// Second stream (CSV); omit when --split is given.
    pub y: Option<PathBuf>,
    /// Column count of the first stream inside a single combined CSV.
    #[arg(long)]
    pub split: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct KsdArgs {
    /// Sample to test (CSV).
    pub x: PathBuf,
    /// Score model: gaussian:MEANS:VARIANCES, comma-separated per
    /// coordinate, each list broadcast from one value (e.g. gaussian:0:1).
    #[arg(long)]
    pub score: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Kernel: FAMILY:BANDWIDTH, FAMILY:median, indicator, or collection.
    /// Families: gaussian, laplace, imq, matern0.5 through matern4.5.
    #[arg(long, default_value = "gaussian:median")]
    pub kernel: String,

    /// Statistic: v | u | paired-u | l | d:R | b:B | x:N1 |
    /// r:M[:with-replacement].
    #[arg(long, default_value = "v")]
    pub stat: String,

    /// Pooling over a kernel collection: mean | max | fuse[:NU].
    #[arg(long)]
    pub pool: Option<String>,

    /// Divide each statistic by its design standard deviation.
    #[arg(long)]
    pub normalize: bool,

    /// Seed for subsampled (r:M) designs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Treat the first CSV row as a header.
    #[arg(long)]
    pub has_header: bool,

    /// Write the JSON report to this path instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Keep at most this many kernels from an automatic collection.
    #[arg(long)]
    pub max_kernels: Option<usize>,

    /// Cross-check the statistic against the exhaustive small-sample
    /// reference; disagreement beyond 1e-8 fails the run.
    #[arg(long)]
    pub verify: bool,
}
