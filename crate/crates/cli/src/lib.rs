//! The `geoinr` command line: synthesize grids, train, sweep, report,
//! benchmark and encode.
//!
//! Every command is reachable as a function taking explicit input and output
//! streams, so the binary is a thin wrapper around [`run`].

use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod artifacts;
pub mod commands;
pub mod error;
pub mod plan;

pub use error::{CliError, Result};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "GEOINR_THREADS";

/// Pool size from `GEOINR_THREADS`, else the number of logical CPUs.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Parser)]
#[command(name = "geoinr", version, about = "Spherical location encodings and fairness audits for gridded Earth signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic grid.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Train one model and write its checkpoint, history and manifest.
    Train(TrainArgs),
    /// Run a cross-product of configs from a sweep file.
    Sweep(SweepArgs),
    /// Stratified, country and error-grid reports for a run or a sweep.
    Report(ReportArgs),
    /// Time encoding generation at matched sizes.
    Bench(BenchArgs),
    /// Encode `lat,lon` lines from stdin as CSV on stdout.
    Encode(EncodeArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Alternating land/sea squares.
    Checkerboard(CheckerboardArgs),
    /// Continents plus small islands.
    Archipelago(ArchipelagoArgs),
}

#[derive(Debug, Args)]
pub struct GridOut {
    /// Output grid path; `.csv` selects the CSV format.
    #[arg(long, short)]
    pub out: PathBuf,
    /// `csv` or `fairgrid`; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckerboardArgs {
    #[arg(long, default_value_t = 15.0)]
    pub cell_deg: f64,
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: GridOut,
}

#[derive(Debug, Args)]
pub struct ArchipelagoArgs {
    #[arg(long, default_value_t = 3)]
    pub continents: usize,
    #[arg(long, default_value_t = 40)]
    pub islands: usize,
    #[arg(long, default_value_t = 0.3)]
    pub island_radius_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub island_radius_max: f64,
    #[arg(long, default_value_t = 0.5)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: GridOut,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Re-run exactly what a previous run's manifest describes.
    #[arg(long, conflicts_with_all = ["grid", "encoding"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    /// Encoding spec string, e.g. `sh:L=20` or `sw:N=130,M=4,Q=6,k=6`.
    #[arg(long, required_unless_present = "manifest")]
    pub encoding: Option<String>,
    /// Training points; validation draws `round(0.2·N)` more.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// `grid_uniform` or `area_weighted`.
    #[arg(long, default_value = "grid_uniform")]
    pub sampling: String,
    /// Model and shuffling seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampling seed; defaults to `--seed`.
    #[arg(long)]
    pub data_seed: Option<u64>,
    #[arg(long, default_value_t = 64)]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 30.0)]
    pub omega0: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 2048)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub island_max_km2: Option<f64>,
    #[arg(long)]
    pub coast_band_km: Option<f64>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep config: a run manifest whose values may contain `{a,b}` lists.
    pub config: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Concurrent runs, capped by `GEOINR_THREADS`.
    #[arg(long, short, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A run directory (with `manifest.txt`) or a sweep directory (with `sweep.csv`).
    pub dir: PathBuf,
    /// Also write `error_grid.csv` with bins of this size.
    #[arg(long)]
    pub bin_deg: Option<f64>,
    /// Minimum points for a country to count in `countries.csv`.
    #[arg(long, default_value_t = 1)]
    pub min_country_points: usize,
    /// Factor applied to every loss written.
    #[arg(long, default_value_t = 1.0)]
    pub loss_scale: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [25usize, 100, 625, 900])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Write the table here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub encoding: String,
}

/// Runs one parsed command.
pub fn run(cli: Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth(c) => commands::synth::run(c, stdout),
        Command::Train(a) => commands::train::run(a, stdout),
        Command::Sweep(a) => commands::sweep::run(a, stdout),
        Command::Report(a) => commands::report::run(a, stdout),
        Command::Bench(a) => commands::bench::run(a, stdout),
        Command::Encode(a) => commands::encode::run(a, stdin, stdout),
    }
}
