//! `walker-lab`: simulate, analyse and sweep the wave-memory walker.
//!
//! Every command prints exactly one JSON summary line on standard output;
//! progress and diagnostics go to standard error. Exit status is 0 on
//! success, 1 on a runtime failure and 2 on a usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use walker_core::model::{DEFAULT_FRICTION, DEFAULT_SOURCE_CUTOFF, DEFAULT_TARGET_SPEED};

#[derive(Debug, Parser)]
#[command(name = "walker-lab", version, about = "Wave-memory walker in a harmonic well")]
struct Cli {
    /// Read and write lengths in metres, times in seconds and speeds in m/s
    /// (Faraday wavelength 4.75 mm, Faraday period 0.025 s) instead of
    /// Faraday units.
    #[arg(long, global = true)]
    si: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one walker and write its trajectory.
    Simulate(SimulateArgs),
    /// Find the kick coefficient that sets the free walking speed.
    Calibrate(CalibrateArgs),
    /// Observables, eigenstate label, orbit fits and intermittency of a trajectory.
    Analyze(AnalyzeArgs),
    /// Centred-Bessel decomposition of a trajectory's wave field.
    Decompose(DecomposeArgs),
    /// Eigenstate label of a trajectory or of an explicit (R, Lz) pair.
    Classify(ClassifyArgs),
    /// Resumable parameter sweep over well width and memory.
    Sweep(SweepArgs),
    /// Extract figure tables from a completed sweep directory.
    #[command(after_help = FIGURES_HELP)]
    Figures(FiguresArgs),
}

/// Bath and walker parameters shared by the commands that simulate.
#[derive(Debug, Args)]
struct BathArgs {
    /// Free walking speed [Faraday wavelengths per period; m/s with --si].
    #[arg(long, default_value_t = DEFAULT_TARGET_SPEED)]
    speed: f64,
    /// Fraction of the velocity kept through each impact, in (0, 1).
    #[arg(long, default_value_t = DEFAULT_FRICTION)]
    friction: f64,
    /// Spatial damping length of each source [Faraday wavelengths; m with
    /// --si]; undamped when omitted.
    #[arg(long)]
    delta: Option<f64>,
    /// Drop sources whose temporal weight falls below this, in (0, 1).
    #[arg(long, default_value_t = DEFAULT_SOURCE_CUTOFF)]
    cutoff: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Dimensionless well width.
    #[arg(long, required_unless_present = "config")]
    lambda: Option<f64>,
    /// Memory parameter M (memory time in Faraday periods).
    #[arg(long, required_unless_present = "config")]
    memory: Option<f64>,
    /// Number of bounces to record.
    #[arg(long, required_unless_present = "config")]
    bounces: Option<usize>,
    /// Seed of the initial condition.
    #[arg(long, env = "WALKER_LAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Kick coefficient; calibrated to --speed when omitted.
    #[arg(long)]
    kick: Option<f64>,
    /// Keep the transient in later analysis (it is always written to the file).
    #[arg(long)]
    keep_transient: bool,
    /// Re-run a configuration: a trajectory sidecar (`trajectory.json`) or a
    /// bare configuration document. Replaces the model flags.
    #[arg(long, conflicts_with_all = ["lambda", "memory", "kick"])]
    config: Option<PathBuf>,
    #[command(flatten)]
    bath: BathArgs,
    /// Output directory for `trajectory.csv` and `trajectory.json`.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Memory parameter M.
    #[arg(long)]
    memory: f64,
    #[command(flatten)]
    bath: BathArgs,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trajectory CSV (with its JSON sidecar alongside).
    trajectory: PathBuf,
    /// Sliding window for the intermittency profile [Faraday periods; s with
    /// --si]; defaults to 4π(1 − ε/2)/V.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    /// Trajectory CSV (with its JSON sidecar alongside).
    trajectory: PathBuf,
    /// Highest Bessel order.
    #[arg(long, default_value_t = 40)]
    nmax: usize,
    /// Evaluate the field just before this bounce (default: after the last one).
    #[arg(long)]
    at_bounce: Option<u64>,
    /// Directory for `<stem>.spectrum.json` and `<stem>.powers.csv`
    /// (default: next to the trajectory).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Trajectory CSV to classify.
    #[arg(required_unless_present = "radius", conflicts_with_all = ["radius", "lz"])]
    trajectory: Option<PathBuf>,
    /// Mean radius R̄ [Faraday wavelengths; m with --si].
    #[arg(long, requires = "lz", allow_hyphen_values = true)]
    radius: Option<f64>,
    /// Mean angular momentum L̄z [Faraday wavelengths; m with --si].
    #[arg(long, requires = "radius", allow_hyphen_values = true)]
    lz: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep specification JSON (replaces the grid and model flags).
    #[arg(long, conflicts_with_all = ["lambda_grid", "memory_grid", "bounces", "replicates", "kick"])]
    spec: Option<PathBuf>,
    /// Well widths: `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, required_unless_present = "spec")]
    lambda_grid: Option<String>,
    /// Memory values: `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, required_unless_present = "spec")]
    memory_grid: Option<String>,
    /// Seeds per grid point.
    #[arg(long, default_value_t = 1)]
    replicates: u32,
    /// Bounces per run.
    #[arg(long, required_unless_present = "spec")]
    bounces: Option<usize>,
    /// Base seed; each point's seed is derived from it and the point's indices.
    #[arg(long, env = "WALKER_LAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Fixed kick coefficient; otherwise calibrated per memory value.
    #[arg(long)]
    kick: Option<f64>,
    #[command(flatten)]
    bath: BathArgs,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also write every run's trajectory under `trajectories/`.
    #[arg(long)]
    keep_trajectories: bool,
    /// Sweep directory; an existing one is resumed.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Figure {
    #[value(name = "2a")]
    Calibration,
    #[value(name = "2b")]
    Tongues,
    #[value(name = "4a")]
    Radii,
    #[value(name = "4b")]
    AngularMomenta,
    #[value(name = "4c")]
    Lattice,
    #[value(name = "6c")]
    Intermittency,
}

#[derive(Debug, Args)]
struct FiguresArgs {
    /// Completed sweep directory.
    directory: PathBuf,
    /// Figures to extract (repeat or comma-separate).
    #[arg(long, required = true, value_delimiter = ',')]
    which: Vec<Figure>,
    /// Output directory (default: the sweep directory).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

const FIGURES_HELP: &str = "\
Tables written (CSV, one header row):
  2a  fig2a.csv      Lambda, R_bar                     stable circles of a single M <= 15 sweep
      fig2a_fit.csv  M, slope, intercept, shift        least-squares line R_bar = slope*Lambda + intercept
  2b  fig2b.csv      M, Lambda, R_bar                  stable circles, every memory value
  4a  fig4a.csv      M, Lambda, replicate, R_bar, n, m, distance, converged
  4b  fig4b.csv      M, Lambda, replicate, Lz_bar, n, m, distance, converged
  4c  fig4c.csv      n, m, R_bar, Lz_bar, R_spread, Lz_spread, count
                     converged states within 0.2 of their lattice node, grouped by (n, m)
  6c  fig6c.csv      bin_low, bin_high, probability    pooled sliding-window Lz histogram
                                                       (needs a sweep run with --keep-trajectories)";

/// A failure with its exit status.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args, cli.si),
        Command::Calibrate(args) => commands::calibrate(args, cli.si),
        Command::Analyze(args) => commands::analyze(args, cli.si),
        Command::Decompose(args) => commands::decompose(args),
        Command::Classify(args) => commands::classify(args, cli.si),
        Command::Sweep(args) => commands::sweep(args, cli.si),
        Command::Figures(args) => commands::figures(args),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(message)) => {
            use clap::CommandFactory;
            Cli::command()
                .error(clap::error::ErrorKind::ValueValidation, message)
                .exit()
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
