//! `vrsim`: throughput arithmetic, traffic fitting, pipeline simulation and
//! trace analysis from the command line.
//!
//! Exit codes: 0 success, 1 input error, 2 internal error.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "vrsim",
    version,
    about = "Edge-rendered VR streaming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Raw and compressed display throughput.
    Calc(CalcArgs),
    /// Run a scenario: trace CSV, delay CSV and summary JSON.
    Simulate(SimulateArgs),
    /// Statistics over a trace CSV.
    Analyze(AnalyzeArgs),
    /// Fit a frame-size mixture to a mean and threshold fraction.
    Fit(FitArgs),
    /// Drive a scenario from a recorded trace instead of its generators.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct CalcArgs {
    /// Per-eye panel resolution, e.g. 1440x1600 (two panels).
    #[arg(long, value_name = "WxH", conflicts_with_all = ["fov", "ppd"])]
    pub per_eye_res: Option<String>,
    /// Field of view in degrees, e.g. 150x120.
    #[arg(long, value_name = "HxV", requires = "ppd")]
    pub fov: Option<String>,
    /// Pixels per degree, e.g. 200 or 200x180.
    #[arg(long, value_name = "PPD")]
    pub ppd: Option<String>,
    /// Bits per pixel.
    #[arg(long)]
    pub bit_depth: f64,
    /// Frames per second.
    #[arg(long)]
    pub fps: f64,
    /// Compression ratio range, e.g. 200:300.
    #[arg(long, value_name = "LO:HI")]
    pub compression: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub scenario: std::path::PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace CSV output.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Per-frame delay CSV output.
    #[arg(long)]
    pub delays: Option<std::path::PathBuf>,
    /// Summary JSON output (also printed to stdout).
    #[arg(long)]
    pub summary: Option<std::path::PathBuf>,
    /// Overrides the scenario's duration, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Run N independent copies with seeds seed, seed+1, ...
    #[arg(long, value_name = "N")]
    pub batch: Option<u32>,
    /// Print a delay table instead of summary JSON.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub trace: std::path::PathBuf,
    /// Per-frame delay CSV to include in the report.
    #[arg(long)]
    pub delays: Option<std::path::PathBuf>,
    /// Range start, seconds.
    #[arg(long)]
    pub from: Option<f64>,
    /// Range end (exclusive), seconds.
    #[arg(long)]
    pub to: Option<f64>,
    /// Rate window, seconds.
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    /// Size threshold(s) in bytes for the fraction of larger frames.
    #[arg(long = "threshold", default_values_t = [30_000u32])]
    pub thresholds: Vec<u32>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    /// Per-window rate series by direction and layer.
    Csv,
    /// Delay table as aligned text (needs --delays).
    Table,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Mean frame size, bytes.
    #[arg(long)]
    pub mean: f64,
    /// Fraction of frames above the threshold.
    #[arg(long)]
    pub frac: f64,
    #[arg(long, default_value_t = 30_000.0)]
    pub threshold: f64,
    /// Per-frame size cap, bytes. Defaults to the target bitrate's
    /// per-frame budget with slack.
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long, default_value_t = 30e6)]
    pub target_bps: f64,
    #[arg(long, default_value_t = 72.0)]
    pub fps: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub trace: std::path::PathBuf,
    /// Scenario supplying stage, link and clock models.
    #[arg(long)]
    pub scenario: std::path::PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario's duration (bounds offset probing), seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long)]
    pub delays: Option<std::path::PathBuf>,
    #[arg(long)]
    pub summary: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Calc(a) => commands::calc(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Replay(a) => commands::replay(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
