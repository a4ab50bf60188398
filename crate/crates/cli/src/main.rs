//! `rcbht`: calibrate, encode, train, evaluate and monitor force/torque
//! grammar classifiers from the command line.

mod commands;
mod config;
mod exit;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Hierarchical force/torque grammars and SVM introspection.
///
/// Settings resolve in order: command-line flag, then `--config` file, then
/// the built-in default.
#[derive(Debug, Parser)]
#[command(name = "rcbht", version, propagate_version = true)]
pub struct Cli {
    /// TOML settings file (window, merge_ratio, rate, k, kernel, c_powers, folds, seed, task).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive per-axis gradient thresholds from a trial corpus.
    Calibrate(CalibrateArgs),
    /// Encode a corpus into a feature matrix (CSV plus a `.meta.json` sidecar).
    Encode(EncodeArgs),
    /// Cross-validate a kernel/C grid and fit the final probabilistic model.
    Train(TrainArgs),
    /// Replay a corpus online and write the confidence report.
    Evaluate(EvaluateArgs),
    /// Replay one trial, from a file or from standard input, through a model.
    Monitor(MonitorArgs),
    /// Render grammar maps of a corpus.
    Report(ReportArgs),
    /// Generate a seeded synthetic snap-assembly corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct EncodingFlags {
    /// Samples per primitive window [default: thresholds file window].
    #[arg(long)]
    pub window: Option<usize>,
    /// Merge ratio of the filter pipes [default: 5].
    #[arg(long)]
    pub merge_ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Directory of trial CSV files with JSON sidecars.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output thresholds document.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Samples per window [default: a quarter second at the corpus rate].
    #[arg(long)]
    pub window: Option<usize>,
    /// Task name recorded in the thresholds [default: snap].
    #[arg(long)]
    pub task: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegmentationArg {
    Fixed,
    Adaptive,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Thresholds document from `calibrate`.
    #[arg(long)]
    pub thresholds: PathBuf,
    /// `nominal-state` (one row per sub-task) or `abnormality` (one row per trial).
    #[arg(long)]
    pub regime: rcbht::features::Regime,
    /// Output features CSV.
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub encoding: EncodingFlags,
    /// Primitive segmentation.
    #[arg(long, value_enum, default_value_t = SegmentationArg::Fixed)]
    pub segmentation: SegmentationArg,
    /// Minimum r² of adaptive segments.
    #[arg(long, default_value_t = rcbht::pipeline::DEFAULT_R2_MIN)]
    pub r2_min: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Features CSV from `encode`; its `.meta.json` must sit next to it.
    #[arg(long)]
    pub features: PathBuf,
    /// Expected regime; must match the features file when given.
    #[arg(long)]
    pub regime: Option<rcbht::features::Regime>,
    /// Output model file.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Cross-validation report CSV [default: <model>.cv.csv].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Kernels to search: poly, linear, rbf, a comma list or all [default: all].
    #[arg(long)]
    pub kernel: Option<String>,
    /// Powers of ten for C, as LO..HI [default: -5..4].
    #[arg(long = "C-powers", value_name = "LO..HI", allow_hyphen_values = true)]
    pub c_powers: Option<String>,
    /// Folds [default: 5].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Fold shuffling seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Tick rate in Hz: 2, 10 or 100 [default: 10].
    #[arg(long, value_parser = config::parse_rate)]
    pub rate: Option<f64>,
    /// Confidence thresholds; repeat the flag for several [default: 0.70 to 0.95 by 0.05].
    #[arg(long, value_parser = config::parse_k)]
    pub k: Vec<f64>,
    /// Value of the report's Type column [default: the model regime].
    #[arg(long = "type")]
    pub kind: Option<String>,
    /// Report CSV [default: standard output].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Snapshot log, one JSON trace per line.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Trial CSV with its JSON sidecar; omit to read rows from standard input.
    #[arg(long, conflicts_with = "sidecar")]
    pub trial: Option<PathBuf>,
    /// Sidecar with transitions and metadata for rows read from standard input.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Tick rate in Hz: 2, 10 or 100 [default: 10].
    #[arg(long, value_parser = config::parse_rate)]
    pub rate: Option<f64>,
    /// Confidence threshold in [0.5, 1) [default: 0.7].
    #[arg(long, value_parser = config::parse_k)]
    pub k: Option<f64>,
    /// Report CSV [default: standard output].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Snapshot log, one JSON snapshot per line.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Label events, one JSON object per line, written as they are emitted.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapFormat {
    Text,
    Ppm,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Thresholds document; alternatively `--model` supplies the configuration.
    #[arg(long, required_unless_present = "model")]
    pub thresholds: Option<PathBuf>,
    #[arg(long, conflicts_with = "thresholds")]
    pub model: Option<PathBuf>,
    /// PRIM, MC or LLB.
    #[arg(long, default_value = "LLB")]
    pub layer: rcbht::symbols::Layer,
    #[arg(long, value_enum, default_value_t = MapFormat::Text)]
    pub format: MapFormat,
    /// Pixels per cell for PPM output.
    #[arg(long, default_value_t = 4)]
    pub scale: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub encoding: EncodingFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; created when missing.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub nominal: usize,
    #[arg(long, default_value_t = 0)]
    pub abnormal: usize,
    /// Sampling rate of the generated trials.
    #[arg(long, default_value_t = 200.0)]
    pub sample_rate: f64,
    /// Noise standard deviation on every axis.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Emit a left and a right arm per trial.
    #[arg(long)]
    pub two_arm: bool,
    /// Generator seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e) as u8)
        }
    }
}
