//! Command-line front end: parses arguments, merges them with the config
//! file, runs one subcommand on a local worker pool and maps errors to the
//! exit-code contract (0 ok, 2 config, 3 io, 4 validation).

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use segsynth_core::labels_io::FORMAT_VERSION;
use segsynth_core::{Error, ErrorKind, Result};
use serde_json::Value;

use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "segsynth", about = "Instance-segmentation dataset synthesis, augmentation and evaluation")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, env = "SEGSYNTH_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, short = 'j', global = true)]
    pub jobs: Option<usize>,
    /// Print a JSON summary on standard output instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// More log output on standard error (repeatable).
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Composite cutouts onto backgrounds into a labelled dataset.
    Synth(SynthArgs),
    /// Rotate annotated pairs through every integer degree.
    Rotaug(RotaugArgs),
    /// Stack grayscale, lightness and mask into three-channel images.
    Glmask(GlmaskArgs),
    /// Score predictions against ground truth with mask IoU.
    Eval(EvalArgs),
    /// Turn predictions on unlabelled images into a training dataset.
    Pseudo(PseudoArgs),
    /// Convert annotations between YOLO-seg, COCO JSON and instance maps.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Background images (directory, or dataset with images/).
    #[arg(long)]
    pub backgrounds: Option<PathBuf>,
    /// Labelled images whose instances become fake cutouts.
    #[arg(long)]
    pub fakes: Option<PathBuf>,
    /// Labelled images whose instances become real (annotated) cutouts.
    #[arg(long)]
    pub reals: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of samples.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub overlay_min: Option<u32>,
    #[arg(long)]
    pub overlay_max: Option<u32>,
    #[arg(long)]
    pub pool_switch: Option<u32>,
    /// Least visible share for an instance to stay annotated.
    #[arg(long)]
    pub visibility: Option<f64>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub role: Option<String>,
    #[arg(long)]
    pub annotate_fakes: bool,
    #[arg(long)]
    pub no_masks: bool,
    #[arg(long)]
    pub no_instance_maps: bool,
}

#[derive(Debug, Args)]
pub struct RotaugArgs {
    /// Labelled images to rotate (images/ and labels/, or flat).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub role: Option<String>,
    /// First degree (inclusive).
    #[arg(long)]
    pub start: Option<u32>,
    /// Last degree (exclusive).
    #[arg(long)]
    pub end: Option<u32>,
    #[arg(long)]
    pub no_masks: bool,
    #[arg(long)]
    pub no_instance_maps: bool,
}

#[derive(Debug, Args)]
pub struct GlmaskArgs {
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Binary masks named like the images.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub role: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction labels (directory of YOLO-seg files, or COCO JSON with scores).
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Ground-truth dataset directory.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// wheat (conf 0.25, IoU 0.7) or coco (conf 0.25, IoU 0.6).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub conf: Option<f64>,
    /// IoU threshold for the reported precision and recall.
    #[arg(long)]
    pub iou: Option<f64>,
    /// JSON object mapping image id to domain.
    #[arg(long)]
    pub domains: Option<PathBuf>,
    /// Score images without a prediction file as having no predictions.
    #[arg(long)]
    pub missing_as_empty: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PseudoArgs {
    /// Prediction labels with confidences.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub conf: Option<f64>,
    #[arg(long)]
    pub min_area: Option<u64>,
    #[arg(long)]
    pub role: Option<String>,
    #[arg(long)]
    pub name: Option<String>,
    /// Copy images into the output instead of referencing them.
    #[arg(long)]
    pub copy_images: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// yolo, coco or masks.
    #[arg(long)]
    pub from: Option<String>,
    /// yolo, coco or masks.
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Images giving the canvas size of YOLO-seg input.
    #[arg(long)]
    pub images: Option<PathBuf>,
}

/// What a command reports: JSON for `--json`, text otherwise.
#[derive(Debug)]
pub struct Summary {
    pub json: Value,
    pub text: String,
}

pub fn version_string() -> String {
    format!("{} (format_version {FORMAT_VERSION})", env!("CARGO_PKG_VERSION"))
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Validation => EXIT_VALIDATION,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().version(version_string()).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let verbose = cli.verbose.max(cfg.verbose.unwrap_or(0));
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let json = cli.json;
    let summary = pool.install(|| match cli.command {
        Command::Synth(a) => commands::synth(a, cfg.block("synth")),
        Command::Rotaug(a) => commands::rotaug(a, cfg.block("rotaug")),
        Command::Glmask(a) => commands::glmask(a, cfg.block("glmask")),
        Command::Eval(a) => commands::eval(a, cfg.block("eval")),
        Command::Pseudo(a) => commands::pseudo(a, cfg.block("pseudo")),
        Command::Convert(a) => commands::convert(a, cfg.block("convert")),
    })?;
    if json {
        let s = serde_json::to_string_pretty(&summary.json).map_err(|e| Error::parse(e.to_string()))?;
        println!("{s}");
    } else {
        print!("{}", summary.text);
    }
    Ok(())
}
