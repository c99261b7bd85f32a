//! `miemph`: synthetic data, import, training/evaluation runs and spectral
//! dumps for the frequency-emphasis motor-imagery pipeline.
//!
//! Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 data error
//! (including train/test leakage), 4 training divergence.

mod commands;
mod config;
mod failure;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use miemph::emphasis::EmphasisMode;
use miemph::eval::{EvalMode, ReportFormat};
use miemph::net::Precision;
use miemph::ClassLabel;

use crate::commands::{PsdDumpArgs, SynthArgs};
use crate::config::{CvSource, RunConfig};
use crate::failure::{CliResult, Failure};
use crate::manifest::Manifest;

#[derive(Parser)]
#[command(name = "miemph", version, about = "Frequency-emphasis motor-imagery EEG decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trial file.
    Synth {
        /// `separable` or the path of a JSON profile.
        #[arg(long, default_value = "separable")]
        profile: String,
        #[arg(long, env = "MIEMPH_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Session id; sessions other than the profile's get fresh noise.
        #[arg(long, default_value_t = 1)]
        session: u8,
        #[arg(long)]
        subject: Option<String>,
        /// Apply the standard session drift to the motifs.
        #[arg(long)]
        perturb: bool,
        #[arg(long)]
        trials_per_class: Option<usize>,
    },
    /// Convert a CSV trial file to the binary format.
    Import {
        #[arg(long)]
        input: PathBuf,
        /// Sampling rate of the CSV data, Hz.
        #[arg(long)]
        fs: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Preprocess, train and evaluate.
    Run(RunArgs),
    /// Write per-channel periodograms as CSV.
    PsdDump {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Lowest frequency bin to keep, Hz.
        #[arg(long)]
        f1: Option<f64>,
        /// Highest frequency bin to keep, Hz.
        #[arg(long)]
        f2: Option<f64>,
        /// Trial indices to include (default all).
        #[arg(long, value_delimiter = ',')]
        trials: Option<Vec<usize>>,
        /// Only trials of this class (id or name).
        #[arg(long)]
        label: Option<ClassLabel>,
        #[arg(long, default_value_t = 6.0)]
        epoch_start: f64,
        #[arg(long, default_value_t = 10.0)]
        epoch_end: f64,
        /// Band-pass 8-30 Hz before the periodogram.
        #[arg(long)]
        filtered: bool,
    },
    /// Print a report CSV written by `run`.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = OutFormat::Text)]
        format: OutFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Repeat the run recorded in a manifest; inputs must be unchanged.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    mode: Option<EvalMode>,
    /// First-session file (repeatable).
    #[arg(long)]
    train: Vec<PathBuf>,
    /// Second-session file (repeatable).
    #[arg(long)]
    valid: Vec<PathBuf>,
    #[arg(long, value_enum)]
    cv_source: Option<CvSource>,
    #[arg(long)]
    emphasis_mode: Option<EmphasisMode>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    precision: Option<Precision>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, env = "MIEMPH_SEED")]
    seed: Option<u64>,
    /// Permute labels within each file (chance-level control).
    #[arg(long)]
    shuffle_labels: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn effective_config(self) -> CliResult<RunConfig> {
        let mut cfg = match (&self.config, &self.manifest) {
            (Some(path), _) => RunConfig::from_toml_file(path)?,
            (None, Some(path)) => {
                let manifest = Manifest::load(path)?;
                manifest.verify_inputs()?;
                manifest.config
            }
            (None, None) => RunConfig::default(),
        };
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if !self.train.is_empty() {
            cfg.train = self.train;
        }
        if !self.valid.is_empty() {
            cfg.valid = self.valid;
        }
        if let Some(v) = self.cv_source {
            cfg.cv_source = v;
        }
        if let Some(v) = self.emphasis_mode {
            cfg.preprocess.emphasis.mode = v;
        }
        if let Some(v) = self.epochs {
            cfg.training.epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.training.batch_size = v;
        }
        if let Some(v) = self.lr {
            cfg.training.learning_rate = v;
        }
        if let Some(v) = self.precision {
            cfg.training.precision = v;
        }
        if let Some(v) = self.folds {
            cfg.eval.n_folds = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.shuffle_labels |= self.shuffle_labels;
        if self.out.is_some() {
            cfg.out = self.out;
        }
        cfg.validate()?;
        cfg.propagate_seed();
        Ok(cfg)
    }
}

fn cmd_run(args: RunArgs) -> CliResult {
    let cfg = args.effective_config()?;
    let out_dir = cfg.out.clone().ok_or_else(|| Failure::config("no output directory"))?;
    let output = run::execute(&cfg)?;
    run::write_outputs(&out_dir, &output)?;
    if let Some(text) = output.files.get(&PathBuf::from(run::REPORT_TXT)) {
        print!("{}", String::from_utf8_lossy(text));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth { profile, seed, out, session, subject, perturb, trials_per_class } => {
            commands::synth(&SynthArgs { profile, seed, out, session, subject, perturb, trials_per_class })
        }
        Command::Import { input, fs, out } => commands::import(&input, fs, &out),
        Command::Run(args) => cmd_run(args),
        Command::PsdDump { input, out, f1, f2, trials, label, epoch_start, epoch_end, filtered } => {
            commands::psd_dump(&PsdDumpArgs { input, out, f1, f2, trials, label, epoch_start, epoch_end, filtered })
        }
        Command::Report { input, format } => {
            let format = match format {
                OutFormat::Text => ReportFormat::Text,
                OutFormat::Csv => ReportFormat::Csv,
            };
            commands::report(&input, format)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.code()
        }
    }
}
