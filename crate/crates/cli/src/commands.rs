//! The data-handling commands: `synth`, `import`, `psd-dump` and `report`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use miemph::dsp::{design_bandpass_fir, filtfilt_rows, periodogram, FirSpec};
use miemph::eeg::{load_trialset, save_trialset, FileFormat, Trial};
use miemph::eval::{parse_report_csv, render_report, ReportFormat};
use miemph::synth::{default_separable_profile, generate_trialset, SynthConfig, SESSION_DRIFT};
use miemph::ClassLabel;

use crate::failure::{CliResult, Failure};

pub struct SynthArgs {
    pub profile: String,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub session: u8,
    pub subject: Option<String>,
    pub perturb: bool,
    pub trials_per_class: Option<usize>,
}

fn synth_profile(name: &str) -> CliResult<SynthConfig> {
    match name {
        "separable" => Ok(default_separable_profile()),
        path => Ok(SynthConfig::load(path)?),
    }
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let mut cfg = synth_profile(&args.profile)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(subject) = &args.subject {
        cfg.subject_id = subject.clone();
    }
    if let Some(n) = args.trials_per_class {
        cfg.trials_per_class = n;
    }
    if args.session == 0 {
        return Err(Failure::config("session ids start at 1"));
    }
    // later sessions share the motifs but draw independent noise
    if args.session != cfg.session_id {
        cfg = cfg.second_session(args.session, args.perturb.then_some(SESSION_DRIFT));
    } else if args.perturb {
        cfg.perturbation = SESSION_DRIFT;
    }
    let set = generate_trialset(&cfg)?;
    save_trialset(&set, &args.out, FileFormat::Binary)
        .map_err(|e| Failure::from(e).context(format!("writing {}", args.out.display())))?;
    eprintln!("wrote {} trials of subject {} to {}", set.len(), cfg.subject_id, args.out.display());
    Ok(())
}

pub fn import(input: &Path, fs: u32, out: &Path) -> CliResult {
    let set = load_trialset(input, FileFormat::Csv { fs })
        .map_err(|e| Failure::from(e).context(format!("reading {}", input.display())))?;
    save_trialset(&set, out, FileFormat::Binary)
        .map_err(|e| Failure::from(e).context(format!("writing {}", out.display())))?;
    eprintln!("imported {} trials into {}", set.len(), out.display());
    Ok(())
}

pub struct PsdDumpArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub trials: Option<Vec<usize>>,
    pub label: Option<ClassLabel>,
    pub epoch_start: f64,
    pub epoch_end: f64,
    /// Band-pass the trial (default mu/beta FIR) before cutting the epoch.
    pub filtered: bool,
}

fn selected(args: &PsdDumpArgs, index: usize, trial: &Trial) -> bool {
    args.trials.as_ref().is_none_or(|ts| ts.contains(&index)) && args.label.is_none_or(|l| l == trial.label)
}

pub fn psd_dump(args: &PsdDumpArgs) -> CliResult {
    let lo = args.f1.unwrap_or(f64::NEG_INFINITY);
    let hi = args.f2.unwrap_or(f64::INFINITY);
    if lo > hi {
        return Err(Failure::config(format!("--f1 {lo} is above --f2 {hi}")));
    }
    let set = load_trialset(&args.input, FileFormat::Binary)
        .map_err(|e| Failure::from(e).context(format!("reading {}", args.input.display())))?;
    let kernel = if args.filtered { Some(design_bandpass_fir(&FirSpec::mu_beta(f64::from(set.fs())))?) } else { None };

    let mut out = String::from("subject,trial,channel,freq_hz,power\n");
    for (i, trial) in set.trials().iter().enumerate().filter(|(i, t)| selected(args, *i, t)) {
        let trial = match &kernel {
            Some(k) => Trial { data: filtfilt_rows(k, trial.data.view())?, ..trial.clone() },
            None => trial.clone(),
        };
        let epoch = trial.extract_epoch(args.epoch_start, args.epoch_end).map_err(|e| Failure::from(e).context(format!("trial {i}")))?;
        for (c, row) in epoch.data.rows().into_iter().enumerate() {
            let psd = periodogram(&row.to_vec(), f64::from(epoch.fs))?;
            let channel = &set.channels().labels()[c];
            for (f, p) in psd.freqs.iter().zip(&psd.power).filter(|(f, _)| (lo..=hi).contains(*f)) {
                writeln!(out, "{},{i},{channel},{f},{p}", trial.subject_id).expect("write to String");
            }
        }
    }
    std::fs::write(&args.out, out).map_err(|e| Failure::from(e).context(format!("writing {}", args.out.display())))?;
    Ok(())
}

pub fn report(input: &Path, format: ReportFormat) -> CliResult {
    let text = std::fs::read_to_string(input)
        .map_err(|e| Failure::from(e).context(format!("reading {}", input.display())))?;
    let report = parse_report_csv(&text).map_err(|e| Failure::from(e).context(format!("{}", input.display())))?;
    print!("{}", render_report(&report, format)?);
    Ok(())
}
