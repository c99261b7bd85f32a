//! The `run` command: preprocess, train and evaluate, then write every
//! artifact in one go.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use miemph::eeg::{load_trialset, FileFormat, TrialSet};
use miemph::eval::{
    inter_session_eval, intra_session_eval_with, permute_labels, purpose as eval_purpose, render_report,
    CnnDecoder, EvalConfig, EvalMode, Report, ReportFormat, SessionResult,
};
use miemph::emphasis::EmphasisError;
use miemph::pipeline::{prepare_trials, PipelineError, PreparedTrial, TrialId};
use miemph::rng::{derive_seed, purpose};
use miemph::ClassLabel;

use crate::config::{CvSource, RunConfig};
use crate::failure::{CliResult, Failure};
use crate::manifest::{hash_file, sha256_hex, FileHash, Manifest, SeedRecord, MANIFEST_FILE};

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const PREDICTIONS_CSV: &str = "predictions.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Train,
    Valid,
}

impl Role {
    fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Valid => "valid",
        }
    }
}

/// One input file after preprocessing.
struct Loaded {
    role: Role,
    subject: String,
    channels: Vec<String>,
    trials: Vec<PreparedTrial>,
}

/// Everything a run produces, keyed by path relative to the output
/// directory.
pub struct RunOutput {
    pub files: BTreeMap<PathBuf, Vec<u8>>,
}

fn load(path: &Path, role: Role, index: usize, cfg: &RunConfig) -> CliResult<Loaded> {
    let ctx = || format!("input {}", path.display());
    let set: TrialSet = load_trialset(path, FileFormat::Binary).map_err(|e| Failure::from(e).context(ctx()))?;
    let subject = set.trials()[0].subject_id.clone();
    if let Some(t) = set.trials().iter().find(|t| t.subject_id != subject) {
        return Err(Failure::data(format!(
            "{}: holds trials of subjects {subject:?} and {:?}; use one file per subject",
            path.display(),
            t.subject_id
        )));
    }
    let mut trials = prepare_trials(&set, &cfg.preprocess).map_err(|e| {
        // name the channel by its montage label rather than its index
        if let PipelineError::Emphasis { source: EmphasisError::SilentChannel { channel }, .. } = &e {
            let label = set.channels().label(*channel).unwrap_or("?").to_string();
            return Failure::from(e).context(format!("{}: channel {label} is silent", ctx()));
        }
        Failure::from(e).context(ctx())
    })?;
    if cfg.shuffle_labels {
        permute_labels(&mut trials, derive_seed(cfg.seed, purpose::LABEL_PERMUTATION, index as u64));
    }
    Ok(Loaded { role, subject, channels: set.channels().labels().to_vec(), trials })
}

fn by_subject(files: Vec<Loaded>) -> CliResult<BTreeMap<String, Loaded>> {
    let mut map = BTreeMap::new();
    for f in files {
        let subject = f.subject.clone();
        if map.insert(subject.clone(), f).is_some() {
            return Err(Failure::config(format!("subject {subject:?} appears in more than one file of the same role")));
        }
    }
    Ok(map)
}

/// Subject-specific evaluation seed, independent of subject order.
fn eval_seed(root: u64, subject: &str, mode: EvalMode) -> u64 {
    derive_seed(root, subject, mode as u64)
}

fn file_stem(subject: &str) -> String {
    subject.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn evaluate(cfg: &RunConfig) -> CliResult<(Vec<Loaded>, Vec<SessionResult>)> {
    let train_files =
        cfg.train.iter().enumerate().map(|(i, p)| load(p, Role::Train, i, cfg)).collect::<CliResult<Vec<_>>>()?;
    let valid_files = cfg
        .valid
        .iter()
        .enumerate()
        .map(|(i, p)| load(p, Role::Valid, cfg.train.len() + i, cfg))
        .collect::<CliResult<Vec<_>>>()?;
    let train = by_subject(train_files)?;
    let valid = by_subject(valid_files)?;

    let decoder = CnnDecoder { train: cfg.training, val_fraction: cfg.val_fraction };
    let eval_cfg = |subject: &str| EvalConfig { seed: eval_seed(cfg.seed, subject, cfg.mode), ..cfg.eval };
    let missing = |subject: &str, flag: &str| {
        Failure::config(format!("subject {subject:?} has no {flag} file"))
    };

    let subjects: Vec<&String> = match (cfg.mode, cfg.cv_source) {
        (EvalMode::Intra, CvSource::Training) => train.keys().collect(),
        _ => valid.keys().collect(),
    };
    let mut results = Vec::new();
    for subject in subjects {
        let started = Instant::now();
        let ec = eval_cfg(subject);
        let result = match (cfg.mode, cfg.cv_source) {
            (EvalMode::Intra, CvSource::Training) => {
                intra_session_eval_with(&train[subject].trials, &[], &decoder, &ec)?
            }
            (EvalMode::Intra, CvSource::Validation) => {
                intra_session_eval_with(&valid[subject].trials, &[], &decoder, &ec)?
            }
            (EvalMode::Intra, CvSource::Both) => {
                let extra = train.get(subject).ok_or_else(|| missing(subject, "--train"))?;
                intra_session_eval_with(&valid[subject].trials, &extra.trials, &decoder, &ec)?
            }
            (EvalMode::Inter, _) => {
                let s1 = train.get(subject).ok_or_else(|| missing(subject, "--train"))?;
                inter_session_eval(&s1.trials, &valid[subject].trials, &decoder, &ec)?
            }
        };
        let (mean, _) = result.row().mean_std();
        eprintln!(
            "{subject}: {} {:.2}% over {} split(s) in {:.1}s",
            cfg.mode.as_str(),
            100.0 * mean,
            result.folds.len(),
            started.elapsed().as_secs_f64()
        );
        results.push(result);
    }
    if cfg.mode == EvalMode::Inter {
        if let Some(s) = train.keys().find(|s| !valid.contains_key(*s)) {
            return Err(missing(s, "--valid"));
        }
    }
    let files = train.into_values().chain(valid.into_values()).collect();
    Ok((files, results))
}

fn predictions_csv(results: &[SessionResult], labels: &HashMap<&TrialId, ClassLabel>) -> String {
    let mut out = String::from("subject,mode,fold,session,trial,window,label,p0,p1,p2\n");
    for r in results {
        for f in &r.folds {
            for (id, windows) in f.test_ids.iter().zip(&f.outcome.window_probs) {
                for (w, p) in windows.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{}",
                        r.subject,
                        r.mode.as_str(),
                        f.fold,
                        id.session,
                        id.index,
                        w,
                        labels[id].id(),
                        p[0],
                        p[1],
                        p[2]
                    )
                    .expect("write to String");
                }
            }
        }
    }
    out
}

fn weights_csv(file: &Loaded) -> String {
    let mut out = String::from("subject,trial,channel,weight\n");
    for t in &file.trials {
        for (c, w) in t.weights.weights.iter().enumerate() {
            writeln!(out, "{},{},{},{}", file.subject, t.id.index, file.channels[c], w).expect("write to String");
        }
    }
    out
}

/// Runs the pipeline and renders every output in memory; nothing touches
/// the output directory until all of it succeeded.
pub fn execute(cfg: &RunConfig) -> CliResult<RunOutput> {
    let (loaded, results) = evaluate(cfg)?;
    let report = Report { rows: results.iter().map(SessionResult::row).collect() };

    let mut files = BTreeMap::new();
    files.insert(PathBuf::from(REPORT_CSV), render_report(&report, ReportFormat::Csv)?.into_bytes());
    files.insert(PathBuf::from(REPORT_TXT), render_report(&report, ReportFormat::Text)?.into_bytes());

    let labels: HashMap<&TrialId, ClassLabel> =
        loaded.iter().flat_map(|f| &f.trials).map(|t| (&t.id, t.label)).collect();
    files.insert(PathBuf::from(PREDICTIONS_CSV), predictions_csv(&results, &labels).into_bytes());
    for f in &loaded {
        let name = format!("weights/{}_{}.csv", file_stem(&f.subject), f.role.as_str());
        files.insert(PathBuf::from(name), weights_csv(f).into_bytes());
    }
    for r in &results {
        for f in &r.folds {
            let stem = format!("folds/{}-{}-fold{}", file_stem(&r.subject), r.mode.as_str(), f.fold);
            if let Some(ckpt) = &f.outcome.checkpoint {
                files.insert(PathBuf::from(format!("{stem}.minet")), ckpt.clone());
            }
            if let Some(history) = &f.outcome.history {
                let mut buf = Vec::new();
                history.write_csv(&mut buf)?;
                files.insert(PathBuf::from(format!("{stem}-history.csv")), buf);
            }
        }
    }

    let inputs = cfg.train.iter().chain(&cfg.valid).map(|p| hash_file(p)).collect::<CliResult<Vec<_>>>()?;
    let seeds = results
        .iter()
        .map(|r| {
            let seed = eval_seed(cfg.seed, &r.subject, r.mode);
            let purpose = if r.mode == EvalMode::Intra { eval_purpose::FOLD_TRAIN } else { eval_purpose::INTER_TRAIN };
            SeedRecord {
                subject: r.subject.clone(),
                mode: r.mode.as_str().into(),
                eval_seed: seed,
                fold_seeds: r.folds.iter().map(|f| derive_seed(seed, purpose, f.fold as u64)).collect(),
            }
        })
        .collect();
    let outputs = files.iter().map(|(p, b)| FileHash { path: p.clone(), sha256: sha256_hex(b) }).collect();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        seeds,
        inputs,
        outputs,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    files.insert(PathBuf::from(MANIFEST_FILE), json.into_bytes());
    Ok(RunOutput { files })
}

pub fn write_outputs(dir: &Path, output: &RunOutput) -> CliResult {
    for (rel, bytes) in &output.files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Failure::from(e).context(format!("creating {}", parent.display())))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Failure::from(e).context(format!("writing {}", path.display())))?;
    }
    Ok(())
}
