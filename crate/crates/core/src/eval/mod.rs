//! Intra-session cross-validation, inter-session transfer and reporting.
//!
//! Splits are made at the trial level, so every window of a trial lands on
//! the same side. Emphasis weights are computed per trial during
//! preprocessing and never depend on other trials.

mod cnn;
mod folds;
mod report;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cnn::CnnDecoder;
pub use folds::{make_folds, FoldPlan};
pub use report::{
    mean_std, parse_report_csv, render_report, EvalMode, FoldSummary, Report, ReportFormat, ReportRow,
    REPORT_CSV_HEADER,
};

use crate::eeg::{ClassLabel, N_CLASSES};
use crate::net::{History, NetError};
use crate::par;
use crate::pipeline::{PreparedTrial, TrialId};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {needed} trials{} but found {found}", class.map(|c| format!(" of class {c}")).unwrap_or_default())]
    TooFewTrials { needed: usize, found: usize, class: Option<usize> },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("train/test leakage: {0}")]
    Leakage(String),
    #[error("trial {0:?} has no windows")]
    NoWindows(TrialId),
    #[error("empty window probability list")]
    EmptyPrediction,
    #[error("report has no rows")]
    EmptyReport,
    #[error("report row for {0} has no folds")]
    EmptyFolds(String),
    #[error("report CSV: {0}")]
    ReportFormat(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Mean of the window probability vectors, then argmax; ties go to the
/// lowest class id.
pub fn aggregate_trial_prediction(window_probs: &[[f64; N_CLASSES]]) -> Result<usize, EvalError> {
    if window_probs.is_empty() {
        return Err(EvalError::EmptyPrediction);
    }
    let mut mean = [0.0; N_CLASSES];
    for p in window_probs {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    let mut best = 0;
    for j in 1..N_CLASSES {
        if mean[j] > mean[best] {
            best = j;
        }
    }
    Ok(best)
}

/// Result of fitting on training trials and scoring the test trials.
#[derive(Debug, Clone, Default)]
pub struct FitOutcome {
    /// Per test trial, one probability vector per window.
    pub window_probs: Vec<Vec<[f64; N_CLASSES]>>,
    pub history: Option<History>,
    pub checkpoint: Option<Vec<u8>>,
}

/// A trainable trial classifier.
pub trait Decoder: Sync {
    fn fit_predict(
        &self,
        train: &[&PreparedTrial],
        test: &[&PreparedTrial],
        seed: u64,
    ) -> Result<FitOutcome, EvalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub trial_accuracy: f64,
    pub window_accuracy: f64,
    /// Trial-level recall per class; `None` when the class is absent.
    pub per_class_accuracy: [Option<f64>; N_CLASSES],
    pub n_trials: usize,
    pub n_windows: usize,
}

/// Scores per-window probabilities against the trials' labels.
pub fn score(trials: &[&PreparedTrial], window_probs: &[Vec<[f64; N_CLASSES]>]) -> Result<Metrics, EvalError> {
    let mut correct = 0;
    let mut windows = 0;
    let mut windows_correct = 0;
    let mut class_total = [0usize; N_CLASSES];
    let mut class_correct = [0usize; N_CLASSES];
    for (t, probs) in trials.iter().zip(window_probs) {
        let y = t.label.index();
        let pred = aggregate_trial_prediction(probs)?;
        class_total[y] += 1;
        if pred == y {
            correct += 1;
            class_correct[y] += 1;
        }
        for p in probs {
            windows += 1;
            if aggregate_trial_prediction(std::slice::from_ref(p))? == y {
                windows_correct += 1;
            }
        }
    }
    let n = trials.len();
    let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(Metrics {
        trial_accuracy: frac(correct, n),
        window_accuracy: frac(windows_correct, windows),
        per_class_accuracy: std::array::from_fn(|c| {
            (class_total[c] > 0).then(|| frac(class_correct[c], class_total[c]))
        }),
        n_trials: n,
        n_windows: windows,
    })
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub metrics: Metrics,
    pub train_ids: Vec<TrialId>,
    pub test_ids: Vec<TrialId>,
    pub outcome: FitOutcome,
}

impl FoldResult {
    pub fn summary(&self) -> FoldSummary {
        FoldSummary {
            fold: self.fold,
            trial_acc: self.metrics.trial_accuracy,
            window_acc: self.metrics.window_accuracy,
            n_trials: self.metrics.n_trials,
        }
    }
}

/// All folds of one protocol run for one subject.
#[derive(Debug, Clone)]
pub struct SessionResult {
    pub subject: String,
    pub mode: EvalMode,
    pub plan: Option<FoldPlan>,
    pub folds: Vec<FoldResult>,
}

impl SessionResult {
    pub fn row(&self) -> ReportRow {
        ReportRow {
            subject: self.subject.clone(),
            mode: self.mode,
            folds: self.folds.iter().map(FoldResult::summary).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_folds: usize,
    pub stratified: bool,
    pub seed: u64,
    /// Independent repetitions of the inter-session run.
    pub inter_repeats: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { n_folds: 5, stratified: true, seed: 0, inter_repeats: 1 }
    }
}

/// Sub-seed purposes specific to evaluation.
pub mod purpose {
    pub const FOLD_TRAIN: &str = "fold-train";
    pub const INTER_TRAIN: &str = "inter-train";
}

fn check_disjoint(train: &[&PreparedTrial], test: &[&PreparedTrial]) -> Result<(), EvalError> {
    let train_ids: HashSet<&TrialId> = train.iter().map(|t| &t.id).collect();
    if let Some(t) = test.iter().find(|t| train_ids.contains(&t.id)) {
        return Err(EvalError::Leakage(format!("trial {:?} is in both train and test sets", t.id)));
    }
    Ok(())
}

fn run_split<D: Decoder>(
    decoder: &D,
    fold: usize,
    train: Vec<&PreparedTrial>,
    test: Vec<&PreparedTrial>,
    seed: u64,
) -> Result<FoldResult, EvalError> {
    check_disjoint(&train, &test)?;
    if let Some(t) = train.iter().chain(&test).find(|t| t.windows.is_empty()) {
        return Err(EvalError::NoWindows(t.id.clone()));
    }
    let outcome = decoder.fit_predict(&train, &test, seed)?;
    if outcome.window_probs.len() != test.len() {
        return Err(EvalError::InvalidConfig(format!(
            "decoder returned {} predictions for {} trials",
            outcome.window_probs.len(),
            test.len()
        )));
    }
    let metrics = score(&test, &outcome.window_probs)?;
    Ok(FoldResult {
        fold,
        metrics,
        train_ids: train.iter().map(|t| t.id.clone()).collect(),
        test_ids: test.iter().map(|t| t.id.clone()).collect(),
        outcome,
    })
}

/// Randomly permutes the labels of `trials` (class counts are preserved).
/// Used as a chance-level control: nothing a decoder learns can carry over
/// to held-out trials.
pub fn permute_labels(trials: &mut [PreparedTrial], seed: u64) {
    let mut labels: Vec<ClassLabel> = trials.iter().map(|t| t.label).collect();
    labels.shuffle(&mut rng_from_seed(seed));
    for (t, l) in trials.iter_mut().zip(labels) {
        t.label = l;
    }
}

/// k-fold cross-validation within one session's trials.
pub fn intra_session_eval<D: Decoder>(
    trials: &[PreparedTrial],
    decoder: &D,
    cfg: &EvalConfig,
) -> Result<SessionResult, EvalError> {
    intra_session_eval_with(trials, &[], decoder, cfg)
}

/// Like [`intra_session_eval`], with `extra_train` trials added to the
/// training side of every fold. Folds are planned on `trials` alone, so the
/// test folds only ever contain `trials`.
pub fn intra_session_eval_with<D: Decoder>(
    trials: &[PreparedTrial],
    extra_train: &[PreparedTrial],
    decoder: &D,
    cfg: &EvalConfig,
) -> Result<SessionResult, EvalError> {
    let first = trials.first().ok_or(EvalError::TooFewTrials { needed: cfg.n_folds, found: 0, class: None })?;
    if let Some(t) = extra_train.iter().find(|t| t.id.subject != first.id.subject) {
        return Err(EvalError::InvalidConfig(format!(
            "extra training trials belong to subject {}, not {}",
            t.id.subject, first.id.subject
        )));
    }
    let labels: Vec<ClassLabel> = trials.iter().map(|t| t.label).collect();
    let plan = make_folds(&labels, cfg.n_folds, derive_seed(cfg.seed, crate::rng::purpose::FOLDS, 0), cfg.stratified)?;
    let folds = par::map_range(cfg.n_folds, |fold| {
        let train = plan
            .train_indices(fold)
            .into_iter()
            .map(|i| &trials[i])
            .chain(extra_train)
            .collect();
        let test = plan.test_indices(fold).into_iter().map(|i| &trials[i]).collect();
        run_split(decoder, fold, train, test, derive_seed(cfg.seed, purpose::FOLD_TRAIN, fold as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(SessionResult { subject: first.id.subject.clone(), mode: EvalMode::Intra, plan: Some(plan), folds })
}

/// Trains on all of `session1` and tests on all of `session2`.
pub fn inter_session_eval<D: Decoder>(
    session1: &[PreparedTrial],
    session2: &[PreparedTrial],
    decoder: &D,
    cfg: &EvalConfig,
) -> Result<SessionResult, EvalError> {
    let (Some(a), Some(b)) = (session1.first(), session2.first()) else {
        return Err(EvalError::TooFewTrials { needed: 1, found: 0, class: None });
    };
    let sessions1: HashSet<u8> = session1.iter().map(|t| t.id.session).collect();
    if let Some(t) = session2.iter().find(|t| sessions1.contains(&t.id.session)) {
        return Err(EvalError::Leakage(format!(
            "session {} appears on both sides of the transfer",
            t.id.session
        )));
    }
    if a.id.subject != b.id.subject {
        return Err(EvalError::InvalidConfig(format!(
            "sessions belong to different subjects ({} vs {})",
            a.id.subject, b.id.subject
        )));
    }
    let repeats = cfg.inter_repeats.max(1);
    let folds = (0..repeats)
        .map(|r| {
            run_split(
                decoder,
                r,
                session1.iter().collect(),
                session2.iter().collect(),
                derive_seed(cfg.seed, purpose::INTER_TRAIN, r as u64),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SessionResult { subject: a.id.subject.clone(), mode: EvalMode::Inter, plan: None, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emphasis::{EmphasisMode, EmphasisWeights};
    use ndarray::Array2;

    fn prepared(n_per_class: usize, session: u8) -> Vec<PreparedTrial> {
        (0..3 * n_per_class)
            .map(|i| PreparedTrial {
                id: TrialId { subject: "s1".into(), session, index: i },
                label: ClassLabel::ALL[i % 3],
                weights: EmphasisWeights { weights: vec![1.0], mode: EmphasisMode::LinearMeanNorm },
                windows: vec![Array2::zeros((1, 4)); 3],
            })
            .collect()
    }

    struct Constant(usize);
    impl Decoder for Constant {
        fn fit_predict(&self, _: &[&PreparedTrial], test: &[&PreparedTrial], _: u64) -> Result<FitOutcome, EvalError> {
            let mut p = [0.1; 3];
            p[self.0] = 0.8;
            Ok(FitOutcome { window_probs: test.iter().map(|t| vec![p; t.windows.len()]).collect(), ..Default::default() })
        }
    }

    struct Oracle;
    impl Decoder for Oracle {
        fn fit_predict(&self, _: &[&PreparedTrial], test: &[&PreparedTrial], _: u64) -> Result<FitOutcome, EvalError> {
            let probs = test
                .iter()
                .map(|t| {
                    let mut p = [0.0; 3];
                    p[t.label.index()] = 1.0;
                    vec![p; t.windows.len()]
                })
                .collect();
            Ok(FitOutcome { window_probs: probs, ..Default::default() })
        }
    }

    #[test]
    fn permuted_labels_keep_class_counts() {
        let mut trials = prepared(10, 1);
        permute_labels(&mut trials, 4);
        let mut counts = [0; 3];
        trials.iter().for_each(|t| counts[t.label.index()] += 1);
        assert_eq!(counts, [10, 10, 10]);
        let moved = trials.iter().enumerate().filter(|(i, t)| t.label != ClassLabel::ALL[i % 3]).count();
        assert!(moved > 10);
    }

    #[test]
    fn tie_break_and_majority() {
        let tie = [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]];
        assert_eq!(aggregate_trial_prediction(&tie).unwrap(), 0);
        assert_eq!(aggregate_trial_prediction(&[[0.1, 0.7, 0.2]]).unwrap(), 1);
        assert_eq!(aggregate_trial_prediction(&[[0.1, 0.2, 0.7]; 3]).unwrap(), 2);
        assert!(matches!(aggregate_trial_prediction(&[]), Err(EvalError::EmptyPrediction)));
    }

    #[test]
    fn constant_decoder_scores_one_third() {
        let trials = prepared(10, 1);
        let res = intra_session_eval(&trials, &Constant(0), &EvalConfig::default()).unwrap();
        let (mean, _) = res.row().mean_std();
        assert_eq!(mean, 1.0 / 3.0);
        for f in &res.folds {
            assert_eq!(f.metrics.trial_accuracy, 1.0 / 3.0);
            assert_eq!(f.metrics.per_class_accuracy, [Some(1.0), Some(0.0), Some(0.0)]);
        }
    }

    #[test]
    fn oracle_decoder_is_perfect_and_folds_disjoint() {
        let trials = prepared(10, 1);
        let res = intra_session_eval(&trials, &Oracle, &EvalConfig::default()).unwrap();
        assert_eq!(res.row().mean_std(), (1.0, 0.0));
        let mut seen = HashSet::new();
        for f in &res.folds {
            let train: HashSet<_> = f.train_ids.iter().collect();
            assert!(f.test_ids.iter().all(|id| !train.contains(id)));
            assert_eq!(f.train_ids.len() + f.test_ids.len(), 30);
            seen.extend(f.test_ids.iter().cloned());
            assert_eq!(f.metrics.n_windows, 3 * f.metrics.n_trials);
        }
        assert_eq!(seen.len(), 30);
    }

    #[test]
    fn same_session_twice_is_leakage() {
        let s = prepared(5, 1);
        assert!(matches!(inter_session_eval(&s, &s, &Oracle, &EvalConfig::default()), Err(EvalError::Leakage(_))));
        let s2 = prepared(5, 2);
        let res = inter_session_eval(&s, &s2, &Oracle, &EvalConfig::default()).unwrap();
        assert_eq!(res.folds.len(), 1);
        assert_eq!(res.folds[0].metrics.n_trials, 15);
    }

    #[test]
    fn window_accuracy_counts_windows() {
        let trials = prepared(1, 1);
        let refs: Vec<&PreparedTrial> = trials.iter().collect();
        let probs = vec![
            vec![[0.9, 0.05, 0.05], [0.9, 0.05, 0.05], [0.1, 0.8, 0.1]],
            vec![[0.1, 0.8, 0.1]; 3],
            vec![[0.1, 0.8, 0.1]; 3],
        ];
        let m = score(&refs, &probs).unwrap();
        assert!((m.trial_accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.window_accuracy - 5.0 / 9.0).abs() < 1e-12);
    }
}
