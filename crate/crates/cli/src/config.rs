//! Effective run configuration: defaults, then a TOML file (or a previous
//! run's manifest), then command-line flags.

use std::path::{Path, PathBuf};

use miemph::eval::{EvalConfig, EvalMode};
use miemph::net::TrainConfig;
use miemph::pipeline::PreprocessConfig;
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};

/// Which session's trials the intra-session folds are planned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CvSource {
    /// Folds over the validation (second) session.
    #[default]
    Validation,
    /// Folds over the training (first) session.
    Training,
    /// Folds over the validation session, with every training-session trial
    /// added to each fold's training side.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: EvalMode,
    pub cv_source: CvSource,
    /// First-session ("training set") files, one subject each.
    pub train: Vec<PathBuf>,
    /// Second-session ("validation set") files, one subject each.
    pub valid: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Randomly permute labels within each file before anything else; a
    /// chance-level control.
    pub shuffle_labels: bool,
    /// Fraction of each training split held out for epoch selection.
    pub val_fraction: f64,
    pub preprocess: PreprocessConfig,
    pub training: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: EvalMode::Intra,
            cv_source: CvSource::default(),
            train: Vec::new(),
            valid: Vec::new(),
            out: None,
            seed: 0,
            shuffle_labels: false,
            val_fraction: 0.2,
            preprocess: PreprocessConfig::default(),
            training: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::config(format!("config {}: {e}", path.display())))
    }

    /// Copies the root seed into the nested configs that carry one, so the
    /// echoed config shows the values actually used.
    pub fn propagate_seed(&mut self) {
        self.training.seed = self.seed;
        self.eval.seed = self.seed;
    }

    pub fn validate(&self) -> CliResult {
        if self.out.is_none() {
            return Err(Failure::config("no output directory; pass --out or set `out` in the config"));
        }
        let need = |files: &[PathBuf], what: &str| {
            if files.is_empty() {
                Err(Failure::config(format!("{} mode needs at least one {what} file", self.mode.as_str())))
            } else {
                Ok(())
            }
        };
        match (self.mode, self.cv_source) {
            (EvalMode::Inter, _) | (EvalMode::Intra, CvSource::Both) => {
                need(&self.train, "--train")?;
                need(&self.valid, "--valid")?;
            }
            (EvalMode::Intra, CvSource::Validation) => need(&self.valid, "--valid")?,
            (EvalMode::Intra, CvSource::Training) => need(&self.train, "--train")?,
        }
        for path in self.train.iter().chain(&self.valid) {
            if !path.is_file() {
                return Err(Failure::config(format!("input file {} does not exist", path.display())));
            }
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Failure::config(format!("val_fraction {} not in [0, 1)", self.val_fraction)));
        }
        if self.eval.n_folds < 2 {
            return Err(Failure::config("need at least 2 folds"));
        }
        self.training.validate().map_err(Failure::from)?;
        let p = &self.preprocess;
        if p.filter_order == 0 || !p.filter_order.is_multiple_of(2) {
            return Err(Failure::config("filter_order must be even and positive"));
        }
        if !(p.f_low > 0.0 && p.f_low < p.f_high) {
            return Err(Failure::config("need 0 < f_low < f_high"));
        }
        if !(p.epoch_start_s >= 0.0 && p.epoch_start_s < p.epoch_end_s) {
            return Err(Failure::config("need 0 <= epoch_start_s < epoch_end_s"));
        }
        if !(p.window.length_s > 0.0 && (0.0..1.0).contains(&p.window.overlap_frac)) {
            return Err(Failure::config("window length must be positive and overlap in [0, 1)"));
        }
        Ok(())
    }
}
