//! Per-trial preprocessing: band-pass, motor-imagery epoch, emphasis
//! weights, sliding windows.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{design_bandpass_fir, filtfilt_rows, slide_windows, DspError, FirSpec, WindowKind, WindowSpec};
use crate::eeg::{ClassLabel, DataError, Trial, TrialSet};
use crate::emphasis::{apply_emphasis, compute_weights, EmphasisConfig, EmphasisError, EmphasisWeights};
use crate::par;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("trial {trial}: {source}")]
    Emphasis { trial: usize, source: EmphasisError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub filter_order: usize,
    pub f_low: f64,
    pub f_high: f64,
    /// See [`FirSpec::zero_dc`].
    pub zero_dc: bool,
    /// Filter the whole trial before cutting the epoch (otherwise the
    /// epoch alone is filtered).
    pub filter_before_epoch: bool,
    pub epoch_start_s: f64,
    pub epoch_end_s: f64,
    pub window: WindowSpec,
    pub emphasis: EmphasisConfig,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            filter_order: 30,
            f_low: 8.0,
            f_high: 30.0,
            zero_dc: true,
            filter_before_epoch: true,
            epoch_start_s: 6.0,
            epoch_end_s: 10.0,
            window: WindowSpec::default(),
            emphasis: EmphasisConfig::default(),
        }
    }
}

impl PreprocessConfig {
    pub fn fir_spec(&self, fs: u32) -> FirSpec {
        FirSpec {
            order: self.filter_order,
            f_low: self.f_low,
            f_high: self.f_high,
            fs: f64::from(fs),
            window: WindowKind::Hamming,
            zero_dc: self.zero_dc,
        }
    }

    /// Samples per network input window.
    pub fn window_samples(&self, fs: u32) -> Result<usize, DspError> {
        Ok(self.window.samples(fs)?.0)
    }
}

/// Identity of a trial across files: subject, session and position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrialId {
    pub subject: String,
    pub session: u8,
    pub index: usize,
}

/// A trial reduced to emphasized network inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTrial {
    pub id: TrialId,
    pub label: ClassLabel,
    pub weights: EmphasisWeights,
    /// `[channels × window_samples]` each.
    pub windows: Vec<Array2<f64>>,
}

pub fn prepare_trial(trial: &Trial, index: usize, cfg: &PreprocessConfig) -> Result<PreparedTrial, PipelineError> {
    let kernel = design_bandpass_fir(&cfg.fir_spec(trial.fs))?;
    let epoch = if cfg.filter_before_epoch {
        let filtered = Trial { data: filtfilt_rows(&kernel, trial.data.view())?, ..trial.clone() };
        filtered.extract_epoch(cfg.epoch_start_s, cfg.epoch_end_s)?
    } else {
        let mut epoch = trial.extract_epoch(cfg.epoch_start_s, cfg.epoch_end_s)?;
        epoch.data = filtfilt_rows(&kernel, epoch.data.view())?;
        epoch
    };
    let weights = compute_weights(&epoch, &cfg.emphasis)
        .map_err(|source| PipelineError::Emphasis { trial: index, source })?;
    let windows = slide_windows(&epoch, &cfg.window)?
        .into_iter()
        .map(|w| apply_emphasis(w.data.view(), &weights))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| PipelineError::Emphasis { trial: index, source })?;
    Ok(PreparedTrial {
        id: TrialId { subject: trial.subject_id.clone(), session: trial.session_id, index },
        label: trial.label,
        weights,
        windows,
    })
}

/// Prepares every trial of `set`; trials are processed independently.
pub fn prepare_trials(set: &TrialSet, cfg: &PreprocessConfig) -> Result<Vec<PreparedTrial>, PipelineError> {
    let indexed: Vec<(usize, &Trial)> = set.trials().iter().enumerate().collect();
    par::try_map_slice(&indexed, |&(i, t)| prepare_trial(t, i, cfg))
}
