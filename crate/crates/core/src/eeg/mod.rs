//! Trial-level EEG data model and file formats.

mod binary;
mod csv_format;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binary::{read_binary, write_binary, MAGIC, VERSION};
pub use csv_format::{read_csv, write_csv};

/// Number of motor-imagery classes.
pub const N_CLASSES: usize = 3;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("no trials")]
    NoTrials,
    #[error("trial {trial}: channel-count mismatch (expected {expected}, found {found})")]
    ChannelCountMismatch { trial: usize, expected: usize, found: usize },
    #[error("trial {trial}: unknown label {label:?}")]
    UnknownLabel { trial: usize, label: String },
    #[error("trial {trial}: non-finite value at channel {channel}, sample {sample}")]
    NonFinite { trial: usize, channel: usize, sample: usize },
    #[error("trial {trial}: sampling rate {found} Hz differs from {expected} Hz")]
    MixedSamplingRate { trial: usize, expected: u32, found: u32 },
    #[error("trial {trial}: malformed record: {reason}")]
    MalformedTrial { trial: usize, reason: String },
    #[error("invalid channel set: {0}")]
    InvalidChannels(String),
    #[error("epoch window [{t0}, {t1}) s outside trial of {duration} s")]
    EpochOutOfRange { t0: f64, t1: f64, duration: f64 },
}

/// Grasp class of a motor-imagery trial, stored on disk as its id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Cylindrical = 0,
    Spherical = 1,
    Lumbrical = 2,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; N_CLASSES] =
        [ClassLabel::Cylindrical, ClassLabel::Spherical, ClassLabel::Lumbrical];

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id)).copied()
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Cylindrical => "Cylindrical",
            ClassLabel::Spherical => "Spherical",
            ClassLabel::Lumbrical => "Lumbrical",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepts either the numeric id or the class name (case-insensitive).
impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(id) = s.parse::<u8>() {
            return Self::from_id(id).ok_or_else(|| s.to_string());
        }
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| s.to_string())
    }
}

/// Ordered, uniquely named recording channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSet {
    labels: Vec<String>,
}

impl ChannelSet {
    pub fn new(labels: Vec<String>) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::InvalidChannels("at least one channel required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(DataError::InvalidChannels(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// Channels named `Ch1`..`ChN`, used when a format stores no names.
    pub fn numbered(count: usize) -> Result<Self, DataError> {
        Self::new((1..=count).map(|i| format!("Ch{i}")).collect())
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }
}

/// One recorded task instance: `data` is `[channels × samples]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub data: Array2<f64>,
    pub fs: u32,
    pub label: ClassLabel,
    pub subject_id: String,
    pub session_id: u8,
}

impl Trial {
    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / f64::from(self.fs)
    }

    /// Slices `[round(t0·fs), round(t1·fs))` out of the trial.
    pub fn extract_epoch(&self, t0: f64, t1: f64) -> Result<Epoch, DataError> {
        let duration = self.duration_s();
        let out_of_range = DataError::EpochOutOfRange { t0, t1, duration };
        if !(t0 >= 0.0 && t0 < t1 && t1 <= duration + 1e-9) {
            return Err(out_of_range);
        }
        let fs = f64::from(self.fs);
        let start = (t0 * fs).round() as usize;
        let end = (t1 * fs).round() as usize;
        if end > self.n_samples() || start >= end {
            return Err(out_of_range);
        }
        Ok(Epoch {
            data: self.data.slice(s![.., start..end]).to_owned(),
            fs: self.fs,
            t0,
            t1,
            label: self.label,
            subject_id: self.subject_id.clone(),
            session_id: self.session_id,
        })
    }

    fn validate(&self, index: usize, n_channels: usize, fs: u32) -> Result<(), DataError> {
        if self.fs != fs {
            return Err(DataError::MixedSamplingRate { trial: index, expected: fs, found: self.fs });
        }
        if self.n_channels() != n_channels {
            return Err(DataError::ChannelCountMismatch {
                trial: index,
                expected: n_channels,
                found: self.n_channels(),
            });
        }
        if self.n_samples() == 0 {
            return Err(DataError::MalformedTrial { trial: index, reason: "zero samples".into() });
        }
        for ((channel, sample), v) in self.data.indexed_iter() {
            if !v.is_finite() {
                return Err(DataError::NonFinite { trial: index, channel, sample });
            }
        }
        Ok(())
    }
}

/// A time segment of a trial, e.g. the motor-imagery interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub data: Array2<f64>,
    pub fs: u32,
    pub t0: f64,
    pub t1: f64,
    pub label: ClassLabel,
    pub subject_id: String,
    pub session_id: u8,
}

impl Epoch {
    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }
}

/// On-disk representation selector for [`load_trialset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Binary,
    /// CSV carries no sampling rate, so the caller supplies it.
    Csv { fs: u32 },
}

/// A validated collection of trials sharing channels and sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    channels: ChannelSet,
    fs: u32,
    trials: Vec<Trial>,
}

impl TrialSet {
    pub fn new(channels: ChannelSet, fs: u32, trials: Vec<Trial>) -> Result<Self, DataError> {
        if trials.is_empty() {
            return Err(DataError::NoTrials);
        }
        if fs == 0 {
            return Err(DataError::MalformedHeader("sampling rate must be positive".into()));
        }
        for (i, t) in trials.iter().enumerate() {
            t.validate(i, channels.count(), fs)?;
        }
        Ok(Self { channels, fs, trials })
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn into_trials(self) -> Vec<Trial> {
        self.trials
    }

    /// Subject of the first trial; files hold one subject by convention.
    pub fn subject_id(&self) -> &str {
        &self.trials[0].subject_id
    }

    /// Distinct session ids in order of first appearance.
    pub fn session_ids(&self) -> Vec<u8> {
        let mut ids = Vec::new();
        for t in &self.trials {
            if !ids.contains(&t.session_id) {
                ids.push(t.session_id);
            }
        }
        ids
    }

    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut counts = [0; N_CLASSES];
        for t in &self.trials {
            counts[t.label.index()] += 1;
        }
        counts
    }

    /// Concatenates two sets recorded with the same montage and rate.
    pub fn concat(mut self, other: TrialSet) -> Result<Self, DataError> {
        if other.fs != self.fs {
            return Err(DataError::MixedSamplingRate {
                trial: self.trials.len(),
                expected: self.fs,
                found: other.fs,
            });
        }
        if other.channels.count() != self.channels.count() {
            return Err(DataError::ChannelCountMismatch {
                trial: self.trials.len(),
                expected: self.channels.count(),
                found: other.channels.count(),
            });
        }
        self.trials.extend(other.trials);
        Ok(self)
    }

    pub fn save(&self, path: impl AsRef<Path>, format: FileFormat) -> Result<(), DataError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        match format {
            FileFormat::Binary => write_binary(self, file),
            FileFormat::Csv { .. } => write_csv(self, file),
        }
    }
}

/// Reads and validates a trial set from `path`.
pub fn load_trialset(path: impl AsRef<Path>, format: FileFormat) -> Result<TrialSet, DataError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    match format {
        FileFormat::Binary => read_binary(file),
        FileFormat::Csv { fs } => read_csv(file, fs),
    }
}

/// Writes `set` to `path` in the given format.
pub fn save_trialset(
    set: &TrialSet,
    path: impl AsRef<Path>,
    format: FileFormat,
) -> Result<(), DataError> {
    set.save(path, format)
}
