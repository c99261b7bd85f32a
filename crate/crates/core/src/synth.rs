//! Seeded synthetic EEG with class-specific oscillatory motifs.
//!
//! Every trial is pink (1/f) background noise on all channels plus, for the
//! trial's class, sinusoids on that class's channels whose amplitude steps
//! from `rest_amp` to `mi_amp` at the start of the imagery interval. Phases
//! are random per trial and channel. Trial `i` draws from its own stream
//! (`derive_seed(seed, "synth-trial", i)`), so generation is reproducible
//! and order-independent. Values are rounded to `f32`, matching what the
//! binary format stores.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eeg::{ChannelSet, ClassLabel, DataError, Trial, TrialSet};
use crate::par;
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic profile: {0}")]
    InvalidConfig(String),
    #[error("profile file: {0}")]
    Profile(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Oscillation planted in trials of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMotif {
    pub class: ClassLabel,
    pub channels: Vec<usize>,
    pub freq: f64,
    pub rest_amp: f64,
    pub mi_amp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Attenuate,
    Amplify,
}

impl ClassMotif {
    /// Desynchronization (power drop) or synchronization during imagery.
    pub fn modulation(&self) -> Modulation {
        if self.mi_amp < self.rest_amp {
            Modulation::Attenuate
        } else {
            Modulation::Amplify
        }
    }
}

/// Session-to-session drift applied on top of the motifs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Perturbation {
    /// Multiplies every motif amplitude.
    pub amp_scale: f64,
    /// Per-trial frequency offset drawn uniformly from `±freq_jitter_hz`.
    pub freq_jitter_hz: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self { amp_scale: 1.0, freq_jitter_hz: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub subject_id: String,
    pub session_id: u8,
    pub n_channels: usize,
    pub fs: u32,
    pub trial_s: f64,
    /// Start and end of the imagery interval, seconds.
    pub mi_window: [f64; 2],
    pub trials_per_class: usize,
    /// RMS of the pink background on each channel.
    pub noise: f64,
    pub motifs: Vec<ClassMotif>,
    pub perturbation: Perturbation,
}

impl Default for SynthConfig {
    fn default() -> Self {
        default_separable_profile()
    }
}

/// Three classes on disjoint three-channel groups at 10, 20 and 13 Hz, each
/// tripling in amplitude during imagery; 50 trials per class.
pub fn default_separable_profile() -> SynthConfig {
    let motif = |class, first: usize, freq| ClassMotif {
        class,
        channels: (first..first + 3).collect(),
        freq,
        rest_amp: 0.5,
        mi_amp: 1.5,
    };
    SynthConfig {
        seed: 0,
        subject_id: "synth01".into(),
        session_id: 1,
        n_channels: 60,
        fs: 250,
        trial_s: 10.0,
        mi_window: [6.0, 10.0],
        trials_per_class: 50,
        noise: 1.2,
        motifs: vec![
            motif(ClassLabel::Cylindrical, 8, 10.0),
            motif(ClassLabel::Spherical, 24, 20.0),
            motif(ClassLabel::Lumbrical, 40, 13.0),
        ],
        perturbation: Perturbation::default(),
    }
}

/// Drift used for a simulated second session: weaker motifs and up to
/// ±1.5 Hz of frequency shift per trial.
pub const SESSION_DRIFT: Perturbation = Perturbation { amp_scale: 0.7, freq_jitter_hz: 1.5 };

impl SynthConfig {
    /// The same subject recorded again: new session id, an independent noise
    /// stream and, when `drift` is given, perturbed motifs.
    pub fn second_session(&self, session_id: u8, drift: Option<Perturbation>) -> Self {
        Self {
            seed: derive_seed(self.seed, "synth-session", u64::from(session_id)),
            session_id,
            perturbation: drift.unwrap_or(self.perturbation),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_channels == 0 || self.fs == 0 || self.trials_per_class == 0 {
            return bad("channels, sampling rate and trials_per_class must be positive".into());
        }
        if !(self.trial_s > 0.0) {
            return bad("trial_s must be positive".into());
        }
        let [a, b] = self.mi_window;
        if !(0.0 <= a && a < b && b <= self.trial_s) {
            return bad(format!("imagery window [{a}, {b}] outside trial"));
        }
        if !(self.noise >= 0.0) || !(self.perturbation.amp_scale >= 0.0) || !(self.perturbation.freq_jitter_hz >= 0.0) {
            return bad("noise and perturbation must be non-negative".into());
        }
        let nyquist = f64::from(self.fs) / 2.0;
        for m in &self.motifs {
            let f_lo = m.freq - self.perturbation.freq_jitter_hz;
            let f_hi = m.freq + self.perturbation.freq_jitter_hz;
            if !(f_lo > 0.0 && f_hi < nyquist) {
                return bad(format!("motif frequency {} Hz outside (0, {nyquist})", m.freq));
            }
            if !(m.rest_amp >= 0.0 && m.mi_amp >= 0.0) {
                return bad("motif amplitudes must be non-negative".into());
            }
            if let Some(&c) = m.channels.iter().find(|&&c| c >= self.n_channels) {
                return bad(format!("motif channel {c} >= {}", self.n_channels));
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.trial_s * f64::from(self.fs)).round() as usize
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| SynthError::Profile(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|e| SynthError::Profile(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Pink noise by a three-pole shaping filter over white Gaussian noise
/// (roughly −10 dB/decade across the EEG range), scaled to unit RMS.
fn pink_noise(rng: &mut Rng, n: usize) -> Vec<f64> {
    const WARMUP: usize = 1000;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n + WARMUP {
        let w: f64 = rng.sample(StandardNormal);
        b0 = 0.99765 * b0 + w * 0.099_046_0;
        b1 = 0.96300 * b1 + w * 0.296_516_4;
        b2 = 0.57000 * b2 + w * 1.052_691_3;
        if i >= WARMUP {
            out.push(b0 + b1 + b2 + w * 0.1848);
        }
    }
    let mean = out.iter().sum::<f64>() / n as f64;
    let rms = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v = (*v - mean) / rms);
    }
    out
}

fn generate_trial(cfg: &SynthConfig, index: usize) -> Trial {
    let label = ClassLabel::ALL[index % 3];
    let n = cfg.n_samples();
    let fs = f64::from(cfg.fs);
    let mut rng = rng_from_seed(derive_seed(cfg.seed, "synth-trial", index as u64));
    let mut data = Array2::zeros((cfg.n_channels, n));
    for c in 0..cfg.n_channels {
        let noise = pink_noise(&mut rng, n);
        for (d, v) in data.row_mut(c).iter_mut().zip(noise) {
            *d = cfg.noise * v;
        }
    }
    let mi_start = (cfg.mi_window[0] * fs).round() as usize;
    let mi_end = (cfg.mi_window[1] * fs).round() as usize;
    let scale = cfg.perturbation.amp_scale;
    for m in cfg.motifs.iter().filter(|m| m.class == label) {
        let jitter = if cfg.perturbation.freq_jitter_hz > 0.0 {
            rng.random_range(-cfg.perturbation.freq_jitter_hz..=cfg.perturbation.freq_jitter_hz)
        } else {
            0.0
        };
        let freq = m.freq + jitter;
        for &c in &m.channels {
            let phase = rng.random_range(0.0..2.0 * PI);
            for (i, d) in data.row_mut(c).iter_mut().enumerate() {
                let amp = if (mi_start..mi_end).contains(&i) { m.mi_amp } else { m.rest_amp };
                *d += scale * amp * (2.0 * PI * freq * i as f64 / fs + phase).sin();
            }
        }
    }
    data.mapv_inplace(|v| f64::from(v as f32));
    Trial { data, fs: cfg.fs, label, subject_id: cfg.subject_id.clone(), session_id: cfg.session_id }
}

/// Generates `3 × trials_per_class` trials with labels cycling 0, 1, 2.
pub fn generate_trialset(cfg: &SynthConfig) -> Result<TrialSet, SynthError> {
    cfg.validate()?;
    let trials = par::map_range(3 * cfg.trials_per_class, |i| generate_trial(cfg, i));
    Ok(TrialSet::new(ChannelSet::numbered(cfg.n_channels)?, cfg.fs, trials)?)
}
