//! Per-channel spectral emphasis.
//!
//! Each channel's band power over `[f1, f2]` becomes a scalar weight, and a
//! window is emphasized by scaling every channel row by its weight. Weights
//! come from the trial's own motor-imagery epoch only.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{band_power, periodogram, DspError};
use crate::eeg::Epoch;

#[derive(Debug, Error, PartialEq)]
pub enum EmphasisError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("channel {channel} has zero band power; decibel weight undefined")]
    SilentChannel { channel: usize },
    #[error("every channel has zero band power")]
    AllSilent,
    #[error("window has {rows} channels but {weights} weights")]
    DimensionMismatch { rows: usize, weights: usize },
    #[error("invalid emphasis band [{f1}, {f2}] Hz")]
    InvalidBand { f1: f64, f2: f64 },
}

/// How linear band powers are turned into weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmphasisMode {
    /// Powers divided by their cross-channel mean.
    #[default]
    LinearMeanNorm,
    /// `10·log10` of the power, used as-is.
    DbRaw,
    /// Powers mapped affinely onto `[0, 1]`.
    Minmax,
}

impl EmphasisMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EmphasisMode::LinearMeanNorm => "linear-mean-norm",
            EmphasisMode::DbRaw => "db-raw",
            EmphasisMode::Minmax => "minmax",
        }
    }
}

impl std::str::FromStr for EmphasisMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear-mean-norm" => Ok(Self::LinearMeanNorm),
            "db-raw" => Ok(Self::DbRaw),
            "minmax" => Ok(Self::Minmax),
            other => Err(format!("unknown emphasis mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmphasisConfig {
    pub f1: f64,
    pub f2: f64,
    pub mode: EmphasisMode,
}

impl Default for EmphasisConfig {
    fn default() -> Self {
        Self { f1: 8.0, f2: 30.0, mode: EmphasisMode::LinearMeanNorm }
    }
}

/// One weight per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EmphasisWeights {
    pub weights: Vec<f64>,
    pub mode: EmphasisMode,
}

/// Linear band power of every channel of `epoch` over `[f1, f2]`.
pub fn channel_band_powers(epoch: &Epoch, f1: f64, f2: f64) -> Result<Vec<f64>, EmphasisError> {
    if !(f1 >= 0.0 && f1 < f2) {
        return Err(EmphasisError::InvalidBand { f1, f2 });
    }
    let fs = f64::from(epoch.fs);
    epoch
        .data
        .axis_iter(Axis(0))
        .map(|row| {
            let psd = periodogram(&row.to_vec(), fs)?;
            Ok(band_power(&psd, f1, f2)?.linear)
        })
        .collect()
}

pub fn compute_weights(epoch: &Epoch, cfg: &EmphasisConfig) -> Result<EmphasisWeights, EmphasisError> {
    let powers = channel_band_powers(epoch, cfg.f1, cfg.f2)?;
    let weights = weights_from_powers(&powers, cfg.mode)?;
    Ok(EmphasisWeights { weights, mode: cfg.mode })
}

/// Maps linear band powers to weights under `mode`.
pub fn weights_from_powers(powers: &[f64], mode: EmphasisMode) -> Result<Vec<f64>, EmphasisError> {
    match mode {
        EmphasisMode::DbRaw => powers
            .iter()
            .enumerate()
            .map(|(channel, &p)| {
                if p > 0.0 {
                    Ok(10.0 * p.log10())
                } else {
                    Err(EmphasisError::SilentChannel { channel })
                }
            })
            .collect(),
        EmphasisMode::LinearMeanNorm => {
            let mean = powers.iter().sum::<f64>() / powers.len() as f64;
            if mean <= 0.0 {
                return Err(EmphasisError::AllSilent);
            }
            Ok(powers.iter().map(|p| p / mean).collect())
        }
        EmphasisMode::Minmax => {
            let min = powers.iter().copied().fold(f64::INFINITY, f64::min);
            let max = powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = max - min;
            // Equal powers carry no ranking; leave the data unscaled.
            if span <= 0.0 {
                return Ok(vec![1.0; powers.len()]);
            }
            Ok(powers.iter().map(|p| (p - min) / span).collect())
        }
    }
}

/// Scales row `c` of `window` by `w.weights[c]`.
pub fn apply_emphasis(
    window: ArrayView2<'_, f64>,
    w: &EmphasisWeights,
) -> Result<Array2<f64>, EmphasisError> {
    if window.nrows() != w.weights.len() {
        return Err(EmphasisError::DimensionMismatch {
            rows: window.nrows(),
            weights: w.weights.len(),
        });
    }
    let mut out = window.to_owned();
    for (mut row, &weight) in out.axis_iter_mut(Axis(0)).zip(&w.weights) {
        row.mapv_inplace(|v| v * weight);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eeg::ClassLabel;
    use std::f64::consts::PI;

    fn epoch_from_rows(rows: Vec<Vec<f64>>) -> Epoch {
        let n = rows[0].len();
        let flat: Vec<f64> = rows.concat();
        Epoch {
            data: Array2::from_shape_vec((flat.len() / n, n), flat).unwrap(),
            fs: 250,
            t0: 6.0,
            t1: 10.0,
            label: ClassLabel::Cylindrical,
            subject_id: "s".into(),
            session_id: 1,
        }
    }

    fn sine(amp: f64, freq: f64) -> Vec<f64> {
        (0..1000).map(|i| amp * (2.0 * PI * freq * i as f64 / 250.0).sin()).collect()
    }

    #[test]
    fn identical_channels_get_unit_weights() {
        let e = epoch_from_rows(vec![sine(1.5, 12.0); 4]);
        let w = compute_weights(&e, &EmphasisConfig::default()).unwrap();
        assert_eq!(w.weights, vec![1.0; 4]);
    }

    #[test]
    fn amplitude_ratio_gives_power_ratio() {
        let e = epoch_from_rows(vec![sine(2.0, 10.0), sine(1.0, 10.0), vec![0.0; 1000]]);
        let p = channel_band_powers(&e, 8.0, 30.0).unwrap();
        assert!((p[0] / p[1] - 4.0).abs() < 1e-9);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn db_raw_of_amplitude_two_sine() {
        let e = epoch_from_rows(vec![sine(2.0, 10.0)]);
        let cfg = EmphasisConfig { mode: EmphasisMode::DbRaw, ..Default::default() };
        let w = compute_weights(&e, &cfg).unwrap();
        // 10·log10(2)
        assert!((w.weights[0] - 3.010_299_956_639_812).abs() < 0.01 * 3.01);
    }

    #[test]
    fn db_raw_rejects_silent_channel() {
        let e = epoch_from_rows(vec![sine(2.0, 10.0), vec![0.0; 1000]]);
        let cfg = EmphasisConfig { mode: EmphasisMode::DbRaw, ..Default::default() };
        assert_eq!(compute_weights(&e, &cfg), Err(EmphasisError::SilentChannel { channel: 1 }));
        // zero weights are fine in the other modes
        let w = compute_weights(&e, &EmphasisConfig::default()).unwrap();
        assert_eq!(w.weights[1], 0.0);
        let cfg = EmphasisConfig { mode: EmphasisMode::Minmax, ..Default::default() };
        assert_eq!(compute_weights(&e, &cfg).unwrap().weights, vec![1.0, 0.0]);
    }

    #[test]
    fn all_silent_linear_norm_is_an_error() {
        let e = epoch_from_rows(vec![vec![0.0; 1000]; 2]);
        assert_eq!(compute_weights(&e, &EmphasisConfig::default()), Err(EmphasisError::AllSilent));
    }

    #[test]
    fn apply_scales_rows() {
        let ones = Array2::<f64>::ones((2, 5));
        let w = EmphasisWeights { weights: vec![2.0, 0.5], mode: EmphasisMode::LinearMeanNorm };
        let out = apply_emphasis(ones.view(), &w).unwrap();
        assert!(out.row(0).iter().all(|&v| v == 2.0));
        assert!(out.row(1).iter().all(|&v| v == 0.5));

        let identity = EmphasisWeights { weights: vec![1.0; 2], mode: EmphasisMode::LinearMeanNorm };
        assert_eq!(apply_emphasis(ones.view(), &identity).unwrap(), ones);

        let three = EmphasisWeights { weights: vec![1.0; 3], mode: EmphasisMode::LinearMeanNorm };
        assert_eq!(
            apply_emphasis(ones.view(), &three),
            Err(EmphasisError::DimensionMismatch { rows: 2, weights: 3 })
        );
    }

    #[test]
    fn mode_parsing() {
        for m in [EmphasisMode::LinearMeanNorm, EmphasisMode::DbRaw, EmphasisMode::Minmax] {
            assert_eq!(m.as_str().parse::<EmphasisMode>().unwrap(), m);
        }
        assert!("log".parse::<EmphasisMode>().is_err());
    }
}
