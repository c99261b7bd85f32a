use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::DspError;
use crate::eeg::{ClassLabel, Epoch};

/// Sliding-window augmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowSpec {
    pub length_s: f64,
    pub overlap_frac: f64,
}

impl Default for WindowSpec {
    /// 2 s windows with 50 % overlap.
    fn default() -> Self {
        Self { length_s: 2.0, overlap_frac: 0.5 }
    }
}

impl WindowSpec {
    /// Window length and stride in samples.
    pub fn samples(&self, fs: u32) -> Result<(usize, usize), DspError> {
        if !(self.length_s > 0.0) || !(0.0..1.0).contains(&self.overlap_frac) {
            return Err(DspError::InvalidWindow(format!(
                "length {} s, overlap {}",
                self.length_s, self.overlap_frac
            )));
        }
        let fs = f64::from(fs);
        let len = (self.length_s * fs).round() as usize;
        let stride = (self.length_s * (1.0 - self.overlap_frac) * fs).round() as usize;
        if len == 0 || stride == 0 {
            return Err(DspError::InvalidWindow("window or stride rounds to zero samples".into()));
        }
        Ok((len, stride))
    }
}

/// A window cut from an epoch, tagged with its sample offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub data: Array2<f64>,
    pub offset: usize,
    pub label: ClassLabel,
}

/// Cuts `floor((T − W) / S) + 1` windows at offsets `0, S, 2S, …`.
pub fn slide_windows(epoch: &Epoch, spec: &WindowSpec) -> Result<Vec<Window>, DspError> {
    let (len, stride) = spec.samples(epoch.fs)?;
    let total = epoch.n_samples();
    if total < len {
        return Err(DspError::EpochTooShort { len: total, window: len });
    }
    let count = (total - len) / stride + 1;
    Ok((0..count)
        .map(|i| {
            let offset = i * stride;
            Window {
                data: epoch.data.slice(s![.., offset..offset + len]).to_owned(),
                offset,
                label: epoch.label,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch(samples: usize) -> Epoch {
        Epoch {
            data: Array2::from_shape_fn((2, samples), |(c, i)| (c * samples + i) as f64),
            fs: 250,
            t0: 6.0,
            t1: 6.0 + samples as f64 / 250.0,
            label: ClassLabel::Lumbrical,
            subject_id: "s".into(),
            session_id: 1,
        }
    }

    #[test]
    fn three_windows_over_mi_epoch() {
        let w = slide_windows(&epoch(1000), &WindowSpec::default()).unwrap();
        assert_eq!(w.iter().map(|w| w.offset).collect::<Vec<_>>(), [0, 250, 500]);
        assert!(w.iter().all(|w| w.data.ncols() == 500 && w.label == ClassLabel::Lumbrical));
        assert_eq!(w[2].data[[1, 0]], 1500.0);
    }

    #[test]
    fn epoch_equal_to_window() {
        let e = epoch(500);
        let w = slide_windows(&e, &WindowSpec::default()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].data, e.data);
    }

    #[test]
    fn short_epoch_and_bad_spec() {
        assert_eq!(
            slide_windows(&epoch(499), &WindowSpec::default()),
            Err(DspError::EpochTooShort { len: 499, window: 500 })
        );
        let bad = WindowSpec { length_s: 2.0, overlap_frac: 1.0 };
        assert!(slide_windows(&epoch(1000), &bad).is_err());
    }

    #[test]
    fn session_of_150_trials_yields_450_windows() {
        let per_trial = slide_windows(&epoch(1000), &WindowSpec::default()).unwrap().len();
        assert_eq!(150 * per_trial, 450);
    }
}
