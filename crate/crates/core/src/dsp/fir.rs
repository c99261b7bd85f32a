use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::DspError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hamming,
}

/// Windowed-sinc band-pass design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirSpec {
    pub order: usize,
    pub f_low: f64,
    pub f_high: f64,
    pub fs: f64,
    pub window: WindowKind,
    /// Remove the residual DC gain of the truncated design by subtracting
    /// a scaled copy of the window from the taps.
    #[serde(default = "yes")]
    pub zero_dc: bool,
}

fn yes() -> bool {
    true
}

impl FirSpec {
    /// Order-30 Hamming band-pass over 8–30 Hz.
    pub fn mu_beta(fs: f64) -> Self {
        Self { order: 30, f_low: 8.0, f_high: 30.0, fs, window: WindowKind::Hamming, zero_dc: true }
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(DspError::InvalidFilter(format!(
                "order must be even and positive, got {}",
                self.order
            )));
        }
        if !(self.f_low > 0.0 && self.f_low < self.f_high && self.f_high < self.fs / 2.0) {
            return Err(DspError::InvalidFilter(format!(
                "need 0 < f_low < f_high < fs/2, got [{}, {}] at {} Hz",
                self.f_low, self.f_high, self.fs
            )));
        }
        Ok(())
    }
}

/// Linear-phase FIR taps (length `order + 1`, symmetric).
#[derive(Debug, Clone, PartialEq)]
pub struct FirKernel {
    coefficients: Vec<f64>,
}

impl FirKernel {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Difference of two ideal low-pass responses (cutoffs `f_high`, `f_low`)
/// times a Hamming window of `order + 1` points.
///
/// At low orders the truncated response leaks at DC (about 0.17 for order 30
/// over 8–30 Hz at 250 Hz). With `zero_dc` the taps become
/// `h[n] − w[n]·Σh/Σw`, which has exactly zero DC gain and leaves the
/// mid-band response practically unchanged.
pub fn design_bandpass_fir(spec: &FirSpec) -> Result<FirKernel, DspError> {
    spec.validate()?;
    let m = spec.order;
    let half = m / 2;
    let wh = spec.f_high / spec.fs;
    let wl = spec.f_low / spec.fs;
    let window: Vec<f64> = (0..=m)
        .map(|n| match spec.window {
            WindowKind::Hamming => 0.54 - 0.46 * (2.0 * PI * n as f64 / m as f64).cos(),
        })
        .collect();
    let mut half_taps: Vec<f64> = (0..=half)
        .map(|n| {
            let k = n as f64 - half as f64;
            (2.0 * wh * sinc(2.0 * wh * k) - 2.0 * wl * sinc(2.0 * wl * k)) * window[n]
        })
        .collect();
    if spec.zero_dc {
        let full_sum = |v: &[f64]| 2.0 * v[..half].iter().sum::<f64>() + v[half];
        let ratio = full_sum(&half_taps) / full_sum(&window[..=half]);
        half_taps.iter_mut().zip(&window).for_each(|(h, w)| *h -= ratio * w);
    }
    // Mirror one half, so symmetry holds bit-for-bit.
    let mut coefficients = vec![0.0; m + 1];
    for (n, &h) in half_taps.iter().enumerate() {
        coefficients[n] = h;
        coefficients[m - n] = h;
    }
    Ok(FirKernel { coefficients })
}

/// Causal FIR pass with zero initial state.
fn fir_pass(taps: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            taps.iter()
                .take(n + 1)
                .enumerate()
                .map(|(k, &h)| h * x[n - k])
                .sum()
        })
        .collect()
}

/// Zero-phase filtering: forward pass, reverse, forward pass, reverse.
///
/// The signal is extended at both ends by odd reflection of length
/// `3 × order` before filtering; the extension is removed afterwards, so the
/// output has the input's length.
pub fn filtfilt(kernel: &FirKernel, signal: &[f64]) -> Result<Vec<f64>, DspError> {
    let taps = kernel.coefficients();
    let min = 3 * taps.len();
    if signal.len() <= min {
        return Err(DspError::SignalTooShort { len: signal.len(), min });
    }
    let pad = 3 * kernel.order();
    let n = signal.len();
    let first = signal[0];
    let last = signal[n - 1];

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

    let mut y = fir_pass(taps, &ext);
    y.reverse();
    let mut y = fir_pass(taps, &y);
    y.reverse();
    Ok(y[pad..pad + n].to_vec())
}

/// Applies [`filtfilt`] to every row of a `[channels × samples]` matrix.
pub fn filtfilt_rows(kernel: &FirKernel, data: ArrayView2<'_, f64>) -> Result<Array2<f64>, DspError> {
    let mut out = Array2::zeros(data.raw_dim());
    for (src, mut dst) in data.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        let row = src.to_vec();
        let filtered = filtfilt(kernel, &row)?;
        dst.iter_mut().zip(filtered).for_each(|(d, v)| *d = v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel() -> FirKernel {
        design_bandpass_fir(&FirSpec::mu_beta(250.0)).unwrap()
    }

    #[test]
    fn order_30_is_symmetric() {
        let k = kernel();
        let c = k.coefficients();
        assert_eq!(c.len(), 31);
        for i in 0..=30 {
            assert_eq!(c[i].to_bits(), c[30 - i].to_bits());
        }
    }

    #[test]
    fn invalid_specs() {
        let base = FirSpec::mu_beta(250.0);
        assert!(design_bandpass_fir(&FirSpec { order: 31, ..base }).is_err());
        assert!(design_bandpass_fir(&FirSpec { order: 0, ..base }).is_err());
        assert!(design_bandpass_fir(&FirSpec { f_low: 30.0, f_high: 8.0, ..base }).is_err());
        assert!(design_bandpass_fir(&FirSpec { f_high: 125.0, ..base }).is_err());
        assert!(design_bandpass_fir(&FirSpec { f_low: 0.0, ..base }).is_err());
    }

    #[test]
    fn short_signal_is_rejected() {
        let k = kernel();
        assert_eq!(
            filtfilt(&k, &[0.0; 93]),
            Err(DspError::SignalTooShort { len: 93, min: 93 })
        );
        assert!(filtfilt(&k, &[0.0; 94]).is_ok());
    }

    #[test]
    fn time_reversal_symmetry() {
        let k = kernel();
        let x: Vec<f64> = (0..600).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let direct = filtfilt(&k, &x).unwrap();
        let mut rev = x.clone();
        rev.reverse();
        let mut back = filtfilt(&k, &rev).unwrap();
        back.reverse();
        for (a, b) in direct.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn output_length_matches_input() {
        let k = kernel();
        let x = vec![1.0; 1000];
        assert_eq!(filtfilt(&k, &x).unwrap().len(), 1000);
    }
}
