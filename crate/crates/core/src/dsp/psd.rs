use rustfft::{num_complex::Complex, FftPlanner};

use super::DspError;

/// One-sided power spectral density on the DFT bin grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub fs: f64,
    pub n_fft: usize,
}

impl PsdEstimate {
    /// Bin spacing `fs / n_fft`.
    pub fn resolution(&self) -> f64 {
        self.fs / self.n_fft as f64
    }

    /// Rectangle-rule sum `Σ P(f_k)·Δf`, equal to the signal's mean square.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.resolution()
    }
}

/// Unwindowed one-sided periodogram with `n_fft` equal to the signal length.
///
/// `P(f_k) = |X_k|² / (fs·N)`, doubled for bins strictly between DC and
/// Nyquist.
pub fn periodogram(signal: &[f64], fs: f64) -> Result<PsdEstimate, DspError> {
    let n = signal.len();
    if n < 2 {
        return Err(DspError::DegenerateSignal);
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let n_bins = n / 2 + 1;
    let scale = 1.0 / (fs * n as f64);
    let power = buf[..n_bins]
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let p = x.norm_sqr() * scale;
            let is_nyquist = n.is_multiple_of(2) && k == n / 2;
            if k == 0 || is_nyquist {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let freqs = (0..n_bins).map(|k| k as f64 * fs / n as f64).collect();
    Ok(PsdEstimate { freqs, power, fs, n_fft: n })
}

/// Integrated power over a band, linear and in decibels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPower {
    pub linear: f64,
}

impl BandPower {
    /// `10·log10(linear)`; undefined at zero power.
    pub fn db(&self) -> Result<f64, DspError> {
        if self.linear > 0.0 {
            Ok(10.0 * self.linear.log10())
        } else {
            Err(DspError::ZeroPower)
        }
    }
}

/// Trapezoidal integral of `psd.power` over the bins lying in `[f1, f2]`.
pub fn band_power(psd: &PsdEstimate, f1: f64, f2: f64) -> Result<BandPower, DspError> {
    let nyquist = psd.fs / 2.0;
    // Small slack so that band edges computed in floating point still
    // include the bins sitting exactly on them.
    let tol = 1e-9 * psd.resolution();
    if !(f1 >= 0.0 && f1 < f2 && f2 <= nyquist + tol) {
        return Err(DspError::InvalidBand { f1, f2, nyquist });
    }
    let lo = psd.freqs.partition_point(|&f| f < f1 - tol);
    let hi = psd.freqs.partition_point(|&f| f <= f2 + tol);
    if hi < lo + 2 {
        return Err(DspError::EmptyBand { f1, f2 });
    }
    let f = &psd.freqs[lo..hi];
    let p = &psd.power[lo..hi];
    let linear = f
        .windows(2)
        .zip(p.windows(2))
        .map(|(f, p)| 0.5 * (p[0] + p[1]) * (f[1] - f[0]))
        .sum();
    Ok(BandPower { linear })
}
