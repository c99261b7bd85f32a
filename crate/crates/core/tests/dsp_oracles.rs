//! Filter and spectrum checks against independently computed references.

use std::f64::consts::PI;

use miemph::dsp::{band_power, design_bandpass_fir, filtfilt, periodogram, FirSpec};
use miemph::rng::rng_from_seed;
use rand::Rng as _;

const FS: f64 = 250.0;

fn sine(freq: f64, amp: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / FS).sin()).collect()
}

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

/// Ideal band-pass impulse response times a Hamming window, written from
/// the sine form rather than the sinc difference, then with the
/// window-shaped DC component projected out.
fn reference_taps(order: usize, f1: f64, f2: f64) -> Vec<f64> {
    let half = (order / 2) as f64;
    let hamming = |n: usize| 0.54 - 0.46 * (2.0 * PI * n as f64 / order as f64).cos();
    let raw: Vec<f64> = (0..=order)
        .map(|n| {
            let k = n as f64 - half;
            let ideal = if k == 0.0 {
                2.0 * (f2 - f1) / FS
            } else {
                ((2.0 * PI * f2 * k / FS).sin() - (2.0 * PI * f1 * k / FS).sin()) / (PI * k)
            };
            ideal * hamming(n)
        })
        .collect();
    let w_sum: f64 = (0..=order).map(hamming).sum();
    let ratio = raw.iter().sum::<f64>() / w_sum;
    raw.iter().enumerate().map(|(n, h)| h - ratio * hamming(n)).collect()
}

/// |H(f)| by direct summation of the taps.
fn magnitude_response(taps: &[f64], f: f64) -> f64 {
    let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &h)| {
        let phi = 2.0 * PI * f * n as f64 / FS;
        (re + h * phi.cos(), im - h * phi.sin())
    });
    re.hypot(im)
}

/// One-sided periodogram from the DFT definition.
fn naive_periodogram(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (re, im) = x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let phi = -2.0 * PI * (k * t) as f64 / n as f64;
                (re + v * phi.cos(), im + v * phi.sin())
            });
            let p = (re * re + im * im) / (FS * n as f64);
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

#[test]
fn coefficients_match_reference_design() {
    let kernel = design_bandpass_fir(&FirSpec::mu_beta(FS)).unwrap();
    let reference = reference_taps(30, 8.0, 30.0);
    assert_eq!(kernel.coefficients().len(), 31);
    for (a, b) in kernel.coefficients().iter().zip(&reference) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn frequency_response_by_direct_summation() {
    let kernel = design_bandpass_fir(&FirSpec::mu_beta(FS)).unwrap();
    let h = kernel.coefficients();
    assert!(magnitude_response(h, 0.0) <= 0.1);
    assert!(magnitude_response(h, 0.0) < 1e-12);
    let mid = magnitude_response(h, 19.0);
    assert!((0.7..=1.1).contains(&mid), "|H(19 Hz)| = {mid}");
    assert!(magnitude_response(h, 100.0) < 0.1);
}

#[test]
fn filtfilt_gain_is_squared_magnitude() {
    let kernel = design_bandpass_fir(&FirSpec::mu_beta(FS)).unwrap();
    let gain = magnitude_response(kernel.coefficients(), 19.0).powi(2);
    let x = sine(19.0, 1.0, 2500);
    let y = filtfilt(&kernel, &x).unwrap();
    // steady state, away from the padded edges
    for i in 200..2300 {
        assert!((y[i] - gain * x[i]).abs() < 1e-6, "sample {i}: {} vs {}", y[i], gain * x[i]);
    }
}

#[test]
fn filtfilt_interior_equals_autocorrelation_convolution() {
    let kernel = design_bandpass_fir(&FirSpec::mu_beta(FS)).unwrap();
    let h = kernel.coefficients();
    let m = h.len() - 1;
    // zero-phase kernel g[j] = Σ_n h[n]·h[n + |j|], j ∈ [−m, m]
    let g: Vec<f64> = (-(m as isize)..=m as isize)
        .map(|j| {
            let j = j.unsigned_abs();
            (0..=m - j).map(|n| h[n] * h[n + j]).sum()
        })
        .collect();
    let x = noise(1000, 11);
    let y = filtfilt(&kernel, &x).unwrap();
    for i in 2 * m..x.len() - 2 * m {
        let direct: f64 = g.iter().enumerate().map(|(j, &gj)| gj * x[i + m - j]).sum();
        assert!((y[i] - direct).abs() < 1e-12);
    }
}

#[test]
fn filtfilt_is_zero_phase() {
    let kernel = design_bandpass_fir(&FirSpec::mu_beta(FS)).unwrap();
    let x = sine(15.0, 1.0, 1000);
    let y = filtfilt(&kernel, &x).unwrap();
    let xcorr = |lag: isize| -> f64 {
        (100..900).map(|i| x[i] * y[(i as isize + lag) as usize]).sum()
    };
    let best = (-20..=20).max_by(|&a, &b| xcorr(a).total_cmp(&xcorr(b))).unwrap();
    assert_eq!(best, 0);
}

#[test]
fn constant_signal_is_rejected() {
    let kernel = design_bandpass_fir(&FirSpec::mu_beta(FS)).unwrap();
    let y = filtfilt(&kernel, &[5.0; 1000]).unwrap();
    assert!(y[50..950].iter().all(|v| v.abs() <= 0.1));
}

#[test]
fn uncorrected_design_leaks_at_dc() {
    let spec = FirSpec { zero_dc: false, ..FirSpec::mu_beta(FS) };
    let h = design_bandpass_fir(&spec).unwrap();
    let dc = magnitude_response(h.coefficients(), 0.0);
    let direct: f64 = h.coefficients().iter().sum();
    assert!((dc - direct.abs()).abs() < 1e-12);
    assert!(dc > 0.15, "{dc}");
    let mid = magnitude_response(h.coefficients(), 19.0);
    let corrected = design_bandpass_fir(&FirSpec::mu_beta(FS)).unwrap();
    assert!((mid - magnitude_response(corrected.coefficients(), 19.0)).abs() < 0.01);
}

#[test]
fn periodogram_matches_naive_dft() {
    for n in [100, 101] {
        let x = noise(n, n as u64);
        let psd = periodogram(&x, FS).unwrap();
        let reference = naive_periodogram(&x);
        assert_eq!(psd.power.len(), reference.len());
        for (a, b) in psd.power.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-12), "{a} vs {b}");
        }
        assert!((psd.freqs[1] - FS / n as f64).abs() < 1e-12);
    }
}

#[test]
fn parseval() {
    for n in [1000, 999] {
        let x = noise(n, 5);
        let mean_square = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let total = periodogram(&x, FS).unwrap().total_power();
        assert!(((total - mean_square) / mean_square).abs() < 1e-6);
    }
}

#[test]
fn planted_sinusoid_band_power() {
    let psd = periodogram(&sine(10.0, 2.0, 1000), FS).unwrap();
    assert_eq!(psd.power.len(), 501);
    let bp = band_power(&psd, 9.0, 11.0).unwrap();
    assert!((bp.linear - 2.0).abs() <= 0.02, "{}", bp.linear);
    assert!((bp.db().unwrap() - 3.0103).abs() < 0.05);
    // almost nothing outside the tone
    assert!(band_power(&psd, 20.0, 30.0).unwrap().linear < 1e-20);
}
