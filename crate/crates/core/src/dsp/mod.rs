//! Band-pass filtering, spectral estimation and window augmentation.

mod fir;
mod psd;
mod window;

use thiserror::Error;

pub use fir::{design_bandpass_fir, filtfilt, filtfilt_rows, FirKernel, FirSpec, WindowKind};
pub use psd::{band_power, periodogram, BandPower, PsdEstimate};
pub use window::{slide_windows, Window, WindowSpec};

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("invalid filter spec: {0}")]
    InvalidFilter(String),
    #[error("signal of {len} samples too short for filtering (need more than {min})")]
    SignalTooShort { len: usize, min: usize },
    #[error("signal needs at least 2 samples")]
    DegenerateSignal,
    #[error("band [{f1}, {f2}] Hz is invalid for Nyquist {nyquist} Hz")]
    InvalidBand { f1: f64, f2: f64, nyquist: f64 },
    #[error("band [{f1}, {f2}] Hz holds fewer than two frequency bins")]
    EmptyBand { f1: f64, f2: f64 },
    #[error("band power is zero; decibel value undefined")]
    ZeroPower,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("epoch of {len} samples shorter than window of {window}")]
    EpochTooShort { len: usize, window: usize },
}
