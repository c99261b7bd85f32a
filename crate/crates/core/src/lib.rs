//! Motor-imagery EEG decoding with per-channel spectral emphasis.
//!
//! The pipeline band-passes each trial (order-30 Hamming FIR, zero phase),
//! cuts the motor-imagery epoch, weights every channel by its mu/beta band
//! power, slides 2 s windows over the result and classifies them with a
//! compact temporal/spatial convolutional network.
//!
//! Modules:
//! - [`eeg`]: trial data model and the binary/CSV formats
//! - [`dsp`]: FIR design, zero-phase filtering, periodogram, windowing
//! - [`emphasis`]: band-power channel weights
//! - [`net`]: the network, backpropagation, Adam, training
//! - [`pipeline`]: trial preprocessing
//! - [`eval`]: cross-validation, session transfer, reports
//! - [`synth`]: seeded synthetic EEG

pub mod dsp;
pub mod eeg;
pub mod emphasis;
pub mod eval;
pub mod net;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use eeg::{ClassLabel, Epoch, Trial, TrialSet};
