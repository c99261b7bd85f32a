use rand::seq::SliceRandom;

use super::{Decoder, EvalError, FitOutcome};
use crate::eeg::N_CLASSES;
use crate::net::{self, write_checkpoint, Example, Model, ModelSpec, Precision, Scalar, TrainConfig};
use crate::pipeline::PreparedTrial;
use crate::rng::{derive_seed, purpose, rng_from_seed};

/// The convolutional network as a [`Decoder`].
///
/// A stratified `val_fraction` of the training trials is held out to pick
/// the best epoch; the test trials are only scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnnDecoder {
    pub train: TrainConfig,
    pub val_fraction: f64,
}

impl Default for CnnDecoder {
    fn default() -> Self {
        Self { train: TrainConfig::default(), val_fraction: 0.2 }
    }
}

/// Stratified fit/validation split of training trials.
fn split_validation<'a>(
    trials: &[&'a PreparedTrial],
    fraction: f64,
    seed: u64,
) -> (Vec<&'a PreparedTrial>, Vec<&'a PreparedTrial>) {
    let mut rng = rng_from_seed(seed);
    let mut fit = Vec::new();
    let mut val = Vec::new();
    for class in 0..N_CLASSES {
        let mut members: Vec<&PreparedTrial> =
            trials.iter().copied().filter(|t| t.label.index() == class).collect();
        members.shuffle(&mut rng);
        let n_val = ((members.len() as f64) * fraction).round() as usize;
        let n_val = n_val.min(members.len().saturating_sub(1));
        val.extend(members.drain(..n_val));
        fit.extend(members);
    }
    // restore file order so batches do not depend on the class loop
    fit.sort_by_key(|t| t.id.clone());
    val.sort_by_key(|t| t.id.clone());
    (fit, val)
}

fn to_buffers<T: Scalar>(trials: &[&PreparedTrial]) -> Vec<Vec<Vec<T>>> {
    trials
        .iter()
        .map(|t| {
            t.windows
                .iter()
                .map(|w| w.iter().map(|&v| T::from_f64_lossy(v)).collect())
                .collect()
        })
        .collect()
}

fn examples<'a, T>(trials: &[&PreparedTrial], buffers: &'a [Vec<Vec<T>>]) -> Vec<Example<'a, T>> {
    trials
        .iter()
        .zip(buffers)
        .enumerate()
        .flat_map(|(k, (t, windows))| {
            windows.iter().map(move |w| Example { input: w.as_slice(), label: t.label.index(), trial: k })
        })
        .collect()
}

impl CnnDecoder {
    fn run<T: Scalar>(
        &self,
        train: &[&PreparedTrial],
        test: &[&PreparedTrial],
        seed: u64,
    ) -> Result<FitOutcome, EvalError> {
        let first = train.first().ok_or(net::NetError::EmptyTrainingSet)?;
        let window = first.windows.first().ok_or_else(|| EvalError::NoWindows(first.id.clone()))?;
        let spec = ModelSpec::new(window.nrows(), window.ncols())?;

        let (fit, val) = split_validation(train, self.val_fraction, derive_seed(seed, purpose::SPLIT, 0));
        let fit_buf = to_buffers::<T>(&fit);
        let val_buf = to_buffers::<T>(&val);
        let cfg = TrainConfig { seed, ..self.train };
        let model = Model::<T>::new(spec, seed)?;
        let (model, history) = net::train(model, &examples(&fit, &fit_buf), &examples(&val, &val_buf), &cfg)?;

        let test_buf = to_buffers::<T>(test);
        let inputs: Vec<&[T]> = test_buf.iter().flatten().map(Vec::as_slice).collect();
        let flat = model.predict(&inputs)?;
        let mut it = flat.into_iter().map(|p| p.map(|v| v.to_f64().unwrap_or(f64::NAN)));
        let window_probs = test_buf.iter().map(|w| it.by_ref().take(w.len()).collect()).collect();

        let mut checkpoint = Vec::new();
        write_checkpoint(&model, &mut checkpoint)?;
        Ok(FitOutcome { window_probs, history: Some(history), checkpoint: Some(checkpoint) })
    }
}

impl Decoder for CnnDecoder {
    fn fit_predict(
        &self,
        train: &[&PreparedTrial],
        test: &[&PreparedTrial],
        seed: u64,
    ) -> Result<FitOutcome, EvalError> {
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(EvalError::InvalidConfig(format!("val_fraction {} not in [0, 1)", self.val_fraction)));
        }
        match self.train.precision {
            Precision::F32 => self.run::<f32>(train, test, seed),
            Precision::F64 => self.run::<f64>(train, test, seed),
        }
    }
}
