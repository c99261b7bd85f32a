use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::Mode;
use super::{adam_step, AdamConfig, AdamState, Model, NetError, Precision, Scalar};
use crate::eval::aggregate_trial_prediction;
use crate::rng::{derive_seed, purpose, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub dropout_p: f64,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            dropout_p: 0.5,
            precision: Precision::F32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.batch_size == 0 {
            return Err(NetError::InvalidConfig("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(NetError::InvalidConfig(format!("dropout_p {} not in [0, 1)", self.dropout_p)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NetError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// A labelled network input and the trial it was cut from.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a, T> {
    pub input: &'a [T],
    pub label: usize,
    pub trial: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were kept, if validation data was given.
    pub best_epoch: Option<usize>,
}

impl History {
    /// `epoch,train_loss,train_acc,val_acc`; `val_acc` is empty without
    /// validation data.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,train_loss,train_acc,val_acc")?;
        for r in &self.records {
            let val = r.val_acc.map(|v| format!("{v:.6}")).unwrap_or_default();
            writeln!(w, "{},{:.9},{:.6},{}", r.epoch, r.train_loss, r.train_acc, val)?;
        }
        Ok(())
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.train_loss).collect()
    }
}

fn argmax<T: Scalar>(p: &[T; 3]) -> usize {
    let mut best = 0;
    for j in 1..3 {
        if p[j] > p[best] {
            best = j;
        }
    }
    best
}

/// Trial-level accuracy of `model` on `examples`: window probabilities are
/// averaged per trial before the argmax.
pub fn trial_accuracy<T: Scalar>(model: &Model<T>, examples: &[Example<'_, T>]) -> Result<f64, NetError> {
    let inputs: Vec<&[T]> = examples.iter().map(|e| e.input).collect();
    let probs = model.predict(&inputs)?;
    let mut trials: Vec<(usize, usize, Vec<[f64; 3]>)> = Vec::new();
    for (e, p) in examples.iter().zip(&probs) {
        let p = p.map(|v| v.to_f64().unwrap_or(f64::NAN));
        match trials.iter_mut().find(|(id, _, _)| *id == e.trial) {
            Some(entry) => entry.2.push(p),
            None => trials.push((e.trial, e.label, vec![p])),
        }
    }
    if trials.is_empty() {
        return Ok(0.0);
    }
    let correct = trials
        .iter()
        .filter(|(_, label, windows)| {
            aggregate_trial_prediction(windows).map(|c| c == *label).unwrap_or(false)
        })
        .count();
    Ok(correct as f64 / trials.len() as f64)
}

/// Mini-batch Adam training.
///
/// Each epoch shuffles the training examples with a stream derived from
/// `cfg.seed`; every step draws fresh dropout masks from another derived
/// stream. When `val` is non-empty, the parameters with the best
/// trial-level validation accuracy (earliest on ties) are returned;
/// otherwise the final ones.
pub fn train<T: Scalar>(
    mut model: Model<T>,
    train: &[Example<'_, T>],
    val: &[Example<'_, T>],
    cfg: &TrainConfig,
) -> Result<(Model<T>, History), NetError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(NetError::EmptyTrainingSet);
    }
    if let Some(bad) = train.iter().chain(val).find(|e| e.label >= 3) {
        return Err(NetError::InvalidLabel(bad.label));
    }
    let mut history = History::default();
    if cfg.epochs == 0 {
        return Ok((model, history));
    }

    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut state = AdamState::new(model.params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, Model<T>)> = None;
    let mut step = 0u64;

    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng_from_seed(derive_seed(cfg.seed, purpose::SHUFFLE, epoch as u64)));

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let inputs: Vec<&[T]> = batch.iter().map(|&i| train[i].input).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train[i].label).collect();
            let mode = Mode::Train {
                dropout_p: cfg.dropout_p,
                seed: derive_seed(cfg.seed, purpose::DROPOUT, step),
            };
            let pass = model.forward_samples(&inputs, mode)?;
            let (grads, loss) = model.backward(&pass, &labels)?;
            let loss = loss.to_f64().unwrap_or(f64::NAN);
            if !loss.is_finite() {
                return Err(NetError::Diverged { epoch, step });
            }
            correct += pass.probs.iter().zip(&labels).filter(|(p, &y)| argmax(p) == y).count();
            loss_sum += loss * batch.len() as f64;
            drop(pass);
            adam_step(model.params_mut(), &grads.tensors, &mut state, &adam);
            step += 1;
        }
        if !model.all_finite() {
            return Err(NetError::Diverged { epoch, step });
        }

        let val_acc = if val.is_empty() { None } else { Some(trial_accuracy(&model, val)?) };
        history.records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_acc,
        });
        if let Some(acc) = val_acc {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
                history.best_epoch = Some(epoch);
            }
        }
    }
    let model = best.map_or(model, |(_, m)| m);
    Ok((model, history))
}
