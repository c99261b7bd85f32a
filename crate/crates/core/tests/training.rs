use std::f64::consts::PI;

use miemph::net::{train, Example, Model, ModelSpec, NetError, TrainConfig};

const K: usize = 2;
const S: usize = 250;

/// Class `y` puts a 10 Hz tone on channel `y % K` with amplitude set by `y`.
fn toy_inputs(n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let y = i % 3;
        let phase = i as f64 * 0.7;
        let mut x = vec![0.0; K * S];
        for t in 0..S {
            let v = (1.0 + y as f64) * (2.0 * PI * 10.0 * t as f64 / 250.0 + phase).sin();
            x[(y % K) * S + t] = v;
            x[((y + 1) % K) * S + t] = 0.1 * (t as f64 * 0.37 + phase).cos();
        }
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

fn examples<'a>(xs: &'a [Vec<f64>], ys: &[usize]) -> Vec<Example<'a, f64>> {
    xs.iter().zip(ys).enumerate().map(|(i, (x, &y))| Example { input: x, label: y, trial: i }).collect()
}

fn cfg(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, batch_size: 8, seed: 5, ..Default::default() }
}

#[test]
fn zero_epochs_returns_initial_model() {
    let (xs, ys) = toy_inputs(12);
    let model = Model::<f64>::new(ModelSpec::new(K, S).unwrap(), 1).unwrap();
    let (trained, history) = train(model.clone(), &examples(&xs, &ys), &[], &cfg(0)).unwrap();
    assert!(history.records.is_empty());
    assert_eq!(history.best_epoch, None);
    for (a, b) in trained.params().iter().zip(model.params()) {
        assert_eq!(a.data(), b.data());
    }
}

#[test]
fn training_is_deterministic() {
    let (xs, ys) = toy_inputs(24);
    let ex = examples(&xs, &ys);
    let run = || {
        let model = Model::<f64>::new(ModelSpec::new(K, S).unwrap(), 1).unwrap();
        train(model, &ex[..18], &ex[18..], &cfg(3)).unwrap()
    };
    let (m1, h1) = run();
    let (m2, h2) = run();
    assert_eq!(h1, h2);
    for (a, b) in m1.params().iter().zip(m2.params()) {
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn loss_decreases_on_separable_toy() {
    let (xs, ys) = toy_inputs(30);
    let model = Model::<f64>::new(ModelSpec::new(K, S).unwrap(), 2).unwrap();
    let (_, history) = train(model, &examples(&xs, &ys), &[], &TrainConfig { dropout_p: 0.0, ..cfg(8) }).unwrap();
    let losses = history.losses();
    assert!((losses[0] - 3f64.ln()).abs() < 0.2, "first epoch loss {}", losses[0]);
    assert!(losses.last().unwrap() < &(0.5 * losses[0]), "{losses:?}");
}

#[test]
fn best_validation_snapshot_is_kept() {
    let (xs, ys) = toy_inputs(24);
    let ex = examples(&xs, &ys);
    let model = Model::<f64>::new(ModelSpec::new(K, S).unwrap(), 1).unwrap();
    let (_, history) = train(model, &ex[..18], &ex[18..], &cfg(4)).unwrap();
    let best = history.best_epoch.unwrap();
    let accs: Vec<f64> = history.records.iter().map(|r| r.val_acc.unwrap()).collect();
    let top = accs.iter().copied().fold(f64::MIN, f64::max);
    assert_eq!(best, accs.iter().position(|&a| a == top).unwrap());
    let mut csv = Vec::new();
    history.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("epoch,train_loss,train_acc,val_acc\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn non_finite_input_reports_divergence() {
    let (mut xs, ys) = toy_inputs(6);
    xs[0][3] = f64::NAN;
    let model = Model::<f64>::new(ModelSpec::new(K, S).unwrap(), 1).unwrap();
    let err = train(model, &examples(&xs, &ys), &[], &TrainConfig { batch_size: 6, ..cfg(2) }).unwrap_err();
    assert!(matches!(err, NetError::Diverged { epoch: 0, step: 0 }), "{err:?}");
}

#[test]
fn invalid_configs() {
    let (xs, ys) = toy_inputs(3);
    let ex = examples(&xs, &ys);
    let model = || Model::<f64>::new(ModelSpec::new(K, S).unwrap(), 1).unwrap();
    assert!(matches!(train(model(), &[], &[], &cfg(1)), Err(NetError::EmptyTrainingSet)));
    let bad = TrainConfig { batch_size: 0, ..cfg(1) };
    assert!(matches!(train(model(), &ex, &[], &bad), Err(NetError::InvalidConfig(_))));
    let bad = TrainConfig { dropout_p: 1.0, ..cfg(1) };
    assert!(matches!(train(model(), &ex, &[], &bad), Err(NetError::InvalidConfig(_))));
    let mut wrong = ex.clone();
    wrong[0].label = 3;
    assert!(matches!(train(model(), &wrong, &[], &cfg(1)), Err(NetError::InvalidLabel(3))));
}
