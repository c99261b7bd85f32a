//! Sequential versus data-parallel execution of the hot paths.
//!
//! "sequential" runs inside a one-thread rayon pool, which is what the
//! crate does when built without the `parallel` feature; "parallel" uses
//! the global pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use miemph::net::{Mode, Model, ModelSpec};
use miemph::pipeline::{prepare_trials, PreprocessConfig};
use miemph::synth::{default_separable_profile, generate_trialset, SynthConfig};
use rayon::ThreadPool;

fn pools() -> Vec<(&'static str, Option<ThreadPool>)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    vec![("sequential", Some(one)), ("parallel", None)]
}

fn run<R: Send>(pool: &Option<ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn batch_training_step(c: &mut Criterion) {
    let spec = ModelSpec::new(60, 500).unwrap();
    let model = Model::<f32>::new(spec, 1).unwrap();
    let xs: Vec<Vec<f32>> = (0..16)
        .map(|i| (0..spec.n_channels * spec.in_samples).map(|j| ((i * 31 + j) % 97) as f32 / 48.0 - 1.0).collect())
        .collect();
    let inputs: Vec<&[f32]> = xs.iter().map(Vec::as_slice).collect();
    let labels: Vec<usize> = (0..16).map(|i| i % 3).collect();

    let mut group = c.benchmark_group("forward_backward_batch16");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run(&pool, || {
                    let pass = model.forward_samples(&inputs, Mode::Train { dropout_p: 0.5, seed: 3 }).unwrap();
                    model.backward(&pass, &labels).unwrap()
                })
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("predict_batch16");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || model.predict(&inputs).unwrap()))
        });
    }
    group.finish();
}

fn preprocessing(c: &mut Criterion) {
    let set = generate_trialset(&SynthConfig { trials_per_class: 10, ..default_separable_profile() }).unwrap();
    let cfg = PreprocessConfig::default();
    let mut group = c.benchmark_group("prepare_30_trials");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || prepare_trials(&set, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, batch_training_step, preprocessing);
criterion_main!(benches);
