use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use vibci_bench::{batch, noise, trial, windows};
use vibci_core::augment::sliding_windows;
use vibci_core::cnn::{
    adam_step, forward, init_model, loss_and_grad, AdamState, Architecture, TrainConfig,
};
use vibci_core::dsp::{band_power, design_bandpass_fir, zero_phase_filter, Band};
use vibci_core::stats::{permutation_test, TestOptions};
use vibci_core::synth::{generate_channels, SubjectSpec};

fn dsp_benches(c: &mut Criterion) {
    c.bench_function("design_bandpass_order200", |b| {
        b.iter(|| design_bandpass_fir(black_box(Band::new(0.5, 13.0)), 250.0, 200).unwrap())
    });

    let fir = design_bandpass_fir(Band::new(0.5, 13.0), 100.0, 200).unwrap();
    let signal = noise(16_000, 1); // 160 s at 100 Hz
    c.bench_function("zero_phase_filter_16k_order200", |b| {
        b.iter(|| zero_phase_filter(black_box(&signal), &fir).unwrap())
    });

    let epoch = noise(400, 2);
    c.bench_function("band_power_4s_epoch", |b| {
        b.iter(|| band_power(black_box(&epoch), 100.0, Band::new(0.5, 13.0)).unwrap())
    });
}

fn augment_benches(c: &mut Criterion) {
    let t = trial(2, 400, 3);
    c.bench_function("sliding_windows_4s", |b| {
        b.iter(|| sliding_windows(black_box(&t), 100.0, 2.0, 0.5).unwrap())
    });
}

fn cnn_benches(c: &mut Criterion) {
    let arch = Architecture::with_default_blocks(1, 200).unwrap();
    let model = init_model(&arch, 1).unwrap();
    let x = batch(16, 1, 200, 4);
    c.bench_function("forward_batch16", |b| {
        b.iter(|| forward(black_box(&model), black_box(&x)).unwrap())
    });

    let labels: Vec<usize> = (0..16).map(|i| i % 4).collect();
    c.bench_function("loss_and_grad_batch16", |b| {
        b.iter(|| loss_and_grad(black_box(&model), black_box(&x), &labels).unwrap())
    });

    let (_, grads) = loss_and_grad(&model, &x, &labels).unwrap();
    c.bench_function("adam_step", |b| {
        b.iter_batched(
            || (model.clone(), AdamState::new(&model)),
            |(mut m, mut state)| {
                adam_step(&mut m, black_box(&grads), &mut state, &TrainConfig::default())
            },
            criterion::BatchSize::SmallInput,
        )
    });

    let train_windows = windows(64, 1, 200, 5);
    c.bench_function("train_epoch_64_windows", |b| {
        b.iter(|| {
            let config = TrainConfig { epochs: 1, seed: 1, ..TrainConfig::default() };
            vibci_core::cnn::train(black_box(&train_windows), &config).unwrap()
        })
    });
}

fn stats_benches(c: &mut Criterion) {
    let imagery: Vec<Vec<f64>> = vec![noise(50, 6).iter().map(|v| (v + 2.0).exp()).collect()];
    let rest: Vec<Vec<f64>> = vec![noise(50, 7).iter().map(|v| (v + 1.5).exp()).collect()];
    let names = vec!["Oz".to_string()];
    c.bench_function("permutation_test_1000", |b| {
        b.iter(|| {
            permutation_test(
                black_box(&names),
                black_box(&imagery),
                black_box(&rest),
                &TestOptions::default(),
            )
            .unwrap()
        })
    });
}

fn synth_benches(c: &mut Criterion) {
    let mut spec = SubjectSpec::default_subject();
    spec.fs_hz = 250.0;
    spec.trials_per_class = 2;
    let oz = spec.montage.index_of("Oz").unwrap();
    c.bench_function("generate_single_channel_8_trials", |b| {
        b.iter(|| generate_channels(black_box(&spec), 1, &[oz]).unwrap())
    });
}

criterion_group!(
    benches,
    dsp_benches,
    augment_benches,
    cnn_benches,
    stats_benches,
    synth_benches
);
criterion_main!(benches);
