use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use etf_fingerprints::analysis::{q_function, rip_delta_bruteforce};
use etf_fingerprints::channel::EmbeddingParams;
use etf_fingerprints::designs::{
    coherence, steiner_etf, steiner_pairs_incidence, sylvester_hadamard, verify_etf, DesignMatrix,
};
use etf_fingerprints::detection::test_statistics;
use etf_fingerprints::experiment::{run_sweep, DesignSource, ExperimentConfig};
use ndarray::Array1;

fn pairs_etf(v: usize) -> DesignMatrix {
    let inc = steiner_pairs_incidence(v).unwrap();
    let h = sylvester_hadamard((v as u32).trailing_zeros()).unwrap();
    steiner_etf(&inc, &h).unwrap()
}

fn bench_construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("construction");
    for v in [16usize, 32] {
        group.bench_function(format!("steiner_etf_v{v}"), |b| {
            let inc = steiner_pairs_incidence(v).unwrap();
            let h = sylvester_hadamard((v as u32).trailing_zeros()).unwrap();
            b.iter(|| steiner_etf(black_box(&inc), black_box(&h)).unwrap())
        });
    }
    group.finish();
}

fn bench_validation(c: &mut Criterion) {
    let f16 = pairs_etf(16);
    c.bench_function("coherence_120x256", |b| {
        b.iter(|| coherence(black_box(&f16)).unwrap())
    });
    c.bench_function("verify_etf_120x256", |b| {
        b.iter(|| verify_etf(black_box(&f16), 1e-10).unwrap())
    });
}

fn bench_rip(c: &mut Criterion) {
    let f = pairs_etf(4);
    c.bench_function("rip_delta_6x16_pairs", |b| {
        b.iter(|| rip_delta_bruteforce(black_box(&f), 2).unwrap())
    });
}

fn bench_q_function(c: &mut Criterion) {
    c.bench_function("q_function_grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            let mut x = -8.0;
            while x <= 8.0 {
                acc += q_function(black_box(x));
                x += 0.25;
            }
            acc
        })
    });
}

fn bench_statistics(c: &mut Criterion) {
    let f = pairs_etf(16);
    let params = EmbeddingParams::new(f.n(), 1.0).unwrap();
    let z = Array1::from_shape_fn(f.n(), |i| (i as f64 * 0.37).sin());
    c.bench_function("test_statistics_120x256", |b| {
        b.iter(|| test_statistics(black_box(&z), &f, &params).unwrap())
    });
}

fn bench_sweep(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        designs: vec![DesignSource::PairsEtf { v: 16 }],
        k_values: vec![3],
        trials: 2_000,
        master_seed: Some(1),
        ..ExperimentConfig::default()
    };
    let design = cfg.designs[0].build().unwrap();
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    group.bench_function("sweep_2000_trials_120x256", |b| {
        b.iter(|| run_sweep(black_box(&cfg), &design).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_construction,
    bench_validation,
    bench_rip,
    bench_q_function,
    bench_statistics,
    bench_sweep
);
criterion_main!(benches);
