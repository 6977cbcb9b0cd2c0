//! Sequential vs parallel execution of the Monte Carlo hot loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fbmlab_core::constants::estimate_piterbarg;
use fbmlab_core::fbm::SamplerChoice;
use fbmlab_core::validation::ExtremesSample;
use fbmlab_core::{Execution, ModelParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn extremes(c: &mut Criterion) {
    let mut group = c.benchmark_group("extremes_sample");
    group.sample_size(10);
    for hurst in [0.5, 0.3] {
        let params = ModelParams::new(hurst, 0.0, 1.0).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, hurst), &params, |b, p| {
                b.iter(|| ExtremesSample::simulate(p, 512, 2000, 7, SamplerChoice::Auto, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn piterbarg(c: &mut Criterion) {
    let mut group = c.benchmark_group("piterbarg_estimate");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| estimate_piterbarg(0.5, 1.0, 4.0, 1.0 / 64.0, 2000, 7, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, extremes, piterbarg);
criterion_main!(benches);
