use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rp_urn::model::simulate_series;
use rp_urn::{fit_trajectory, ApproxParams, Execution, FitOptions, ModelKind, ModelParams, SlotScheme};

fn trajectories(c: &mut Criterion) {
    let params: ModelParams = ApproxParams::complete(0.4, 0.7, 0.99).unwrap().into();
    let series = simulate_series(&params, 20_000, 1);
    let scheme = SlotScheme::new(10, series.len()).unwrap();

    let mut group = c.benchmark_group("fit_trajectory");
    group.sample_size(10);
    for kind in [ModelKind::OnlyFashion, ModelKind::Polya, ModelKind::Complete] {
        for execution in [Execution::Sequential, Execution::Parallel] {
            let opts = FitOptions {
                grid_points: 11,
                execution,
                ..FitOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(kind.name(), format!("{execution:?}")), &opts, |b, opts| {
                b.iter(|| fit_trajectory(kind, black_box(&series), &scheme, opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, trajectories);
criterion_main!(benches);
