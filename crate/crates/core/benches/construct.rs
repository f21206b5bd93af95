use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use endperiodic::par::Execution;
use endperiodic::pipeline::{construct_batch, PipelineConfig};
use endperiodic::suite::random_irreducible;

fn batch(c: &mut Criterion) {
    let configs: Vec<PipelineConfig> = random_irreducible(11, 64, 4, 2)
        .into_iter()
        .map(PipelineConfig::matrix)
        .collect();
    let mut group = c.benchmark_group("construct_batch");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::new(name, configs.len()), &configs, |b, configs| {
            b.iter(|| {
                let out = construct_batch(configs, exec);
                assert!(out.iter().all(|r| r.is_ok()));
                out
            })
        });
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
