use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dupsolve::duplication::{polygonal_with, DuplicationConfig, Execution, RSource};
use dupsolve::harness::{example1, example2, DEFAULT_EPSILON};

fn polygonal(c: &mut Criterion) {
    let p1 = example1();
    let p2 = example2(DEFAULT_EPSILON).unwrap();
    let cases = [
        ("example1_exact", &p1, RSource::Exact(p1.exact_r.clone().unwrap()), (-0.5, 0.99)),
        ("example1_taylor", &p1, RSource::Taylor, (-0.5, 0.5)),
        ("example2_exact", &p2, RSource::Exact(p2.exact_r.clone().unwrap()), p2.default_interval.unwrap()),
    ];
    for (name, problem, src, interval) in cases {
        let mut group = c.benchmark_group(name);
        for points in [1_000usize, 10_000] {
            let cfg = DuplicationConfig::decoupled(points, interval, src.clone()).unwrap();
            for exec in [Execution::Sequential, Execution::Parallel] {
                let id = BenchmarkId::new(format!("{exec:?}").to_lowercase(), points);
                group.bench_with_input(id, &cfg, |b, cfg| {
                    b.iter(|| polygonal_with(black_box(&problem.ivp), cfg, exec).unwrap())
                });
            }
        }
        group.finish();
    }
}

criterion_group!(benches, polygonal);
criterion_main!(benches);
