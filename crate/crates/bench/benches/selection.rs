use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use glpen::{BandwidthGrid, DistanceCache, Kernel};
use glpen_bench::fixture;

fn cache_build(c: &mut Criterion) {
    let grid = BandwidthGrid::simulation();
    let mut group = c.benchmark_group("cache_build");
    group.sample_size(10);
    for kernel in [Kernel::Gaussian, Kernel::Epanechnikov] {
        for n in [500, 2000] {
            let sample = fixture(4, n);
            group.bench_with_input(BenchmarkId::new(kernel.name(), n), &sample, |b, s| {
                b.iter(|| DistanceCache::build_sequential(black_box(s), &grid, kernel).unwrap())
            });
        }
    }
    group.finish();
}

fn select_sweep(c: &mut Criterion) {
    let grid = BandwidthGrid::simulation();
    let cache = DistanceCache::build(&fixture(1, 2000), &grid, Kernel::Gaussian).unwrap();
    let a_values = glpen::calibration::default_a_grid();
    c.bench_function("select_60_a", |b| {
        b.iter(|| {
            for &a in &a_values {
                black_box(cache.select(a).unwrap());
            }
        })
    });
}

criterion_group!(benches, cache_build, select_sweep);
criterion_main!(benches);
