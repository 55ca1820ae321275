use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xvrmot_bench::fixture;
use xvrmot_core::assignment::{solve_lap, CostMatrix};
use xvrmot_core::metrics::{evaluate_description, EvalConfig};
use xvrmot_core::predictor::{filter_tracks, PredictorConfig};

fn lap(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_lap");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in [8usize, 32, 128] {
        let m = CostMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| solve_lap(black_box(m))));
    }
    group.finish();
}

fn evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_description");
    for (views, ids, frames) in [(2, 4, 50), (4, 8, 200)] {
        let f = fixture(views, ids, frames, 1);
        let id = format!("{views}v-{ids}id-{frames}f");
        group.bench_function(id, |b| {
            b.iter(|| {
                evaluate_description(&f.scene, &f.description, black_box(&f.scene.gt_tracks), &EvalConfig::default())
            })
        });
    }
    group.finish();
}

fn filter(c: &mut Criterion) {
    let mut group = c.benchmark_group("filter_tracks");
    for (views, ids, frames) in [(2, 4, 50), (4, 8, 200)] {
        let f = fixture(views, ids, frames, 2);
        let id = format!("{views}v-{ids}id-{frames}f");
        group.bench_function(id, |b| {
            b.iter(|| filter_tracks(black_box(&f.scene.gt_tracks), &f.scores, 0.1, &PredictorConfig::default()))
        });
    }
    group.finish();
}

criterion_group!(benches, lap, evaluate, filter);
criterion_main!(benches);
