use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use online_coreset::{
    dz_sampling, online_regression, pcp_sample, random_order, ridge_leverage_scores, sketch_rows,
    sketched_solve, two_stage_coreset, weighted_kz_solve, CoresetConstants, DrawScheme,
    RegressionConfig, SeedStream, SketchScaling,
};
use online_coreset_bench::{columns, design, observations, points};
use std::hint::black_box;

fn scheme() -> DrawScheme {
    DrawScheme::Independent(SeedStream::new(7))
}

fn clustering(c: &mut Criterion) {
    let mut g = c.benchmark_group("clustering");
    for n in [200, 1000] {
        let data = points(n, 2);
        g.bench_with_input(BenchmarkId::new("dz_sampling", n), &data, |b, d| {
            b.iter(|| dz_sampling(black_box(d), 3, 2.0, &scheme()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("two_stage_coreset", n), &data, |b, d| {
            b.iter(|| {
                two_stage_coreset(
                    black_box(d),
                    3,
                    2.0,
                    0.1,
                    1e-4,
                    &scheme(),
                    &CoresetConstants::default(),
                )
                .unwrap()
            })
        });
        let weighted: Vec<(Vec<f64>, f64)> = data.iter().map(|p| (p.clone(), 1.0)).collect();
        g.bench_with_input(
            BenchmarkId::new("weighted_kz_solve", n),
            &weighted,
            |b, w| b.iter(|| weighted_kz_solve(black_box(w), 3, 2.0, 3, &scheme()).unwrap()),
        );
    }
    g.finish();
}

fn lowrank(c: &mut Criterion) {
    let mut g = c.benchmark_group("lowrank");
    for t in [200, 1000] {
        let a = columns(20, t);
        g.bench_with_input(BenchmarkId::new("ridge_leverage", t), &a, |b, a| {
            b.iter(|| ridge_leverage_scores(black_box(a), 3).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("pcp_sample", t), &a, |b, a| {
            b.iter(|| {
                pcp_sample(
                    black_box(a),
                    3,
                    200,
                    0.3,
                    &scheme(),
                    SketchScaling::BySampleSize,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

fn regression(c: &mut Criterion) {
    let mut g = c.benchmark_group("regression");
    for n in [500, 5000] {
        let a = design(n, 5);
        g.bench_with_input(BenchmarkId::new("sketch_and_solve", n), &a, |b, a| {
            b.iter(|| {
                let s = sketch_rows(black_box(a), 346, 0.3, &scheme()).unwrap();
                sketched_solve(&s, a).unwrap()
            })
        });
    }
    g.finish();
}

fn online(c: &mut Criterion) {
    let mut g = c.benchmark_group("online");
    g.sample_size(10);
    let stream = random_order(observations(500, 5), 1).unwrap();
    g.bench_function("regression_500", |b| {
        b.iter(|| online_regression(&stream, &RegressionConfig::new(5, 0.3), 1).unwrap())
    });
    g.finish();
}

criterion_group!(benches, clustering, lowrank, regression, online);
criterion_main!(benches);
