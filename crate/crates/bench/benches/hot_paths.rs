use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tangentscope_bench::{cover_rects, step, wave};
use tangentscope_core::counterexamples::{littlewood_set, BuildOptions};
use tangentscope_core::dyadic::{lemma_l4_function, tx2_cover, DyadicRect, RareSequence};
use tangentscope_core::kernels::{dyadic_sequence, Poisson, Radius};
use tangentscope_core::operators::{convolve, hl_maximal, lambda_maximal};
use tangentscope_core::regions::{default_deltas, pi_star, ApproachCurve};

fn maximal(c: &mut Criterion) {
    let mut g = c.benchmark_group("hl_maximal");
    for n in [256usize, 1024, 4096] {
        let f = wave(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| b.iter(|| hl_maximal(black_box(f))));
    }
    g.finish();

    let f = step(1 << 12);
    let curve = ApproachCurve::nontangential(1.0);
    let radii = dyadic_sequence(1, 14);
    c.bench_function("lambda_maximal/4096x14", |b| {
        b.iter(|| lambda_maximal(&Poisson, &curve, black_box(&f), &radii).unwrap())
    });
}

fn convolution(c: &mut Criterion) {
    let f = step(1 << 12);
    let mut g = c.benchmark_group("convolve_poisson");
    for k in [4u32, 10, 14] {
        let r = Radius::dyadic(k);
        g.bench_with_input(BenchmarkId::from_parameter(k), &r, |b, &r| b.iter(|| convolve(&Poisson, r, black_box(&f)).unwrap()));
    }
    g.finish();
}

fn regions(c: &mut Criterion) {
    let curve = ApproachCurve::power(1.0, 0.5);
    let deltas = default_deltas(10);
    let radii = dyadic_sequence(1, 60);
    c.bench_function("pi_star/10x60", |b| b.iter(|| pi_star(&Poisson, &curve, &deltas, black_box(&radii)).unwrap()));
}

fn constructions(c: &mut Criterion) {
    let mut g = c.benchmark_group("constructions");
    g.sample_size(10);
    let curve = ApproachCurve::power(1.0, 0.5);
    g.bench_function("littlewood/K=2", |b| {
        b.iter(|| littlewood_set(&Poisson, &curve, 2, 1 << 10, BuildOptions::with_samples(32)).unwrap())
    });
    let q = DyadicRect::square(1, 2, 1);
    g.bench_function("l4_build/L=2", |b| b.iter(|| lemma_l4_function(2, black_box(&q), 512).unwrap()));
    let block = lemma_l4_function(2, &q, 512).unwrap();
    g.bench_function("l4_audit/L=2", |b| b.iter(|| block.audit(100, 0x5eed).unwrap()));
    g.finish();
}

fn covers(c: &mut Criterion) {
    let delta = RareSequence::evens(10);
    let rects = cover_rects(&delta, 1000);
    c.bench_function("tx2_cover/1000", |b| {
        b.iter(|| rects.iter().filter(|r| tx2_cover(r, &delta).unwrap().holds()).count())
    });
}

criterion_group!(benches, maximal, convolution, regions, constructions, covers);
criterion_main!(benches);
