use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hoqmc::cbc::{cbc_naive, cbc_product, cbc_spod, rader_matvec, OmegaColumn};
use hoqmc::gf_poly::find_irreducible;
use hoqmc::pointgen::interlaced_points;
use hoqmc::weights::{BetaSequence, WeightFamily, WeightSpec};
use std::hint::black_box;

fn spec(family: WeightFamily) -> WeightSpec {
    WeightSpec::new(family, 2, Some(2), BetaSequence::power(0.1, 2.0, 0.6).unwrap()).unwrap()
}

fn fast_cbc(c: &mut Criterion) {
    let mut g = c.benchmark_group("fast_cbc_s10");
    g.sample_size(10);
    for m in [10usize, 12, 14] {
        g.bench_with_input(BenchmarkId::new("spod", m), &m, |b, &m| {
            let spec = spec(WeightFamily::Spod);
            b.iter(|| cbc_spod(m, 10, &spec).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("product", m), &m, |b, &m| {
            let spec = spec(WeightFamily::Product);
            b.iter(|| cbc_product(m, 10, &spec).unwrap())
        });
    }
    g.finish();
}

fn naive_cbc(c: &mut Criterion) {
    let spec = spec(WeightFamily::Spod);
    let mut g = c.benchmark_group("naive_cbc_s3");
    g.sample_size(10);
    g.bench_function("m6", |b| b.iter(|| cbc_naive(6, 3, &spec).unwrap()));
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("rader_matvec");
    for m in [10usize, 14, 18] {
        let col = OmegaColumn::new(&find_irreducible(2, m).unwrap(), 2).unwrap();
        let v: Vec<f64> = (0..col.size()).map(|i| (i as f64).sin()).collect();
        g.bench_with_input(BenchmarkId::from_parameter(m), &v, |b, v| b.iter(|| rader_matvec(&col, black_box(v)).unwrap()));
    }
    g.finish();
}

fn points(c: &mut Criterion) {
    let res = cbc_spod(14, 10, &spec(WeightFamily::Spod)).unwrap();
    let rule = res.rule().unwrap();
    c.bench_function("interlaced_points_m14_s10", |b| b.iter(|| interlaced_points(black_box(&rule))));
}

criterion_group!(benches, fast_cbc, naive_cbc, matvec, points);
criterion_main!(benches);
