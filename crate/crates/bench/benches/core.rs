use std::hint::black_box;

use bruhat_bench::{ring, sample_gl};
use bruhat_core::invariants::invariants;
use bruhat_core::oracle::{canonical_flag, double_cosets};
use bruhat_core::{GeneratorSet, OracleConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn ring_arithmetic(c: &mut Criterion) {
    let r = ring(3, 4);
    let elems: Vec<_> = r.elements().collect();
    c.bench_function("ring/mul_add_z81", |b| {
        b.iter(|| {
            let mut acc = r.zero();
            for &x in &elems {
                acc = r.add(acc, r.mul(x, x));
            }
            black_box(acc)
        })
    });
    c.bench_function("ring/inv_units_z81", |b| {
        b.iter(|| r.units().map(|u| r.inv(u).unwrap().code()).sum::<u32>())
    });
}

fn linear_algebra(c: &mut Criterion) {
    let mut group = c.benchmark_group("matrix");
    for n in [3usize, 5] {
        let ms = sample_gl(ring(2, 4), n, 32, 7);
        group.bench_with_input(BenchmarkId::new("module_type", n), &ms, |b, ms| {
            b.iter(|| {
                ms.iter()
                    .map(|m| m.submatrix(1, n, 0, n - 1).unwrap().module_type().length())
                    .sum::<u32>()
            })
        });
        group.bench_with_input(BenchmarkId::new("invariants", n), &ms, |b, ms| {
            b.iter(|| {
                ms.iter().for_each(|m| {
                    black_box(invariants(m).unwrap());
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("canonical_flag", n), &ms, |b, ms| {
            b.iter(|| {
                ms.iter().for_each(|m| {
                    black_box(canonical_flag(m).unwrap());
                })
            })
        });
    }
    group.finish();
}

fn orbits(c: &mut Criterion) {
    let mut group = c.benchmark_group("double_cosets");
    group.sample_size(10);
    let config = OracleConfig {
        generators: GeneratorSet::Minimal,
        ..OracleConfig::default()
    };
    for (p, k, n) in [(2, 2, 3), (3, 2, 3), (2, 2, 4)] {
        let r = ring(p, k);
        group.bench_function(format!("{r}/n={n}"), |b| {
            b.iter(|| double_cosets(r, n, &config).unwrap().num_cosets)
        });
    }
    group.finish();
}

criterion_group!(benches, ring_arithmetic, linear_algebra, orbits);
criterion_main!(benches);
