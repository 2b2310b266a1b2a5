//! Scalar and small-matrix kernels: the exponential-integral product, the
//! Jacobi eigensolver, and the closed-form rate evaluations they feed.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use statbeam_bench::{beam_set, pd_pair, user_covariances};
use statbeam_core::numerics::{exp_e1, hermitian_eig};
use statbeam_core::rates::{ergodic_rate_general, ergodic_rate_m2};

fn bench_exp_e1(c: &mut Criterion) {
    let mut group = c.benchmark_group("exp_e1");
    // One argument per evaluation branch.
    for (label, x) in [("series", 0.35), ("continued-fraction", 7.0), ("asymptotic", 3e5)] {
        group.bench_function(label, |b| b.iter(|| exp_e1(black_box(x)).unwrap()));
    }
    group.finish();
}

fn bench_hermitian_eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("hermitian-eig");
    for m in [2usize, 8, 32] {
        let matrix = user_covariances(m)[0].entries().clone();
        group.bench_function(format!("m{m:02}"), |b| {
            b.iter(|| hermitian_eig(black_box(&matrix)).unwrap())
        });
    }
    group.finish();
}

fn bench_closed_form_rates(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed-form-rate");
    let (sigma1, _) = pd_pair();
    let pair = beam_set(2, 21);
    group.bench_function("two-user", |b| {
        b.iter(|| {
            ergodic_rate_m2(black_box(&sigma1), pair.get(0), pair.get(1), black_box(10.0))
                .unwrap()
        })
    });
    for m in [4usize, 8] {
        let sigmas = user_covariances(m);
        let ws = beam_set(m, 22);
        group.bench_function(format!("general-m{m:02}"), |b| {
            b.iter(|| {
                ergodic_rate_general(black_box(&sigmas[0]), &ws, 0, black_box(10.0)).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(kernels, bench_exp_e1, bench_hermitian_eig, bench_closed_form_rates);
criterion_main!(kernels);
