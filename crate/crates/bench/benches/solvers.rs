use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mbvp_bench::{coupled_problem, linear_problem};
use mbvp_core::analysis::lambda1_fd;
use mbvp_core::matrices::{eigenvalue_test, neumann_series_test, nonnegative_inverse_test, power_test};
use mbvp_core::{solve_s, solve_system, BoundaryOperator, ConvMatrix, LinearOptions, SolveOptions, Strategy};

fn linear(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_s");
    for n in [100, 400, 1600] {
        let p = linear_problem(BoundaryOperator::periodic(1), n);
        g.bench_with_input(BenchmarkId::new("periodic", n), &p, |b, p| {
            b.iter(|| solve_s(black_box(p), &LinearOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn system(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_system");
    g.sample_size(10);
    let prob = coupled_problem(2.0, 1.0, BoundaryOperator::dirichlet(1), BoundaryOperator::antiperiodic(1));
    for strategy in [Strategy::FixedPoint, Strategy::Newton] {
        let opts = SolveOptions { intervals: 200, force: Some(strategy), ..Default::default() };
        g.bench_function(strategy.name(), |b| b.iter(|| solve_system(black_box(&prob), &opts).unwrap()));
    }
    g.finish();
}

fn matrices(c: &mut Criterion) {
    let m = ConvMatrix::from_constants(0.4, 0.3, 0.2, 0.5).unwrap();
    let mut g = c.benchmark_group("matrix_tests");
    g.bench_function("power", |b| b.iter(|| power_test(black_box(&m))));
    g.bench_function("neumann", |b| b.iter(|| neumann_series_test(black_box(&m))));
    g.bench_function("eigenvalue", |b| b.iter(|| eigenvalue_test(black_box(&m))));
    g.bench_function("nonnegative_inverse", |b| b.iter(|| nonnegative_inverse_test(black_box(&m))));
    g.finish();
}

fn lambda1(c: &mut Criterion) {
    let mut g = c.benchmark_group("lambda1_fd");
    let bop = BoundaryOperator::antiperiodic(1);
    for n in [400, 1600] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| lambda1_fd(black_box(bop.domain()), 1.0, n).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, linear, system, matrices, lambda1);
criterion_main!(benches);
