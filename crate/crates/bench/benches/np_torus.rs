use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use npt_bench::shape;
use npt_core::bem_oracle::{oracle_matrix, OracleConfig, QuadratureGrid};
use npt_core::np_assembly::{assemble_block, Convention};
use npt_core::spectral_solver::eigen_spectrum;
use npt_core::toroidal_functions::{ring_p, ring_q};

fn ring_functions(c: &mut Criterion) {
    let mut g = c.benchmark_group("ring");
    for z in [1.05, 2.0, 10.0] {
        g.bench_with_input(BenchmarkId::new("p", z), &z, |b, &z| {
            b.iter(|| ring_p(black_box(2), black_box(3), z))
        });
        g.bench_with_input(BenchmarkId::new("q", z), &z, |b, &z| {
            b.iter(|| ring_q(black_box(2), black_box(3), z))
        });
    }
    g.finish();
}

fn assembly_and_spectrum(c: &mut Criterion) {
    let s = shape(1.0);
    let mut g = c.benchmark_group("block");
    for n in [8usize, 16, 32] {
        g.bench_with_input(BenchmarkId::new("assemble", n), &n, |b, &n| {
            b.iter(|| assemble_block(1, n, &s, Convention::OperatorForm))
        });
        let block = assemble_block(1, n, &s, Convention::OperatorForm).unwrap();
        g.bench_with_input(BenchmarkId::new("eigen", n), &block, |b, block| {
            b.iter(|| eigen_spectrum(block))
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let s = shape(1.0);
    let grid = QuadratureGrid::new(64, 32, &s).unwrap();
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("m1_N2_64x32", |b| {
        b.iter(|| oracle_matrix(1, 2, &grid, &OracleConfig::default()))
    });
    g.finish();
}

criterion_group!(benches, ring_functions, assembly_and_spectrum, oracle);
criterion_main!(benches);
