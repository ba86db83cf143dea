//! Assembly and linear-algebra kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dpp_bench::{problem, system};
use dpp_core::assembly::{assemble_with, monolithic_view, AssemblyOptions};
use dpp_core::linalg::{amg_setup, amg_vcycle, ilu0, AmgOptions, Preconditioner};
use dpp_core::{CellKind, Field, Formulation};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for f in Formulation::ALL {
        let (mesh, bcs, params) = problem(CellKind::Tri, 32);
        for workers in [1, 4] {
            let opts = AssemblyOptions { workers: Some(workers), ..AssemblyOptions::default() };
            g.bench_with_input(BenchmarkId::new(f.name(), workers), &opts, |b, opts| {
                b.iter(|| assemble_with(f, &mesh, &params, &bcs, opts).unwrap())
            });
        }
    }
    g.finish();
}

fn sparse_kernels(c: &mut Criterion) {
    let s = system(Formulation::CgVms, CellKind::Tri, 64);
    let (k, f) = monolithic_view(&s).unwrap();
    c.bench_function("spmv/cgvms_tri_64", |b| b.iter(|| k.spmv(black_box(&f)).unwrap()));

    let pressure = s.block(Field::P1, Field::P1).unwrap();
    let rhs = s.rhs(Field::P1).to_vec();
    c.bench_function("ilu0_setup/p1_block", |b| b.iter(|| ilu0(black_box(pressure)).unwrap()));
    let ilu = ilu0(pressure).unwrap();
    let mut z = vec![0.0; rhs.len()];
    c.bench_function("ilu0_apply/p1_block", |b| b.iter(|| ilu.apply(black_box(&rhs), &mut z)));
    c.bench_function("amg_setup/p1_block", |b| {
        b.iter(|| amg_setup(black_box(pressure), &AmgOptions::default()).unwrap())
    });
    let amg = amg_setup(pressure, &AmgOptions::default()).unwrap();
    c.bench_function("amg_vcycle/p1_block", |b| b.iter(|| amg_vcycle(&amg, black_box(&rhs))));
}

criterion_group!(benches, assembly, sparse_kernels);
criterion_main!(benches);
