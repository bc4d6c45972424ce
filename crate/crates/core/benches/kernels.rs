use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use torusflow::diagnostics::{energy_with, enstrophy};
use torusflow::eigenmodes::OrbitSpec;
use torusflow::par::{map_indices, Execution};
use torusflow::perturbation::{band_limited, perturbed_eigenstate, PerturbationSpec};
use torusflow::rearrange::{burton_iterate_with, RearrangementClass};
use torusflow::solver::{Solver, SolverConfig, TimeStep};
use torusflow::spectral::SpectralOps;
use torusflow::TorusGeometry;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn fft_round_trip(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    let g = TorusGeometry::new(1.0, 2.0, 256, 256).unwrap();
    let f = band_limited(g, 1, 40, 1).unwrap();
    for (name, exec) in POLICIES {
        let ops = SpectralOps::with_execution(g, exec);
        group.bench_function(BenchmarkId::new(name, 256), |b| {
            b.iter(|| ops.inverse(&ops.forward(black_box(&f)).unwrap()).unwrap())
        });
    }
    group.finish();
}

fn euler_rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("euler_rhs");
    let g = TorusGeometry::new(1.0, 2.0, 256, 256).unwrap();
    let orbit = OrbitSpec::axis2(g, 1.0, 0.0).unwrap();
    let (w0, _) = perturbed_eigenstate(&orbit, &PerturbationSpec::new(0.05, 1)).unwrap();
    for (name, exec) in POLICIES {
        let mut cfg = SolverConfig::new(g, TimeStep::Cfl(0.5), 1.0);
        cfg.execution = exec;
        let solver = Solver::new(cfg).unwrap();
        group.bench_function(BenchmarkId::new(name, 256), |b| {
            b.iter(|| solver.rhs(black_box(&w0)).unwrap())
        });
    }
    group.finish();
}

fn burton(c: &mut Criterion) {
    let mut group = c.benchmark_group("burton_iteration");
    group.sample_size(10);
    let g = TorusGeometry::square(1.0, 64, 64).unwrap();
    let spec = OrbitSpec::square_pair(g, 2.0, 1.0, 0.0, 0.0).unwrap();
    let class = RearrangementClass::from_eigenstate(&spec).unwrap();
    let start = class.random_member(3);
    for (name, exec) in POLICIES {
        let ops = SpectralOps::with_execution(g, exec);
        group.bench_function(BenchmarkId::new(name, 64), |b| {
            b.iter(|| burton_iterate_with(&ops, &class, black_box(&start), 20, 0.0).unwrap())
        });
    }
    group.finish();
}

fn inequality_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("energy_enstrophy_batch");
    group.sample_size(10);
    let g = TorusGeometry::new(1.0, 2.0, 64, 64).unwrap();
    let fields: Vec<_> = (0..64).map(|s| band_limited(g, 1, 20, s).unwrap()).collect();
    for (name, exec) in POLICIES {
        let ops = SpectralOps::new(g);
        group.bench_function(BenchmarkId::new(name, fields.len()), |b| {
            b.iter(|| {
                map_indices(exec, fields.len(), |i| {
                    energy_with(&ops, &fields[i]).unwrap() / enstrophy(&fields[i])
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, fft_round_trip, euler_rhs, burton, inequality_batch);
criterion_main!(benches);
