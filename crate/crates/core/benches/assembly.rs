use asgs_core::model::PhysicalParams;
use asgs_core::stab::SubscaleField;
use asgs_core::{Exec, FieldState, Mesh, Method, Solver, SolverConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    let params = PhysicalParams::one_way(1000.0, 1.5);
    for n in [20, 40] {
        let mesh = Mesh::unit_square(n).unwrap();
        let dt = 1.0 / n as f64;
        let u0 = FieldState::interpolate_exact(&mesh, 0.0);
        let it = FieldState {
            t: dt,
            ..u0.clone()
        };
        let subs = SubscaleField::zeros(mesh.num_elements());
        for exec in [Exec::Sequential, Exec::Parallel] {
            let cfg = SolverConfig {
                exec,
                ..SolverConfig::new(Method::AsgsDynamic, 1.0, dt, 1.0)
            };
            let solver = Solver::new(&mesh, params, cfg).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &n, |b, _| {
                b.iter(|| solver.assemble(&u0, &it, &subs).unwrap())
            });
        }
    }
    group.finish();
}

fn time_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(10);
    let params = PhysicalParams::one_way(1000.0, 1.5);
    let n = 20;
    let mesh = Mesh::unit_square(n).unwrap();
    let u0 = FieldState::interpolate_exact(&mesh, 0.0);
    let subs = SubscaleField::zeros(mesh.num_elements());
    for exec in [Exec::Sequential, Exec::Parallel] {
        let cfg = SolverConfig {
            exec,
            ..SolverConfig::new(Method::AsgsDynamic, 1.0, 0.05, 1.0)
        };
        let solver = Solver::new(&mesh, params, cfg).unwrap();
        group.bench_function(BenchmarkId::new(format!("{exec:?}"), n), |b| {
            b.iter(|| solver.step(&u0, &subs, 0.05).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, time_step);
criterion_main!(benches);
