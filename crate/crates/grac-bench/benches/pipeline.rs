use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grac_bench::{paper_problem, refined_mesh};
use grac_core::adaptivity::{adapt_loop, reference_solution, AdaptConfig};
use grac_core::efficiency::audit;
use grac_core::newton::NewtonOptions;
use grac_core::{CoupledProblem, EstimatorReport, StabilityChoice};
use std::hint::black_box;

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    for l in [64, 256] {
        let p = paper_problem(l);
        g.bench_with_input(BenchmarkId::new("atomistic", l), &p, |b, p| {
            b.iter(|| reference_solution(black_box(p), NewtonOptions::default()).unwrap())
        });
        let m = refined_mesh(&p, 3);
        let cp = CoupledProblem::new(p.lattice, m, p.model.clone(), p.force.clone()).unwrap();
        g.bench_with_input(BenchmarkId::new("coupled", l), &cp, |b, cp| {
            b.iter(|| cp.solve_ac(None, NewtonOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn estimators(c: &mut Criterion) {
    let p = paper_problem(128);
    let m = refined_mesh(&p, 3);
    let cp = CoupledProblem::new(p.lattice, m, p.model.clone(), p.force.clone()).unwrap();
    let (s, _) = cp.solve_ac(None, NewtonOptions::default()).unwrap();
    let ya = reference_solution(&p, NewtonOptions::default()).unwrap();
    c.bench_function("estimator_report", |b| {
        b.iter(|| {
            EstimatorReport::compute(black_box(&cp), black_box(&s), StabilityChoice::Surrogate)
                .unwrap()
        })
    });
    c.bench_function("efficiency_audit", |b| {
        b.iter(|| audit(black_box(&ya), &cp, &s).unwrap())
    });
}

fn adaptive(c: &mut Criterion) {
    let p = paper_problem(128);
    let cfg = AdaptConfig::default();
    let mut g = c.benchmark_group("adapt_loop");
    g.sample_size(10);
    g.bench_function("residual_l128", |b| {
        b.iter(|| adapt_loop(black_box(&p), &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, solvers, estimators, adaptive);
criterion_main!(benches);
