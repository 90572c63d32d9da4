use criterion::{black_box, criterion_group, criterion_main, Criterion};

use fei_core::analysis::{counterexample_search, distance_to_family, SearchConfig};
use fei_core::defect::{cocycle_residual, fe_defect_sup};
use fei_core::domain::grid_d3;
use fei_core::measures::params_from_fit;
use fei_core::recursive::cumulative_bound_check;
use fei_core::{Alpha, EvaluableFunction, FamilyMember, GridSpec, MeasureSequence, SolutionParams};

fn perturbed(alpha: Alpha) -> EvaluableFunction {
    EvaluableFunction::BasisPerturbed {
        base: FamilyMember::new(SolutionParams { c: 1.0, d: 0.5 }, alpha),
        coefficients: vec![1e-3, -5e-4, 2e-4],
    }
}

fn defect_sweep(c: &mut Criterion) {
    let alpha = Alpha::new(-1.0).unwrap();
    let f = perturbed(alpha);
    let spec = GridSpec::new(200, 1e-3).unwrap();
    c.bench_function("fe_defect_sup m=200", |b| {
        b.iter(|| fe_defect_sup(black_box(&f), alpha, &spec).unwrap())
    });
    c.bench_function("distance_to_family m=200", |b| {
        b.iter(|| distance_to_family(black_box(&f), alpha, &spec).unwrap())
    });
}

fn cocycle(c: &mut Criterion) {
    let alpha = Alpha::new(-2.0).unwrap();
    let f = perturbed(alpha);
    let pts = grid_d3(&GridSpec::new(20, 1e-3).unwrap()).unwrap();
    c.bench_function("cocycle_residual d3 m=20", |b| {
        b.iter(|| {
            pts.iter()
                .map(|q| cocycle_residual(&f, alpha, q).unwrap().value)
                .fold(0.0f64, f64::max)
        })
    });
}

fn recursion(c: &mut Criterion) {
    let alpha = Alpha::new(-1.0).unwrap();
    let seq = MeasureSequence::new(
        EvaluableFunction::family(SolutionParams { c: 1.0, d: 2.0 }, alpha),
        alpha,
    );
    let params = params_from_fit(1.0, 2.0, alpha);
    c.bench_function("cumulative_bound_check n<=6 m=16", |b| {
        b.iter(|| cumulative_bound_check(&seq, params, 6, 16).unwrap())
    });
}

fn search(c: &mut Criterion) {
    let mut cfg = SearchConfig::new(Alpha::new(-1.0).unwrap(), 1e-3);
    cfg.restarts = 2;
    cfg.max_iters = 100;
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    group.bench_function("counterexample_search 2x100", |b| {
        b.iter(|| counterexample_search(black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, defect_sweep, cocycle, recursion, search);
criterion_main!(benches);
