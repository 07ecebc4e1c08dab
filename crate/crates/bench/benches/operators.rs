use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hodge_curvature::curvature::{evaluate, Evaluator};
use hodge_curvature::dolbeault::{green, laplacian, Which};
use hodge_curvature::forms::PQForm;
use hodge_curvature::oracle::{curvature_by_differences, DEFAULT_STEP};
use hodge_curvature_bench::{abelian_surface, base, elliptic, theta};

fn fourier_operators(c: &mut Criterion) {
    let point = base(&abelian_surface(4));
    let form = PQForm::random(point.space(), 1, 1, 1).unwrap();
    c.bench_function("fourier laplacian (1,1) surface K=4", |b| b.iter(|| laplacian(black_box(&form), Which::Dbar).unwrap()));
    c.bench_function("fourier green (1,1) surface K=4", |b| b.iter(|| green(black_box(&form), Which::Dbar).unwrap()));
}

fn grid_operators(c: &mut Criterion) {
    let point = base(&theta(1, 64));
    let form = PQForm::random(point.space(), 0, 1, 2).unwrap();
    c.bench_function("grid laplacian (0,1) theta N=64", |b| b.iter(|| laplacian(black_box(&form), Which::Dbar).unwrap()));
}

fn evaluators(c: &mut Criterion) {
    let family = elliptic(8);
    let point = base(&family);
    c.bench_function("main evaluator elliptic (1,0) K=8", |b| b.iter(|| evaluate(Evaluator::Main, black_box(&point), 1, 0).unwrap()));
    c.bench_function("oracle elliptic (1,0) K=8", |b| b.iter(|| curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, 1, 0).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = fourier_operators, grid_operators, evaluators
}
criterion_main!(benches);
