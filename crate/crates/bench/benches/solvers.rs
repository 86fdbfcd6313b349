use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use fw_srde::heat_kernel::kernel_inequality_suite;
use fw_srde::noise::noise_row;
use fw_srde::rate::EndpointObjective;
use fw_srde::scheme::Stepper;
use fw_srde::skeleton::{skeleton_path, solve_skeleton_lipschitz};
use fw_srde::spde::solve_spde;
use fw_srde::{builtin, builtin_control, EndpointConstraint, Field, ForcingFilter, GridSpec, SkeletonOptions, SolveConfig};

fn scheme(c: &mut Criterion) {
    let g = GridSpec::default();
    let mut stepper = Stepper::new(g, ForcingFilter::default());
    let u = Field::from_fn(g, |x| (-x * x).exp()).values;
    let forcing = vec![0.01; g.space_points];
    let mut out = vec![0.0; g.space_points];
    c.bench_function("step/512", |b| b.iter(|| stepper.step(black_box(&u), black_box(&forcing), &mut out)));
    let mut row = vec![0.0; g.space_points];
    c.bench_function("noise_row/512", |b| b.iter(|| noise_row(&g, 1, 0, black_box(17), &mut row)));
}

fn spde(c: &mut Criterion) {
    let g = GridSpec::default();
    let cfg = SolveConfig::new(builtin("ulogu_bounded_sigma").unwrap(), g, 0.1).with_seed(3, 0);
    c.bench_function("solve_spde/ulogu/100x512", |b| b.iter(|| solve_spde(black_box(&cfg)).unwrap()));
}

fn skeleton(c: &mut Criterion) {
    let g = GridSpec::default();
    let h = builtin_control("gaussian", g).unwrap();
    let u0 = Field::from_fn(g, |x| 0.5 * (-x * x).exp());
    let linear = builtin("linear").unwrap();
    let ulogu = builtin("ulogu_bounded_sigma").unwrap();
    let opts = SkeletonOptions::default();
    c.bench_function("skeleton/picard/linear", |b| b.iter(|| solve_skeleton_lipschitz(&linear, &u0, &h, &opts).unwrap()));
    c.bench_function("skeleton/recursion/ulogu", |b| b.iter(|| skeleton_path(&ulogu, &u0, &h, ForcingFilter::default()).unwrap()));
}

fn adjoint(c: &mut Criterion) {
    let g = GridSpec::default();
    let set = builtin("ulogu_bounded_sigma").unwrap();
    let u0 = Field::from_fn(g, |x| 0.5 * (-x * x).exp());
    let ev = EndpointConstraint { x0: 0.0, a: 1.0, t: 1.0 };
    let h = builtin_control("pulse", g).unwrap();
    let mut obj = EndpointObjective::new(&set, &u0, &ev, 100.0, ForcingFilter::default()).unwrap();
    c.bench_function("rate/gradient/ulogu", |b| b.iter(|| obj.gradient(black_box(&h)).unwrap()));
}

fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("heat_kernel");
    group.sample_size(10);
    group.bench_function("suite/100", |b| b.iter(|| kernel_inequality_suite(100, 1).unwrap()));
    group.finish();
}

criterion_group!(benches, scheme, spde, skeleton, adjoint, kernel);
criterion_main!(benches);
