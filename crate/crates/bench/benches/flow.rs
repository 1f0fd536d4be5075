use criterion::{black_box, criterion_group, criterion_main, Criterion};
use resolvent_core::ode::OdeOptions;
use resolvent_core::semigroup::FlowField;
use resolvent_core::{exponential_formula, flow, Complex64, Generator, SolverOptions};
use resolvent_bench::fixture;

fn flows(c: &mut Criterion) {
    let ode = OdeOptions::default();
    let koebe = Generator::koebe();
    let gen = fixture();
    let z = Complex64::new(0.5, 0.3);
    let mut group = c.benchmark_group("flow");
    group.bench_function("koebe_t1", |b| {
        b.iter(|| flow(&FlowField::Generator(&koebe), Complex64::new(1.0, 0.0), black_box(z), &ode))
    });
    group.bench_function("atoms3_ray_t5", |b| {
        b.iter(|| flow(&FlowField::Generator(&gen), Complex64::from_polar(5.0, 0.3), black_box(z), &ode))
    });
    group.sample_size(20);
    group.bench_function("resolvent_semigroup_r10_t5", |b| {
        b.iter(|| flow(&FlowField::resolvent(&gen, 10.0), Complex64::new(5.0, 0.0), black_box(z), &ode))
    });
    group.finish();
}

fn exponential(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let koebe = Generator::koebe();
    c.bench_function("exponential_formula_n256", |b| {
        b.iter(|| exponential_formula(&koebe, 1.0, black_box(Complex64::new(0.5, 0.0)), 256, &opts))
    });
}

criterion_group!(benches, flows, exponential);
criterion_main!(benches);
