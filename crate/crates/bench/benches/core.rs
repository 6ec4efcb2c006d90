use criterion::{criterion_group, criterion_main, Criterion};
use hartogs::hartogs::{coefficients, radius_field, ExpansionConfig, RadiusFieldConfig, ZLattice};
use hartogs::lemniscate::{lemma2_construct, Disk, RationalFunction};
use hartogs::polycurve::monodromy;
use hartogs::singular::{capacity, CapacityOptions, CompactSet};
use hartogs::C64;
use hartogs_bench::{curve, function};

fn expansion(c: &mut Criterion) {
    let graph = curve("eta - xi^2");
    let f = function("1/(1 - xi/2)");
    let g = RationalFunction::identity();
    c.bench_function("coefficients k_max=30", |b| {
        b.iter(|| coefficients(&f, &graph, &g, 1.8, &[], ExpansionConfig { k_max: 30, ..Default::default() }).unwrap())
    });
    let line = curve("eta - xi");
    let pole = function("1/(w - (2 + z))");
    let lattice = ZLattice::real_line(-0.5, 0.1, 11).unwrap();
    let cfg = RadiusFieldConfig { expansion: ExpansionConfig { k_max: 60, ..Default::default() }, ..Default::default() };
    c.bench_function("radius_field 11 points", |b| b.iter(|| radius_field(&pole, &line, &g, 1.0, &lattice, cfg).unwrap()));
}

fn lemniscate(c: &mut Criterion) {
    let sigma = [C64::new(2.0, 0.0), C64::new(-1.0, 2.5), C64::new(0.5, -3.0)];
    let k = [Disk::new(C64::new(0.0, 0.0), 0.8)];
    c.bench_function("lemma2_construct 3 points", |b| b.iter(|| lemma2_construct(&sigma, &k, 24).unwrap()));
}

fn curves_and_capacity(c: &mut Criterion) {
    let cubic = curve("eta^3 - xi*(xi - 1)");
    c.bench_function("monodromy cubic", |b| b.iter(|| monodromy(&cubic).unwrap()));
    let set = CompactSet::Disks { disks: vec![Disk::new(C64::new(0.0, 0.0), 1.0)] };
    let opts = CapacityOptions::default();
    c.bench_function("capacity disk n=32", |b| b.iter(|| capacity(&set, &opts).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = expansion, lemniscate, curves_and_capacity
}
criterion_main!(benches);
