use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use holocover::{
    covering_leray_reconstruct, leray_reconstruct, restriction, singular_planar_integral, AnnulusPair,
    CVector, CardinalKernel, CoveringLeray, CoveringSpec, Domain, LeraySection, PlanarDomain, PlanarResolution,
    RepresentationTask, Weight, C64,
};

fn disk(c: &mut Criterion) {
    let z = CVector::scalar(C64::new(0.3, 0.1));
    let mut group = c.benchmark_group("leray-disk");
    for n in [64, 256] {
        let task = RepresentationTask::new(Domain::unit_disk(), LeraySection::bochner_martinelli(), n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &task, |b, task| {
            b.iter(|| leray_reconstruct(|v| v[0].exp(), task, black_box(&z)).unwrap())
        });
    }
    group.finish();
}

fn polydisk(c: &mut Criterion) {
    let mut group = c.benchmark_group("leray-polydisk");
    for dim in [2, 3] {
        let task = RepresentationTask::new(Domain::unit_polydisk(dim), LeraySection::polydisk_averaged(), 24).unwrap();
        let z = CVector::new(vec![C64::new(0.2, -0.1); dim]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &task, |b, task| {
            b.iter(|| leray_reconstruct(|v| v.components().iter().product(), task, black_box(&z)).unwrap())
        });
    }
    group.finish();
}

fn planar(c: &mut Criterion) {
    let domain = PlanarDomain::Disk {
        center: C64::new(0.0, 0.0),
        radius: 1.0,
    };
    let z = CVector::scalar(C64::new(0.4, 0.2));
    let mut group = c.benchmark_group("singular-planar");
    for mesh in [32, 128] {
        let res = PlanarResolution::mesh(mesh);
        group.bench_with_input(BenchmarkId::from_parameter(mesh), &res, |b, res| {
            b.iter(|| singular_planar_integral(|w| w.conj() / (w - z[0]), &domain, black_box(&z), res).unwrap())
        });
    }
    group.finish();
}

fn covering(c: &mut Criterion) {
    let annulus = AnnulusPair::new(0.8, 1.3, 0.6, 1.5).unwrap();
    let z = C64::new(1.0, 0.1);
    let mut group = c.benchmark_group("covering-leray");
    let cases = [
        ("finite-3", CoveringSpec::finite(3, annulus).unwrap(), 1, CardinalKernel::Sinc),
        ("strip-8", CoveringSpec::strip(annulus), 8, CardinalKernel::GaussSinc { width: 2.0 }),
    ];
    for (name, cov, window, kernel) in cases {
        let engine = CoveringLeray::new(&cov, 128, window, kernel).unwrap();
        let x = cov.fiber_point(z, 0).unwrap();
        let g = |y: C64| (0.5 * y).exp();
        // the per-node operators are built lazily, so warm them first
        engine
            .reconstruct(|xi| restriction(g, &cov, xi, window, &Weight::constant()), x, z)
            .unwrap();
        group.bench_function(name, |b| {
            b.iter(|| {
                covering_leray_reconstruct(
                    &engine,
                    |xi| restriction(g, &cov, xi, window, &Weight::constant()),
                    black_box(x),
                    z,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, disk, polydisk, planar, covering);
criterion_main!(benches);
