use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use curvdecay::abp::run_abp;
use curvdecay::inequality::RadialTestFunction;
use curvdecay::model::{avr_radii, bishop_gromov_ratio, ModelManifold};
use curvdecay::ode::fundamental_pair;
use curvdecay::profiles::CurvatureProfile;

fn ode(c: &mut Criterion) {
    let euler = CurvatureProfile::euler(2.0).unwrap();
    let rational = CurvatureProfile::rational(1.0).unwrap();
    c.bench_function("fundamental_pair/euler/1e4", |b| {
        b.iter(|| fundamental_pair(black_box(&euler), 1e4, 1e-11).unwrap())
    });
    c.bench_function("fundamental_pair/rational/1e4", |b| {
        b.iter(|| fundamental_pair(black_box(&rational), 1e4, 1e-11).unwrap())
    });
}

fn volume_ratio(c: &mut Criterion) {
    let warp = CurvatureProfile::rational(0.5).unwrap();
    let p = CurvatureProfile::rational(1.0).unwrap();
    let m = ModelManifold::comparison(2, &warp, 1e3).unwrap();
    let radii = avr_radii(1e3);
    c.bench_function("bishop_gromov/rational/1e3", |b| {
        b.iter(|| bishop_gromov_ratio(black_box(&m), &p, &radii).unwrap())
    });
}

fn abp(c: &mut Criterion) {
    let one = RadialTestFunction::Constant { value: 1.0 };
    let flat = ModelManifold::euclidean(2).unwrap();
    let zero = CurvatureProfile::zero();
    let p = CurvatureProfile::rational(0.5).unwrap();
    let curved = ModelManifold::comparison(2, &p, 100.0).unwrap();
    let mut g = c.benchmark_group("abp");
    g.sample_size(10);
    g.bench_function("flat", |b| b.iter(|| run_abp(black_box(&flat), &zero, 1.0, &one, 10.0).unwrap()));
    g.bench_function("rational", |b| b.iter(|| run_abp(black_box(&curved), &p, 1.0, &one, 10.0).unwrap()));
    g.finish();
}

criterion_group!(benches, ode, volume_ratio, abp);
criterion_main!(benches);
