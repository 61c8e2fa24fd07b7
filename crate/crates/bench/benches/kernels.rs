use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cbmlab_core::duality::indicator_profile;
use cbmlab_core::particles::{step_cbm, CbmNoise, ParticleSystemState};
use cbmlab_core::trace::{make_cantor, sausage_measure};
use cbmlab_core::{
    solve_pde, solve_spde, AtomicMeasure, Boundary, InitialTrace, IntervalSet, NoiseLaw,
    PdeParams, SpdeParams,
};

fn pde(c: &mut Criterion) {
    let trace = InitialTrace::singular(IntervalSet::point(0.0));
    let p = PdeParams::for_time_scale(0.1, 0.1);
    c.bench_function("pde point to t=0.1", |b| {
        b.iter(|| solve_pde(black_box(&trace), &p, &[0.1]).unwrap())
    });
}

fn cbm(c: &mut Criterion) {
    let noise = CbmNoise::new(1);
    let start = ParticleSystemState::from_measure(&AtomicMeasure::dirac(0.0, 500), 1e-9, &noise).unwrap();
    c.bench_function("cbm 100 steps from 500", |b| {
        b.iter(|| {
            let mut s = start.clone();
            for _ in 0..100 {
                step_cbm(&mut s, 1e-4, 6.0, &noise);
            }
            s.alive()
        })
    });
}

fn spde(c: &mut Criterion) {
    let params = SpdeParams {
        dx: 0.05,
        dt: 0.00125,
        domain: (-4.0, 4.0),
        boundary: Boundary::Periodic,
        seed: 1,
        noise: NoiseLaw::Binomial,
    };
    let f0 = indicator_profile(&params, (-1.0, 1.0), 0.1);
    c.bench_function("spde to t=0.25", |b| {
        b.iter(|| solve_spde(black_box(&f0), &params, &[0.25]).unwrap())
    });
}

fn sausage(c: &mut Criterion) {
    let set = make_cantor(12).unwrap();
    c.bench_function("sausage cantor depth 12", |b| {
        b.iter(|| sausage_measure(black_box(&set), 1e-4).unwrap())
    });
}

criterion_group!(benches, pde, cbm, spde, sausage);
criterion_main!(benches);
