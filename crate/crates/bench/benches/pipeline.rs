use std::f64::consts::PI;
use std::hint::black_box;

use cknet_core::backlund::{self, AlphaSlice, BacklundParams, KEdge, Transform};
use cknet_core::connect::{self, HsLaxData};
use cknet_core::revolution::{self, profile_elliptic, EllipticParams, Profile};
use cknet_core::{lattice, nets, Domain, QJet};
use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64 as C64;

fn profile(kappa: f64, j0: i32) -> Profile {
    let params = EllipticParams::standard(kappa, j0, 0.3).unwrap();
    profile_elliptic(&params, -1, params.safe_range(-1)).unwrap()
}

fn hs(kappa: f64, j0: i32) -> HsLaxData {
    let p = profile(kappa, j0);
    let (conn, data) = connect::build_ck_connection(&p, PI / 3.0, 2, 0.0).unwrap();
    connect::gauge_to_hs(&conn, &data).unwrap().hs
}

fn surfaces(c: &mut Criterion) {
    let p = profile(0.6, 15);
    c.bench_function("rcnet 31x40", |b| b.iter(|| revolution::build_rcnet(black_box(&p), PI / 20.0, 40).unwrap()));
    c.bench_function("connection + frames + sym 31x40", |b| {
        b.iter(|| {
            let (conn, _) = connect::build_ck_connection(black_box(&p), PI / 20.0, 40, 0.0).unwrap();
            let f = lattice::integrate_frame(&conn, QJet::identity(), lattice::FLAT_TOL).unwrap();
            nets::sym(&f, 2.0, 0.0).unwrap()
        })
    });
}

fn transforms(c: &mut Criterion) {
    let h = hs(0.6, 15);
    let d = Domain::new(h.start, h.j_end(), 0, 39).unwrap();
    let single = BacklundParams::single(1.2, 0.4);
    c.bench_function("propagate 30x40", |b| {
        b.iter(|| backlund::propagate(black_box(&h), &single, Transform::Tilde, d).unwrap())
    });
    c.bench_function("linearize 30x40", |b| {
        b.iter(|| backlund::linearize(black_box(&h), &single, Transform::Tilde, d).unwrap())
    });
    let frames = backlund::base_frames(&h, d, 0.0).unwrap();
    let p = BacklundParams::condition_c(C64::new(PI / 2.0, 0.5), C64::new(1.0, 0.0));
    let st = backlund::propagate(&h, &p, Transform::Tilde, d).unwrap();
    let sh = backlund::propagate(&h, &p, Transform::Hat, d).unwrap();
    c.bench_function("double transform 30x40", |b| {
        b.iter(|| backlund::double_backlund(&frames, black_box(&h), &p, &st, &sh, 0.0).unwrap())
    });
    let small = hs(0.6, 4);
    c.bench_function("periodic alpha search", |b| {
        b.iter(|| {
            backlund::find_periodic_alpha(black_box(&small), 9, 1, KEdge::B, AlphaSlice::Imaginary { y_max: 3.0 })
                .unwrap()
        })
    });
}

criterion_group!(benches, surfaces, transforms);
criterion_main!(benches);
