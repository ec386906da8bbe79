use cknet_core::lattice::{flatness_residual, gauge, gauge_frame, integrate_frame, FLAT_TOL};
use cknet_core::quat::Quat;
use cknet_core::{CJet, ConnectionFamily, Domain, Error, Grid, QJet};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn vertex_jet(j: i32, k: i32, t: f64) -> QJet {
    let a = 0.3 * j as f64 - 0.2 * k as f64;
    let e = CJet::exp_linear(C64::new(0.1 * k as f64, 0.2), t);
    QJet::from_entries(e, CJet::real(a), CJet::real(-a), e.recip() * CJet::real(1.0 + a * a))
}

fn pure_gauge(d: Domain, t: f64) -> ConnectionFamily {
    let g = Grid::from_fn(d, |j, k| vertex_jet(j, k, t));
    gauge(&ConnectionFamily::identity(d), &g).unwrap()
}

#[test]
fn pure_gauge_is_flat() {
    let d = Domain::new(-2, 3, 0, 4).unwrap();
    let c = pure_gauge(d, 0.2);
    assert!(flatness_residual(&c) < 1e-13);
    let f = integrate_frame(&c, *Grid::from_fn(d, |j, k| vertex_jet(j, k, 0.2)).get(-2, 0), FLAT_TOL).unwrap();
    for (j, k) in d.vertices() {
        assert!(f.get(j, k).max_diff(&vertex_jet(j, k, 0.2)) < 1e-12);
    }
}

#[test]
fn broken_edge_is_detected() {
    let d = Domain::new(0, 2, 0, 2).unwrap();
    let mut c = pure_gauge(d, 0.0);
    let bent = *c.l(1, 1) * QJet::constant(Quat::diag(C64::new(1.0, 0.1), C64::new(1.0, -0.1)));
    c.set_l(1, 1, bent);
    assert!(matches!(integrate_frame(&c, QJet::identity(), FLAT_TOL), Err(Error::NotFlat { .. })));
}

#[test]
fn transpose_swaps_directions() {
    let d = Domain::new(0, 3, 0, 1).unwrap();
    let c = pure_gauge(d, 0.0);
    let t = c.transpose();
    assert_eq!(t.domain(), d.transpose());
    assert_eq!(t.l(0, 2), c.m(2, 0));
}

proptest! {
    #[test]
    fn gauge_keeps_flatness(t in -0.5..0.5f64, s in 0.1..2.0f64) {
        let d = Domain::new(0, 3, 0, 3).unwrap();
        let c = pure_gauge(d, t);
        let g = Grid::from_fn(d, |j, k| QJet::constant(Quat::diag(C64::from(s + j as f64), C64::from(1.0 / (s + k as f64)))));
        let gc = gauge(&c, &g).unwrap();
        prop_assert!(flatness_residual(&gc) < 1e-11);
        let f = integrate_frame(&c, QJet::identity(), FLAT_TOL).unwrap();
        let gf = gauge_frame(&f, &g).unwrap();
        let h = integrate_frame(&gc, *gf.get(0, 0), FLAT_TOL).unwrap();
        for (j, k) in d.vertices() {
            prop_assert!(h.get(j, k).max_diff(gf.get(j, k)) < 1e-10);
        }
    }
}
