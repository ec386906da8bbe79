use std::f64::consts::PI;

use cknet_core::connect::{
    build_ck_connection, build_connection, closing_residual, helix_check, invariance_residual, reconstruct,
    reference_net, Case,
};
use cknet_core::lattice::flatness_residual;
use cknet_core::nets::rigid_align;
use cknet_core::revolution::{profile_elliptic, EllipticParams, Profile};
use proptest::prelude::*;

fn elliptic(kappa: f64, k_sign: i32) -> Profile {
    let params = EllipticParams::standard(kappa, 4, 0.3).unwrap();
    profile_elliptic(&params, k_sign, params.safe_range(k_sign)).unwrap()
}

#[test]
fn case_selection() {
    assert_eq!(Case::for_profile(&elliptic(0.6, -1)).unwrap(), Case::Three);
    assert_eq!(Case::for_profile(&elliptic(1.4, 1)).unwrap(), Case::Two);
    assert_eq!(Case::for_profile(&elliptic(0.6, 1)).unwrap(), Case::One);
    assert_eq!(Case::Three.xi(), 2.0);
    assert_eq!(Case::Two.xi(), -2.0);
}

#[test]
fn rotation_invariance() {
    for (p, case) in [(elliptic(0.6, -1), Case::Three), (elliptic(1.4, 1), Case::Two)] {
        let (conn, _) = build_connection(&p, PI / 3.0, case, 5, 0.0).unwrap();
        assert!(invariance_residual(&conn) < 1e-13);
    }
}

#[test]
fn spherical_reconstruction() {
    for (p, case) in [(elliptic(1.4, 1), Case::Two), (elliptic(0.6, 1), Case::One)] {
        let (conn, _) = build_connection(&p, PI / 4.0, case, 5, 0.0).unwrap();
        let net = reconstruct(&conn, case).unwrap();
        let target = reference_net(&p, PI / 4.0, 5, case).unwrap();
        assert!(rigid_align(&net, &target).unwrap().residual < 1e-9);
    }
}

#[test]
fn helix_axis_spacing() {
    let p = elliptic(1.0, -1);
    let (conn, _) = build_ck_connection(&p, PI / 3.0, 8, 0.3).unwrap();
    let fit = helix_check(&conn, 0, 2.0).unwrap();
    assert!(fit.residual < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flat_for_every_parameter(kappa in 0.3..1.7f64, t in -0.8..0.8f64, theta in 0.2..2.5f64) {
        let p = elliptic(kappa, -1);
        let (conn, data) = build_ck_connection(&p, theta, 3, t).unwrap();
        prop_assert!(flatness_residual(&conn) < 1e-11);
        prop_assert!(data.compatibility_residuals().iter().all(|r| *r < 1e-11));
    }

    #[test]
    fn closing_for_rational_angles(k0 in 3u32..10, kappa in 0.3..1.7f64) {
        let p = elliptic(kappa, -1);
        let (conn, _) = build_ck_connection(&p, 2.0 * PI / k0 as f64, 2, 0.0).unwrap();
        prop_assert!(closing_residual(&conn, k0) < 1e-10);
    }
}
