use std::f64::consts::PI;

use cknet_core::nets;
use cknet_core::revolution::{
    build_rcnet, elliptic_k, gauss_from_profile, jacobi, profile_elliptic, profile_hyp, profile_trig, EllipticParams,
    ProfileOptions,
};
use cknet_core::Error;
use proptest::prelude::*;

#[test]
fn quarter_period() {
    for kappa in [0.3, 0.6, 0.9] {
        let k = elliptic_k(kappa).unwrap();
        let (sn, cn, dn) = jacobi(k, kappa).unwrap();
        assert!((sn - 1.0).abs() < 1e-13 && cn.abs() < 1e-13);
        assert!((dn - (1.0 - kappa * kappa).sqrt()).abs() < 1e-13);
    }
}

#[test]
fn degenerate_modulus_limits() {
    let (sn, cn, dn) = jacobi(0.7, 0.0).unwrap();
    assert!((sn - 0.7f64.sin()).abs() < 1e-15 && (cn - 0.7f64.cos()).abs() < 1e-15 && dn == 1.0);
    let (sn, cn, dn) = jacobi(0.7, 1.0).unwrap();
    assert!((sn - 0.7f64.tanh()).abs() < 1e-14);
    assert!((cn - 1.0 / 0.7f64.cosh()).abs() < 1e-14 && (dn - cn).abs() < 1e-14);
}

#[test]
fn invalid_profiles_are_rejected() {
    assert!(matches!(profile_hyp(&[0.4; 8], 0.3, 0.3, &ProfileOptions::default()), Err(Error::InvalidProfile(_))));
    assert!(matches!(profile_trig(&[], 1.0, 0.0, &ProfileOptions::default()), Err(Error::InvalidProfile(_))));
    let p = profile_trig(&[0.1; 3], 0.6, 0.0, &ProfileOptions::default()).unwrap();
    assert!(build_rcnet(&p, PI, 4).is_err());
}

#[test]
fn hyperbolic_and_trigonometric_curvature() {
    let p = profile_hyp(&[-0.05; 10], 0.0, 0.5, &ProfileOptions::default()).unwrap();
    for j in p.j_start..p.j_end() {
        assert!((gauss_from_profile(&p, j).unwrap() + 1.0).abs() < 1e-12);
    }
    let p = profile_trig(&[0.1; 10], 0.6, 1.2, &ProfileOptions::default()).unwrap();
    for j in p.j_start..p.j_end() {
        assert!((gauss_from_profile(&p, j).unwrap() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobi_identities(u in -6.0..6.0f64, kappa in 0.05..1.8f64) {
        let (sn, cn, dn) = jacobi(u, kappa).unwrap();
        prop_assert!((sn * sn + cn * cn - 1.0).abs() < 1e-12);
        prop_assert!((dn * dn + kappa * kappa * sn * sn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn elliptic_profiles_have_constant_curvature(kappa in 0.2..1.8f64, j0 in 3..8i32, sign in prop::bool::ANY) {
        let k_sign = if sign { 1 } else { -1 };
        let params = EllipticParams::standard(kappa, j0, 0.3).unwrap();
        let p = profile_elliptic(&params, k_sign, params.safe_range(k_sign)).unwrap();
        prop_assert!(p.conservation_drift() < 1e-10);
        let net = build_rcnet(&p, PI / 5.0, 4).unwrap();
        for (j, k) in net.domain().faces() {
            if let Ok((kk, _, _)) = nets::curvatures(&net, j, k) {
                prop_assert!((kk - k_sign as f64).abs() < 1e-9);
            }
        }
    }
}
