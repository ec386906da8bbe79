use cknet_core::quat::{conjugate_rotate, Quat};
use cknet_core::{CJet, QJet, Vec3};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit_quat() -> impl Strategy<Value = Quat> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero", |q| q.0 * q.0 + q.1 * q.1 + q.2 * q.2 + q.3 * q.3 > 1e-2)
        .prop_map(|(a, b, c, d)| {
            let n = (a * a + b * b + c * c + d * d).sqrt();
            Quat::from_real(a / n, b / n, c / n, d / n)
        })
}

proptest! {
    #[test]
    fn embed_project_roundtrip(v in vec3()) {
        prop_assert!(Quat::embed(v).project().max_diff(v) < 1e-14);
    }

    #[test]
    fn product_of_vectors(a in vec3(), b in vec3()) {
        let q = Quat::embed(a) * Quat::embed(b);
        prop_assert!((q.trace() * 0.5 + a.dot(b)).norm() < 1e-12);
        prop_assert!((q.project().norm() - a.cross(b).norm()).abs() < 1e-12);
    }

    #[test]
    fn determinant_is_multiplicative(p in unit_quat(), q in unit_quat(), s in 0.1..4.0f64) {
        let a = p.scale(C64::from(s));
        prop_assert!(((a * q).det() - a.det() * q.det()).norm() < 1e-12);
        prop_assert!(a.is_quaternion(1e-12));
    }

    #[test]
    fn conjugation_is_a_rotation(r in unit_quat(), a in vec3(), b in vec3()) {
        let ra = conjugate_rotate(&r, a).unwrap();
        let rb = conjugate_rotate(&r, b).unwrap();
        prop_assert!((ra.dot(rb) - a.dot(b)).abs() < 1e-11);
        prop_assert!(ra.cross(rb).max_diff(conjugate_rotate(&r, a.cross(b)).unwrap()) < 1e-11);
    }

    #[test]
    fn jet_product_rule(t in -1.0..1.0f64, c in -2.0..2.0f64) {
        let e = CJet::exp_linear(C64::from(c), t);
        let sq = e * e;
        prop_assert!((sq.d - 2.0 * c * sq.v).norm() < 1e-10 * sq.v.norm().max(1.0));
        prop_assert!(((e * e.recip()).v - 1.0).norm() < 1e-12);
    }
}

#[test]
fn qjet_inverse_derivative() {
    let e = CJet::exp_linear(C64::from(1.0), 0.3);
    let q = QJet::from_entries(e, CJet::real(0.5), CJet::real(-0.2), e.recip());
    let p = q * q.inv().unwrap();
    assert!(p.max_diff(&QJet::identity()) < 1e-14);
}

#[test]
fn singular_matrix_has_no_inverse() {
    let q = Quat::new(C64::from(1.0), C64::from(2.0), C64::from(2.0), C64::from(4.0));
    assert!(q.inv().is_err());
}
