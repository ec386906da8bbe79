//! Quaternions realized as complex 2×2 matrices.
//!
//! The real span of `σ0, −iσ1, −iσ2, −iσ3` is the quaternion algebra; its
//! trace-free part is identified with R³ through
//! `(x, y, z) ↦ x(−iσ1) + y(−iσ2) + z(−iσ3)`.
//!
//! [`Quat`] itself stores an arbitrary complex 2×2 matrix, since complex
//! Bäcklund parameters produce frames outside the quaternions. Use
//! [`Quat::is_quaternion`] to test membership.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Absolute tolerance for membership and identity checks.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const E1: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const E2: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const E3: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    /// Largest coordinate difference.
    pub fn max_diff(self, o: Vec3) -> f64 {
        (self.x - o.x).abs().max((self.y - o.y).abs()).max((self.z - o.z).abs())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// det of the 3×3 matrix with rows `a`, `b`, `c`.
pub fn det3(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    a.dot(b.cross(c))
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// A complex 2×2 matrix `[[m11, m12], [m21, m22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
}

impl Quat {
    pub const fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    pub fn scalar(s: C64) -> Self {
        Self::diag(s, s)
    }

    /// `q0 σ0 + q1(−iσ1) + q2(−iσ2) + q3(−iσ3)` for real coefficients.
    pub fn from_real(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self::new(C64::new(q0, -q3), C64::new(-q2, -q1), C64::new(q2, -q1), C64::new(q0, q3))
    }

    /// The Pauli matrices σ1, σ2, σ3.
    pub fn sigma(i: usize) -> Self {
        match i {
            0 => Self::identity(),
            1 => Self::new(ZERO, ONE, ONE, ZERO),
            2 => Self::new(ZERO, -I, I, ZERO),
            3 => Self::new(ONE, ZERO, ZERO, -ONE),
            _ => panic!("sigma index {i} out of range"),
        }
    }

    pub fn embed(v: Vec3) -> Self {
        Self::from_real(0.0, v.x, v.y, v.z)
    }

    /// Complex coordinates of the trace-free part.
    pub fn project_complex(&self) -> [C64; 3] {
        let tf = self.trace_free();
        [I * (tf.m12 + tf.m21) * 0.5, (tf.m21 - tf.m12) * 0.5, I * tf.m11]
    }

    /// Real coordinates of the trace-free part; imaginary residues are dropped.
    pub fn project(&self) -> Vec3 {
        let [x, y, z] = self.project_complex();
        Vec3::new(x.re, y.re, z.re)
    }

    pub fn trace(&self) -> C64 {
        self.m11 + self.m22
    }

    pub fn trace_free(&self) -> Quat {
        let h = self.trace() * 0.5;
        Quat::new(self.m11 - h, self.m12, self.m21, self.m22 - h)
    }

    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn inv(&self) -> Result<Quat> {
        let d = self.det();
        if d.norm() <= f64::MIN_POSITIVE || !d.is_finite() {
            return Err(Error::Singular { det: d.norm() });
        }
        let r = d.inv();
        Ok(Quat::new(self.m22 * r, -self.m12 * r, -self.m21 * r, self.m11 * r))
    }

    pub fn transpose(&self) -> Quat {
        Quat::new(self.m11, self.m21, self.m12, self.m22)
    }

    pub fn adjoint(&self) -> Quat {
        Quat::new(self.m11.conj(), self.m21.conj(), self.m12.conj(), self.m22.conj())
    }

    pub fn scale(&self, s: C64) -> Quat {
        Quat::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    /// Entrywise max-norm of `self − o`.
    pub fn max_diff(&self, o: &Quat) -> f64 {
        (*self - *o).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.norm().max(self.m12.norm()).max(self.m21.norm()).max(self.m22.norm())
    }

    /// Distance from the quaternion span: `m22 = conj(m11)`, `m21 = −conj(m12)`.
    pub fn quaternion_residual(&self) -> f64 {
        (self.m22 - self.m11.conj()).norm().max((self.m21 + self.m12.conj()).norm())
    }

    pub fn is_quaternion(&self, tol: f64) -> bool {
        self.quaternion_residual() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    /// Apply as a column operator to `(z1, z2)`.
    pub fn apply(&self, z: [C64; 2]) -> [C64; 2] {
        [self.m11 * z[0] + self.m12 * z[1], self.m21 * z[0] + self.m22 * z[1]]
    }

    pub fn pow(&self, n: u32) -> Quat {
        let mut out = Quat::identity();
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }
}

impl Default for Quat {
    fn default() -> Self {
        Self::identity()
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.m11 + o.m11, self.m12 + o.m12, self.m21 + o.m21, self.m22 + o.m22)
    }
}

impl AddAssign for Quat {
    fn add_assign(&mut self, o: Quat) {
        *self = *self + o;
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, o: Quat) -> Quat {
        Quat::new(self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        self.scale(-ONE)
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}

/// `x·y = −tr(xy)/2` in the matrix model.
pub fn dot(x: Vec3, y: Vec3) -> f64 {
    (-(Quat::embed(x) * Quat::embed(y)).trace() * 0.5).re
}

/// `x×y = (xy)^{tr=0}` in the matrix model.
pub fn cross(x: Vec3, y: Vec3) -> Vec3 {
    (Quat::embed(x) * Quat::embed(y)).project()
}

pub fn mul(a: Quat, b: Quat) -> Quat {
    a * b
}

pub fn inv(a: Quat) -> Result<Quat> {
    a.inv()
}

pub fn det(a: Quat) -> C64 {
    a.det()
}

/// `project(R⁻¹ embed(v) R)`.
pub fn conjugate_rotate(r: &Quat, v: Vec3) -> Result<Vec3> {
    Ok((r.inv()? * Quat::embed(v) * *r).project())
}

/// A complex number with its first derivative in the spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CJet {
    pub v: C64,
    pub d: C64,
}

impl CJet {
    pub const fn new(v: C64, d: C64) -> Self {
        Self { v, d }
    }

    pub fn constant(v: C64) -> Self {
        Self::new(v, ZERO)
    }

    pub fn real(v: f64) -> Self {
        Self::constant(C64::new(v, 0.0))
    }

    /// `e^{ct}` at `t`.
    pub fn exp_linear(c: C64, t: f64) -> Self {
        let e = (c * t).exp();
        Self::new(e, c * e)
    }

    pub fn recip(self) -> Self {
        let r = self.v.inv();
        Self::new(r, -self.d * r * r)
    }

    /// Principal square root.
    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Self::new(s, self.d / (s * 2.0))
    }

    pub fn conj(self) -> Self {
        Self::new(self.v.conj(), self.d.conj())
    }

    pub fn scale(self, s: C64) -> Self {
        Self::new(self.v * s, self.d * s)
    }
}

impl From<C64> for CJet {
    fn from(v: C64) -> Self {
        Self::constant(v)
    }
}

impl Add for CJet {
    type Output = CJet;
    fn add(self, o: CJet) -> CJet {
        CJet::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for CJet {
    type Output = CJet;
    fn sub(self, o: CJet) -> CJet {
        CJet::new(self.v - o.v, self.d - o.d)
    }
}

impl Neg for CJet {
    type Output = CJet;
    fn neg(self) -> CJet {
        CJet::new(-self.v, -self.d)
    }
}

impl Mul for CJet {
    type Output = CJet;
    fn mul(self, o: CJet) -> CJet {
        CJet::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Mul<C64> for CJet {
    type Output = CJet;
    fn mul(self, s: C64) -> CJet {
        self.scale(s)
    }
}

impl std::ops::Div for CJet {
    type Output = CJet;
    fn div(self, o: CJet) -> CJet {
        self * o.recip()
    }
}

/// A matrix value with its first derivative in the spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QJet {
    pub val: Quat,
    pub dt: Quat,
}

impl QJet {
    pub const fn new(val: Quat, dt: Quat) -> Self {
        Self { val, dt }
    }

    pub fn constant(val: Quat) -> Self {
        Self::new(val, Quat::zero())
    }

    pub fn identity() -> Self {
        Self::constant(Quat::identity())
    }

    pub fn from_entries(m11: CJet, m12: CJet, m21: CJet, m22: CJet) -> Self {
        Self::new(Quat::new(m11.v, m12.v, m21.v, m22.v), Quat::new(m11.d, m12.d, m21.d, m22.d))
    }

    pub fn entries(&self) -> [CJet; 4] {
        [
            CJet::new(self.val.m11, self.dt.m11),
            CJet::new(self.val.m12, self.dt.m12),
            CJet::new(self.val.m21, self.dt.m21),
            CJet::new(self.val.m22, self.dt.m22),
        ]
    }

    /// `d(A⁻¹) = −A⁻¹ dA A⁻¹`.
    pub fn inv(&self) -> Result<QJet> {
        let vi = self.val.inv()?;
        Ok(QJet::new(vi, -(vi * self.dt * vi)))
    }

    pub fn scale(&self, s: CJet) -> QJet {
        QJet::new(self.val.scale(s.v), self.dt.scale(s.v) + self.val.scale(s.d))
    }

    pub fn det(&self) -> CJet {
        let [a, b, c, d] = self.entries();
        a * d - b * c
    }

    pub fn pow(&self, n: u32) -> QJet {
        let mut out = QJet::identity();
        for _ in 0..n {
            out = *self * out;
        }
        out
    }

    /// Larger of the value and derivative max-norm differences.
    pub fn max_diff(&self, o: &QJet) -> f64 {
        self.val.max_diff(&o.val).max(self.dt.max_diff(&o.dt))
    }
}

impl Mul for QJet {
    type Output = QJet;
    fn mul(self, o: QJet) -> QJet {
        QJet::new(self.val * o.val, self.dt * o.val + self.val * o.dt)
    }
}

impl Add for QJet {
    type Output = QJet;
    fn add(self, o: QJet) -> QJet {
        QJet::new(self.val + o.val, self.dt + o.dt)
    }
}

impl Sub for QJet {
    type Output = QJet;
    fn sub(self, o: QJet) -> QJet {
        QJet::new(self.val - o.val, self.dt - o.dt)
    }
}
