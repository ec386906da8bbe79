//! Meridian profiles of circular nets of revolution with constant Gaussian
//! curvature ±1, and the Jacobi elliptic functions they are built from.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::lattice::{Domain, Grid};
use crate::nets::ContactElementNet;
use crate::quat::Vec3;

/// Tolerance for the profile invariants.
pub const PROFILE_TOL: f64 = 1e-10;
/// Strict tolerance on `|b| ≤ 1`.
pub const B_TOL: f64 = 1e-12;

const AGM_EPS: f64 = 1e-16;
const AGM_MAX: usize = 64;

/// Descending Landen/AGM ladder for `m = κ²` in `(0, 1)`.
struct Ladder {
    a: Vec<f64>,
    c: Vec<f64>,
}

impl Ladder {
    fn new(kappa: f64) -> Self {
        let mut a = vec![1.0];
        let mut b = (1.0 - kappa * kappa).sqrt();
        let mut c = vec![kappa];
        for _ in 0..AGM_MAX {
            let an = *a.last().unwrap();
            let cn = c.last().unwrap().abs();
            if cn <= AGM_EPS * an || (c.len() > 1 && cn >= c[c.len() - 2].abs()) {
                break;
            }
            let (a1, b1, c1) = ((an + b) / 2.0, (an * b).sqrt(), (an - b) / 2.0);
            a.push(a1);
            c.push(c1);
            b = b1;
        }
        Self { a, c }
    }

    fn n(&self) -> usize {
        self.a.len() - 1
    }

    /// Amplitudes `φ_0, …, φ_N`.
    fn phases(&self, u: f64) -> Vec<f64> {
        let n = self.n();
        let mut phi = vec![0.0; n + 1];
        phi[n] = 2f64.powi(n as i32) * self.a[n] * u;
        for i in (1..=n).rev() {
            phi[i - 1] = 0.5 * (phi[i] + (self.c[i] / self.a[i] * phi[i].sin()).asin());
        }
        phi
    }

    /// `E(κ)/K(κ)`.
    fn e_over_k(&self) -> f64 {
        1.0 - self.c.iter().enumerate().map(|(n, c)| 2f64.powi(n as i32 - 1) * c * c).sum::<f64>()
    }

    fn k(&self) -> f64 {
        FRAC_PI_2 / self.a[self.n()]
    }
}

fn check_modulus(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::ModulusOutOfRange(kappa));
    }
    Ok(())
}

/// `(sn, cn, dn)(u, κ)` for any `κ ≥ 0`.
pub fn jacobi(u: f64, kappa: f64) -> Result<(f64, f64, f64)> {
    check_modulus(kappa)?;
    if kappa == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    if kappa == 1.0 {
        let s = 1.0 / u.cosh();
        return Ok((u.tanh(), s, s));
    }
    if kappa > 1.0 {
        let (sn, cn, dn) = jacobi(kappa * u, 1.0 / kappa)?;
        return Ok((sn / kappa, dn, cn));
    }
    let ladder = Ladder::new(kappa);
    let phi = ladder.phases(u);
    let (s, c) = phi[0].sin_cos();
    Ok((s, c, (1.0 - kappa * kappa * s * s).sqrt()))
}

/// Complete elliptic integral of the first kind, `0 ≤ κ ≤ 1`.
pub fn elliptic_k(kappa: f64) -> Result<f64> {
    check_modulus(kappa)?;
    if kappa > 1.0 {
        return Err(Error::ModulusOutOfRange(kappa));
    }
    if kappa == 1.0 {
        return Ok(f64::INFINITY);
    }
    if kappa == 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok(Ladder::new(kappa).k())
}

/// Complete elliptic integral of the second kind, `0 ≤ κ ≤ 1`.
pub fn elliptic_e(kappa: f64) -> Result<f64> {
    check_modulus(kappa)?;
    if kappa > 1.0 {
        return Err(Error::ModulusOutOfRange(kappa));
    }
    if kappa == 1.0 {
        return Ok(1.0);
    }
    if kappa == 0.0 {
        return Ok(FRAC_PI_2);
    }
    let l = Ladder::new(kappa);
    Ok(l.e_over_k() * l.k())
}

/// `∫₀ᵘ sn(v, κ)² dv` through the second-kind integral `E(am u) = uE/K + Z(u)`.
pub fn int_sn2(u: f64, kappa: f64) -> Result<f64> {
    check_modulus(kappa)?;
    if kappa == 0.0 {
        return Ok(0.5 * u - 0.25 * (2.0 * u).sin());
    }
    if kappa == 1.0 {
        return Ok(u - u.tanh());
    }
    if kappa > 1.0 {
        return Ok(int_sn2(kappa * u, 1.0 / kappa)? / (kappa * kappa * kappa));
    }
    let l = Ladder::new(kappa);
    let phi = l.phases(u);
    let zeta: f64 = (1..=l.n()).map(|n| l.c[n] * phi[n].sin()).sum();
    let e_am = u * l.e_over_k() + zeta;
    Ok((u - e_am) / (kappa * kappa))
}

/// Meridian data `f, h, a, b` over `j ∈ [j_start, j_start + len)` and `c` over the `j`-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub j_start: i32,
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub kappa: f64,
    pub k_sign: i32,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn j_end(&self) -> i32 {
        self.j_start + self.len() as i32 - 1
    }

    pub fn js(&self) -> std::ops::RangeInclusive<i32> {
        self.j_start..=self.j_end()
    }

    fn idx(&self, j: i32) -> usize {
        assert!(self.js().contains(&j), "j = {j} outside the profile");
        (j - self.j_start) as usize
    }

    pub fn f_at(&self, j: i32) -> f64 {
        self.f[self.idx(j)]
    }

    pub fn h_at(&self, j: i32) -> f64 {
        self.h[self.idx(j)]
    }

    pub fn a_at(&self, j: i32) -> f64 {
        self.a[self.idx(j)]
    }

    pub fn b_at(&self, j: i32) -> f64 {
        self.b[self.idx(j)]
    }

    /// `c` on the edge `j → j+1`.
    pub fn c_at(&self, j: i32) -> f64 {
        self.c[self.idx(j)]
    }

    /// `(f, h, c) ↦ (−f, −h, −c)`: the point reflection of the net with normals kept.
    pub fn mirrored(&self) -> Profile {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        Profile { f: neg(&self.f), h: neg(&self.h), c: neg(&self.c), ..self.clone() }
    }

    /// Copy with `b(j)` shifted by `eps` and `a(j)` rescaled to keep `n` unit;
    /// the other invariants are not rechecked.
    pub fn perturb_b(&self, j: i32, eps: f64) -> Profile {
        let mut p = self.clone();
        let i = p.idx(j);
        p.b[i] = (p.b[i] + eps).clamp(-1.0, 1.0);
        p.a[i] = (1.0 - p.b[i] * p.b[i]).sqrt().copysign(p.a[i]);
        p
    }

    /// `f² − a²` for `K = 1`, `f² + a²` for `K = −1`, per vertex.
    pub fn conserved(&self) -> Vec<f64> {
        self.f.iter().zip(&self.a).map(|(f, a)| if self.k_sign > 0 { f * f - a * a } else { f * f + a * a }).collect()
    }

    /// Spread of [`Profile::conserved`] along the profile.
    pub fn conservation_drift(&self) -> f64 {
        let q = self.conserved();
        let lo = q.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Max of `|a² + b² − 1|`.
    pub fn unit_normal_residual(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(a, b)| (a * a + b * b - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Max residual of `(δf, δh) = c(σb, −σa)`.
    pub fn edge_residual(&self) -> f64 {
        (0..self.c.len())
            .map(|i| {
                let df = self.f[i + 1] - self.f[i];
                let dh = self.h[i + 1] - self.h[i];
                let c = self.c[i];
                (df - c * (self.b[i + 1] + self.b[i])).abs().max((dh + c * (self.a[i + 1] + self.a[i])).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Check all invariants at [`PROFILE_TOL`].
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if n < 2 || [self.h.len(), self.a.len(), self.b.len()].iter().any(|&l| l != n) || self.c.len() != n - 1 {
            return bad("inconsistent lengths".into());
        }
        if self.k_sign.abs() != 1 {
            return bad(format!("K sign {}", self.k_sign));
        }
        if !(self.kappa > 0.0) {
            return bad(format!("kappa = {}", self.kappa));
        }
        if self.b.iter().any(|b| b.abs() > 1.0 + B_TOL) {
            return bad("|b| > 1".into());
        }
        let r = self.unit_normal_residual();
        if r > PROFILE_TOL {
            return bad(format!("a² + b² − 1 = {r:e}"));
        }
        for j in self.js() {
            if self.f_at(j) == 0.0 || self.f_at(j).signum() != self.f[0].signum() {
                return bad(format!("f changes sign or vanishes at j = {j}"));
            }
        }
        for i in 0..n - 1 {
            if self.f[i + 1] == self.f[i] && self.h[i + 1] == self.h[i] {
                return bad(format!("zero edge at j = {}", self.j_start + i as i32));
            }
        }
        let r = self.edge_residual();
        if r > PROFILE_TOL {
            return bad(format!("edge relation residual {r:e}"));
        }
        let target = if self.k_sign > 0 { self.kappa * self.kappa - 1.0 } else { 1.0 / (self.kappa * self.kappa) };
        let r = self.conserved().iter().map(|q| (q - target).abs()).fold(0.0, f64::max);
        if r > PROFILE_TOL * (1.0 + target.abs()) {
            return bad(format!("curvature constant drifts by {r:e}"));
        }
        Ok(())
    }
}

/// Sign policy for `a = ±√(1 − b²)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ASigns {
    /// Start positive, then follow the linear prediction `2a(j) − a(j−1)`.
    #[default]
    Continuous,
    /// Explicit sign per vertex.
    Explicit(Vec<f64>),
}

/// Options shared by the trigonometric and hyperbolic profile builders.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProfileOptions {
    pub j_start: i32,
    pub a_signs: ASigns,
}

fn choose_a(b: &[f64], signs: &ASigns) -> Result<Vec<f64>> {
    let mag: Vec<f64> = b.iter().map(|b| (1.0 - (b * b).min(1.0)).sqrt()).collect();
    match signs {
        ASigns::Explicit(s) => {
            if s.len() != b.len() {
                return Err(Error::InvalidProfile("sign sequence length".into()));
            }
            Ok(mag.iter().zip(s).map(|(m, s)| m * s.signum()).collect())
        }
        ASigns::Continuous => {
            let mut a: Vec<f64> = Vec::with_capacity(b.len());
            for (i, m) in mag.iter().enumerate() {
                let v = match i {
                    0 => *m,
                    1 => m.copysign(if a[0] == 0.0 { 1.0 } else { a[0] }),
                    _ => {
                        let pred = 2.0 * a[i - 1] - a[i - 2];
                        if (m - pred).abs() <= (-m - pred).abs() {
                            *m
                        } else {
                            -m
                        }
                    }
                };
                a.push(v);
            }
            Ok(a)
        }
    }
}

/// `h` from `δh = −cσa`, anchored at `h(0) = 0` when `0` is in range, else at the first vertex.
fn integrate_h(j_start: i32, a: &[f64], c: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0];
    for i in 0..c.len() {
        h.push(h[i] - c[i] * (a[i + 1] + a[i]));
    }
    let anchor = if j_start <= 0 && (-j_start as usize) < h.len() { h[(-j_start) as usize] } else { 0.0 };
    h.iter().map(|v| v - anchor).collect()
}

fn assemble(j_start: i32, f: Vec<f64>, b: Vec<f64>, c: &[f64], k_sign: i32, signs: &ASigns) -> Result<Profile> {
    if let Some(j) = b.iter().position(|b| b.abs() > 1.0 + B_TOL) {
        return Err(Error::InvalidProfile(format!("|b| = {} > 1 at j = {}", b[j].abs(), j_start + j as i32)));
    }
    let a = choose_a(&b, signs)?;
    let h = integrate_h(j_start, &a, c);
    let q = if k_sign > 0 { f[0] * f[0] - a[0] * a[0] + 1.0 } else { 1.0 / (f[0] * f[0] + a[0] * a[0]) };
    let p = Profile { j_start, f, h, a, b, c: c.to_vec(), kappa: q.sqrt(), k_sign };
    p.validate()?;
    Ok(p)
}

fn check_c(c: &[f64], hyp: bool) -> Result<()> {
    if c.is_empty() {
        return Err(Error::InvalidProfile("need at least one edge".into()));
    }
    for (i, v) in c.iter().enumerate() {
        if *v == 0.0 || (hyp && (v.abs() - 1.0).abs() < 1e-15) || !v.is_finite() {
            return Err(Error::InvalidProfile(format!("c({i}) = {v}")));
        }
    }
    Ok(())
}

/// `K = 1`: `f = A cos(Σθ + B)`, `b = A sin(Σθ + B)` with the sums starting at `j_start`.
pub fn profile_trig(c: &[f64], amp: f64, phase: f64, opts: &ProfileOptions) -> Result<Profile> {
    check_c(c, false)?;
    let mut psi = phase;
    let mut f = vec![amp * psi.cos()];
    let mut b = vec![amp * psi.sin()];
    for cj in c {
        let den = 1.0 + cj * cj;
        psi += (-2.0 * cj / den).atan2((1.0 - cj * cj) / den);
        f.push(amp * psi.cos());
        b.push(amp * psi.sin());
    }
    assemble(opts.j_start, f, b, c, 1, &opts.a_signs)
}

/// `K = −1`: `f = AP + B/P`, `b = −AP + B/P`, `P = ∏(1 − c)/(1 + c)` from `j_start`.
pub fn profile_hyp(c: &[f64], a_coef: f64, b_coef: f64, opts: &ProfileOptions) -> Result<Profile> {
    check_c(c, true)?;
    let mut p = 1.0;
    let mut f = vec![a_coef + b_coef];
    let mut b = vec![-a_coef + b_coef];
    for cj in c {
        p *= (1.0 - cj) / (1.0 + cj);
        f.push(a_coef * p + b_coef / p);
        b.push(-a_coef * p + b_coef / p);
    }
    assemble(opts.j_start, f, b, c, -1, &opts.a_signs)
}

/// Step `Θ` and modulus `κ` of an elliptic profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParams {
    pub theta: f64,
    pub kappa: f64,
    pub j0: i32,
}

impl EllipticParams {
    /// `Θ = K(κ)/j0` for `κ < 1`, `Θ = K(1/κ)/(κ j0)` for `κ > 1`; `κ = 1` takes `theta_free`.
    pub fn standard(kappa: f64, j0: i32, theta_free: f64) -> Result<Self> {
        check_modulus(kappa)?;
        if kappa == 0.0 {
            return Err(Error::ModulusOutOfRange(kappa));
        }
        if j0 < 2 {
            return Err(Error::InvalidProfile(format!("j0 = {j0} < 2")));
        }
        let theta = if kappa == 1.0 {
            theta_free
        } else if kappa < 1.0 {
            elliptic_k(kappa)? / j0 as f64
        } else {
            elliptic_k(1.0 / kappa)? / (kappa * j0 as f64)
        };
        Self::with_theta(theta, kappa, j0)
    }

    pub fn with_theta(theta: f64, kappa: f64, j0: i32) -> Result<Self> {
        if theta == 0.0 || !theta.is_finite() || !(kappa > 0.0) {
            return Err(Error::InvalidProfile(format!("Θ = {theta}, κ = {kappa}")));
        }
        Ok(Self { theta, kappa, j0 })
    }

    /// `j`-range on which `f` stays away from its zero at `±j0`, when there is one.
    pub fn safe_range(&self, k_sign: i32) -> (i32, i32) {
        let vanishes = (k_sign > 0 && self.kappa < 1.0) || (k_sign < 0 && self.kappa > 1.0);
        if vanishes {
            (-self.j0 + 1, self.j0 - 1)
        } else {
            (-self.j0, self.j0)
        }
    }
}

/// Elliptic `c(j)` for the trigonometric builder (`K = 1`, `A = κ`, `B = 0`).
pub fn elliptic_c_trig(params: &EllipticParams, j: i32) -> Result<f64> {
    let (t, k) = (params.theta, params.kappa);
    let (sh, ch, _) = jacobi(t / 2.0, k)?;
    let (_, _, dn) = jacobi((2 * j + 1) as f64 * t / 2.0, k)?;
    Ok(-sh * dn / ch)
}

/// Elliptic `c(j)` for the hyperbolic builder (`K = −1`).
pub fn elliptic_c_hyp(params: &EllipticParams, j: i32) -> Result<f64> {
    let (t, k) = (params.theta, params.kappa);
    let (sh, _, _) = jacobi(t / 2.0, k)?;
    let (sn, _, _) = jacobi((2 * j + 1) as f64 * t / 2.0, k)?;
    Ok(-k * sh * sn)
}

/// Closed-form elliptic profile over `j_range` (inclusive).
pub fn profile_elliptic(params: &EllipticParams, k_sign: i32, j_range: (i32, i32)) -> Result<Profile> {
    let (j_lo, j_hi) = j_range;
    if j_hi <= j_lo {
        return Err(Error::InvalidProfile("need at least two vertices".into()));
    }
    let (t, k) = (params.theta, params.kappa);
    let (mut f, mut h, mut a, mut b, mut c) = (vec![], vec![], vec![], vec![], vec![]);
    let half = if k_sign < 0 { int_sn2(t / 2.0, k)? } else { 0.0 };
    for j in j_lo..=j_hi {
        let (sn, cn, dn) = jacobi(t * j as f64, k)?;
        if k_sign > 0 {
            f.push(k * cn);
            a.push(dn);
            b.push(k * sn);
        } else {
            f.push(dn / k);
            a.push(sn);
            b.push(cn);
            h.push(k * (int_sn2(t * j as f64, k)? - 2.0 * j as f64 * half));
        }
        if j < j_hi {
            c.push(if k_sign > 0 { elliptic_c_trig(params, j)? } else { elliptic_c_hyp(params, j)? });
        }
    }
    if k_sign > 0 {
        h = integrate_h(j_lo, &a, &c);
    } else if !(j_lo..=j_hi).contains(&0) {
        let h0 = h[0];
        h.iter_mut().for_each(|v| *v -= h0);
    }
    let p = Profile { j_start: j_lo, f, h, a, b, c, kappa: k, k_sign: k_sign.signum() };
    p.validate()?;
    Ok(p)
}

/// `x = (f cos θk, f sin θk, h)`, `n = (a cos θk, a sin θk, b)` for `k ∈ [0, k_count)`.
pub fn build_rcnet(p: &Profile, theta: f64, k_count: usize) -> Result<ContactElementNet> {
    if theta == 0.0 || theta.abs() >= std::f64::consts::PI || !theta.is_finite() {
        return Err(Error::InvalidProfile(format!("rotation angle {theta} outside (−π, 0) ∪ (0, π)")));
    }
    if k_count < 2 {
        return Err(Error::InvalidProfile("need at least two rotation steps".into()));
    }
    let d = Domain::new(p.j_start, p.j_end(), 0, k_count as i32 - 1)?;
    let x = Grid::from_fn(d, |j, k| {
        let (s, c) = (theta * k as f64).sin_cos();
        Vec3::new(p.f_at(j) * c, p.f_at(j) * s, p.h_at(j))
    });
    let n = Grid::from_fn(d, |j, k| {
        let (s, c) = (theta * k as f64).sin_cos();
        Vec3::new(p.a_at(j) * c, p.a_at(j) * s, p.b_at(j))
    });
    ContactElementNet::new(x, n)
}

/// `K(j) = −δb/(c σf)` on the edge `j → j+1`.
pub fn gauss_from_profile(p: &Profile, j: i32) -> Result<f64> {
    let sf = p.f_at(j + 1) + p.f_at(j);
    if sf == 0.0 {
        return Err(Error::DegenerateEdge { j });
    }
    Ok(-(p.b_at(j + 1) - p.b_at(j)) / (p.c_at(j) * sf))
}

/// `(a(j+1)² − a(j)²)/(f(j+1)² − f(j)²)`, the second expression for the same curvature.
pub fn gauss_from_squares(p: &Profile, j: i32) -> Result<f64> {
    let den = p.f_at(j + 1).powi(2) - p.f_at(j).powi(2);
    if den == 0.0 {
        return Err(Error::DegenerateEdge { j });
    }
    Ok((p.a_at(j + 1).powi(2) - p.a_at(j).powi(2)) / den)
}
