//! Rotationally invariant flat connections built from rc-net profiles,
//! eigen-factorised frames, closing and helix checks, and the gauge to the
//! HS Lax pair.
//!
//! Three constructions are provided. Case 3 uses the CGC connection and
//! produces `K = −1` nets with `ξ = 2`; cases 1 and 2 use the CMC connection
//! and produce `K = 1` nets with `ξ = −2`. Cases 2 and 3 are `k`-invariant,
//! case 1 is `j`-invariant, so its profile runs along `k`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{self, ConnectionFamily, Domain, FrameFamily, Grid, FLAT_TOL};
use crate::nets::{self, ContactElementNet, REALITY_TOL};
use crate::quat::{CJet, QJet, Quat, Vec3};
use crate::revolution::{self, Profile};

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const EDGE_TOL: f64 = 1e-14;
/// Relative eigenvalue gap below which the spectrum counts as repeated.
pub const EIGEN_TOL: f64 = 1e-12;
/// Tolerated variation of edge values along the rotational direction.
pub const INVARIANCE_TOL: f64 = 1e-12;

/// Which construction of the compatibility theorem is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// CMC connection, `K = 1`, `0 < κ < 1`, `j`-invariant.
    One,
    /// CMC connection, `K = 1`, `κ > 1`, `k`-invariant.
    Two,
    /// CGC connection, `K = −1`, `k`-invariant.
    Three,
}

impl Case {
    pub fn number(self) -> u8 {
        match self {
            Case::One => 1,
            Case::Two => 2,
            Case::Three => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Case> {
        match n {
            1 => Some(Case::One),
            2 => Some(Case::Two),
            3 => Some(Case::Three),
            _ => None,
        }
    }

    /// `ξ` in the Sym formula (`τ = 0`).
    pub fn xi(self) -> f64 {
        if self == Case::Three {
            2.0
        } else {
            -2.0
        }
    }

    pub fn k_sign(self) -> i32 {
        if self == Case::Three {
            -1
        } else {
            1
        }
    }

    /// Case matching the sign of `K` and the modulus of a profile.
    pub fn for_profile(p: &Profile) -> Result<Case> {
        match (p.k_sign < 0, p.kappa < 1.0, p.kappa > 1.0) {
            (true, _, _) => Ok(Case::Three),
            (false, true, _) => Ok(Case::One),
            (false, _, true) => Ok(Case::Two),
            _ => Err(Error::CaseMismatch { case: 1, kappa: p.kappa }),
        }
    }
}

/// Edge variables of the constructed connection.
///
/// Indices count profile positions from `start`. For cases 2 and 3, `u`,
/// `v_frak` and `alpha` live on the profile edges and `v`, `h_frak`, `beta`
/// on the profile vertices; case 1 swaps the two roles.
#[derive(Debug, Clone, PartialEq)]
pub struct CkEdgeData {
    pub case: Case,
    pub kappa: f64,
    pub theta: f64,
    pub start: i32,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub v_frak: Vec<C64>,
    pub h_frak: Vec<C64>,
    pub alpha: Vec<CJet>,
    pub beta: Vec<CJet>,
    /// `α` at `t = 0`.
    pub alpha0: Vec<f64>,
    /// `β` at `t = 0`.
    pub beta0: Vec<f64>,
    pub t0: f64,
}

/// Edge variables around one face `pqrs` with `q = p + e1`, `s = p + e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceVars {
    pub u_qp: C64,
    pub u_rs: C64,
    pub v_sp: C64,
    pub v_rq: C64,
    pub vf_qp: C64,
    pub vf_rs: C64,
    pub h_sp: C64,
    pub h_rq: C64,
}

impl FaceVars {
    /// The four scalar compatibility residuals of the CGC connection.
    pub fn cgc_residuals(&self) -> [f64; 4] {
        let f = self;
        let (a, b) = (f.u_rs * f.v_sp, f.v_rq * f.u_qp);
        [
            (f.u_qp * f.u_rs - f.v_sp * f.v_rq).norm(),
            (f.h_rq * f.vf_qp - f.vf_rs * f.h_sp - (a + a.inv() - b - b.inv())).norm(),
            (f.v_rq * f.vf_qp.conj() - f.u_rs * f.h_sp.conj() + f.h_rq * f.u_qp - f.vf_rs * f.v_sp).norm(),
            (f.v_sp * f.vf_qp.conj() - f.u_qp * f.h_sp.conj() + f.h_rq * f.u_rs - f.vf_rs * f.v_rq).norm(),
        ]
    }

    /// The four scalar compatibility residuals of the CMC connection.
    pub fn cmc_residuals(&self) -> [f64; 4] {
        let f = self;
        let (a, b) = (f.u_rs * f.v_sp, f.v_rq * f.u_qp);
        [
            (f.u_qp * f.u_rs - f.v_sp * f.v_rq).norm(),
            (f.h_rq * f.vf_qp - f.vf_rs * f.h_sp - I * (a - a.inv() + b - b.inv())).norm(),
            (I * f.v_rq * f.vf_qp.conj() - f.u_rs * f.h_sp.conj() + f.h_rq * f.u_qp - I * f.vf_rs * f.v_sp).norm(),
            (I * f.v_sp * f.vf_qp.conj() + f.u_qp * f.h_sp.conj() - f.h_rq * f.u_rs - I * f.vf_rs * f.v_rq).norm(),
        ]
    }
}

impl CkEdgeData {
    /// Number of profile vertices.
    pub fn len(&self) -> usize {
        if self.case == Case::One {
            self.u.len()
        } else {
            self.v.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Variables of the face whose profile edge starts at position `i`.
    pub fn face(&self, i: usize) -> FaceVars {
        match self.case {
            Case::One => FaceVars {
                u_qp: self.u[i],
                u_rs: self.u[i + 1],
                v_sp: self.v[i],
                v_rq: self.v[i],
                vf_qp: self.v_frak[i],
                vf_rs: self.v_frak[i + 1],
                h_sp: self.h_frak[i],
                h_rq: self.h_frak[i],
            },
            _ => FaceVars {
                u_qp: self.u[i],
                u_rs: self.u[i],
                v_sp: self.v[i],
                v_rq: self.v[i + 1],
                vf_qp: self.v_frak[i],
                vf_rs: self.v_frak[i],
                h_sp: self.h_frak[i],
                h_rq: self.h_frak[i + 1],
            },
        }
    }

    /// Largest residual of each of the four compatibility equations.
    pub fn compatibility_residuals(&self) -> [f64; 4] {
        let mut r = [0.0f64; 4];
        for i in 0..self.len() - 1 {
            let f = self.face(i);
            let e = if self.case == Case::Three { f.cgc_residuals() } else { f.cmc_residuals() };
            for (a, b) in r.iter_mut().zip(e) {
                *a = a.max(b);
            }
        }
        r
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta == 0.0 || !theta.is_finite() || theta.abs() >= std::f64::consts::PI {
        return Err(Error::InvalidProfile(format!("rotation angle {theta} outside (−π, 0) ∪ (0, π)")));
    }
    Ok(())
}

fn cot_half(theta: f64) -> f64 {
    1.0 / (theta / 2.0).tan()
}

/// Real square root of a jet whose value is real up to roundoff.
fn real_sqrt(x: CJet, sign: f64) -> CJet {
    let v = x.v.re.max(0.0).sqrt();
    CJet::new(C64::new(sign * v, 0.0), C64::new(sign * x.d.re / (2.0 * v), 0.0))
}

/// `w² + w⁻²`, real for unitary or real `w`.
fn sq_sum(w: C64) -> f64 {
    (w * w + (w * w).inv()).re
}

fn c(z: C64) -> CJet {
    CJet::constant(z)
}

/// `(1/n)[[x, w/E − E/w], [Ew − 1/(Ew), x̄]]`.
pub fn cgc_matrix(x: C64, w: C64, norm: CJet, e: CJet) -> QJet {
    let ni = norm.recip();
    QJet::from_entries(c(x) * ni, (c(w) / e - e / c(w)) * ni, (e * c(w) - (e * c(w)).recip()) * ni, c(x.conj()) * ni)
}

/// `(1/α)[[𝔳, −Eu − 1/(Eu)], [u/E + E/u, 𝔳̄]]` with `E = e^{it}`.
pub fn cmc_l(x: C64, u: C64, norm: CJet, e: CJet) -> QJet {
    let ni = norm.recip();
    QJet::from_entries(c(x) * ni, (-(e * c(u)) - (e * c(u)).recip()) * ni, (c(u) / e + e / c(u)) * ni, c(x.conj()) * ni)
}

/// `(1/β)[[𝔥, −iEv + i/(Ev)], [iE/v − iv/E, 𝔥̄]]` with `E = e^{it}`.
pub fn cmc_m(x: C64, v: C64, norm: CJet, e: CJet) -> QJet {
    let ni = norm.recip();
    QJet::from_entries(
        c(x) * ni,
        ((e * c(v)).recip() - e * c(v)) * I * ni,
        (e / c(v) - c(v) / e) * I * ni,
        c(x.conj()) * ni,
    )
}

/// Profile-indexed rotational domain for cases 2 and 3, `k ∈ [0, count)`.
fn k_invariant_domain(p: &Profile, count: usize) -> Result<Domain> {
    if count < 2 {
        return Err(Error::InvalidProfile("need at least two rotation steps".into()));
    }
    Domain::new(p.j_start, p.j_end(), 0, count as i32 - 1)
}

fn nonzero(x: C64, j: i32) -> Result<C64> {
    if x.norm() <= EDGE_TOL {
        return Err(Error::DegenerateEdge { j });
    }
    Ok(x)
}

/// Case 3: `K = −1` profile, CGC connection, `k ∈ [0, count)`, built at `t0`.
pub fn build_ck_connection(p: &Profile, theta: f64, count: usize, t0: f64) -> Result<(ConnectionFamily, CkEdgeData)> {
    check_theta(theta)?;
    if p.k_sign >= 0 {
        return Err(Error::InvalidProfile("case 3 needs a K = −1 profile".into()));
    }
    p.validate()?;
    let kap = p.kappa;
    let domain = k_invariant_domain(p, count)?;
    let mut v = Vec::with_capacity(p.len());
    for j in p.js() {
        let ka = kap * p.a_at(j);
        let re2 = 1.0 - ka * ka;
        if re2 <= 0.0 {
            return Err(Error::BranchFailure(format!("κ|a| = {} ≥ 1 at j = {j}", ka.abs())));
        }
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        v.push(C64::new(re2.sqrt(), ka) * sign);
    }
    let h_frak: Vec<C64> = p.js().map(|j| C64::new(cot_half(theta), p.b_at(j)) * (2.0 * kap)).collect();
    let mut u = Vec::with_capacity(p.len() - 1);
    let mut v_frak = Vec::with_capacity(p.len() - 1);
    for i in 0..p.len() - 1 {
        let j = p.j_start + i as i32;
        let ui = (v[i] * v[i + 1]).sqrt();
        if ui.re.abs() <= EDGE_TOL {
            return Err(Error::BranchFailure(format!("Re u = 0 on edge {j}")));
        }
        let den = nonzero(v[i] + v[i + 1], j)?;
        v_frak.push(ui * (h_frak[i + 1] - h_frak[i].conj()) / den);
        u.push(ui);
    }
    let e = CJet::exp_linear(ONE, t0);
    let e2 = e * e + (e * e).recip();
    let sign = (theta / 2.0).sin().signum();
    let alpha_sq = |x: C64, w: C64, ee: CJet| c(C64::from(x.norm_sqr() - sq_sum(w))) + ee;
    let alpha: Vec<CJet> = (0..u.len()).map(|i| real_sqrt(alpha_sq(v_frak[i], u[i], e2), 1.0)).collect();
    let beta: Vec<CJet> = (0..v.len()).map(|i| real_sqrt(alpha_sq(h_frak[i], v[i], e2), sign)).collect();
    let two = c(C64::from(2.0));
    let alpha0 = (0..u.len()).map(|i| real_sqrt(alpha_sq(v_frak[i], u[i], two), 1.0).v.re).collect();
    let beta0 = (0..v.len()).map(|i| real_sqrt(alpha_sq(h_frak[i], v[i], two), sign).v.re).collect();
    let data = CkEdgeData {
        case: Case::Three,
        kappa: kap,
        theta,
        start: p.j_start,
        u,
        v,
        v_frak,
        h_frak,
        alpha,
        beta,
        alpha0,
        beta0,
        t0,
    };
    let s = p.j_start;
    let conn = ConnectionFamily::from_fns(
        domain,
        t0,
        |j, _| {
            let i = (j - s) as usize;
            cgc_matrix(data.v_frak[i], data.u[i], data.alpha[i], e)
        },
        |j, _| {
            let i = (j - s) as usize;
            cgc_matrix(data.h_frak[i], data.v[i], data.beta[i], e)
        },
    );
    Ok((conn, data))
}

/// Cases 1 and 2: `K = 1` profile, CMC connection, built at `t0`.
///
/// Case 2 is `k`-invariant on `k ∈ [0, count)`. Case 1 is `j`-invariant on
/// `j ∈ [0, count)` with the profile along `k`.
pub fn build_cmc_connection(
    p: &Profile,
    theta: f64,
    case: Case,
    count: usize,
    t0: f64,
) -> Result<(ConnectionFamily, CkEdgeData)> {
    check_theta(theta)?;
    if p.k_sign <= 0 {
        return Err(Error::InvalidProfile("cases 1 and 2 need a K = 1 profile".into()));
    }
    p.validate()?;
    let kap = p.kappa;
    match case {
        Case::One if !(kap > 0.0 && kap < 1.0) => return Err(Error::CaseMismatch { case: 1, kappa: kap }),
        Case::Two if !(kap > 1.0) => return Err(Error::CaseMismatch { case: 2, kappa: kap }),
        Case::Three => return Err(Error::CaseMismatch { case: 3, kappa: kap }),
        _ => {}
    }
    if count < 2 {
        return Err(Error::InvalidProfile("need at least two rotation steps".into()));
    }
    let n = p.len();
    let e = CJet::exp_linear(I, t0);
    let e2 = e * e + (e * e).recip();
    let two = c(C64::from(2.0));
    let sign = (theta / 2.0).sin().signum();
    let pos = |x: C64, w: C64, ee: CJet, s: f64| real_sqrt(c(C64::from(x.norm_sqr() + sq_sum(w))) + ee, s);
    let neg = |x: C64, w: C64, ee: CJet, s: f64| real_sqrt(c(C64::from(x.norm_sqr() + sq_sum(w))) - ee, s);

    if case == Case::Two {
        let sq = (kap * kap - 1.0).sqrt();
        let v: Vec<C64> =
            p.a.iter()
                .map(|a| {
                    let w = 2.0 * a / sq;
                    C64::from((w + (w * w + 4.0).sqrt()) / 2.0)
                })
                .collect();
        let h_frak: Vec<C64> = p.js().map(|j| C64::new(cot_half(theta), p.b_at(j)) * (2.0 / sq)).collect();
        let mut u = Vec::with_capacity(n - 1);
        let mut v_frak = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let j = p.j_start + i as i32;
            let ui = (v[i] * v[i + 1]).sqrt();
            let den = nonzero(v[i] - v[i + 1], j)?;
            v_frak.push(I * ui * (h_frak[i].conj() - h_frak[i + 1]) / den);
            u.push(ui);
        }
        let alpha: Vec<CJet> = (0..n - 1).map(|i| pos(v_frak[i], u[i], e2, 1.0)).collect();
        let beta: Vec<CJet> = (0..n).map(|i| neg(h_frak[i], v[i], e2, sign)).collect();
        let alpha0 = (0..n - 1).map(|i| pos(v_frak[i], u[i], two, 1.0).v.re).collect();
        let beta0 = (0..n).map(|i| neg(h_frak[i], v[i], two, sign).v.re).collect();
        let data = CkEdgeData {
            case,
            kappa: kap,
            theta,
            start: p.j_start,
            u,
            v,
            v_frak,
            h_frak,
            alpha,
            beta,
            alpha0,
            beta0,
            t0,
        };
        let s = p.j_start;
        let conn = ConnectionFamily::from_fns(
            k_invariant_domain(p, count)?,
            t0,
            |j, _| {
                let i = (j - s) as usize;
                cmc_l(data.v_frak[i], data.u[i], data.alpha[i], e)
            },
            |j, _| {
                let i = (j - s) as usize;
                cmc_m(data.h_frak[i], data.v[i], data.beta[i], e)
            },
        );
        return Ok((conn, data));
    }

    let sq = (1.0 - kap * kap).sqrt();
    let a_sign = p.a[0].signum();
    if p.a.iter().any(|a| a.signum() != a_sign || *a == 0.0) {
        return Err(Error::BranchFailure("case 1 needs a of constant sign".into()));
    }
    let mut u = Vec::with_capacity(n);
    for j in p.js() {
        let w = 2.0 * p.a_at(j) / sq;
        let disc = w * w - 4.0;
        if disc < -1e-12 {
            return Err(Error::BranchFailure(format!("|a| < √(1 − κ²) at j = {j}")));
        }
        u.push(C64::from((w + w.signum() * disc.max(0.0).sqrt()) / 2.0));
    }
    let v_frak: Vec<C64> = p.js().map(|j| C64::new(cot_half(theta), p.b_at(j)) * (2.0 / sq)).collect();
    let mut v = Vec::with_capacity(n - 1);
    let mut h_frak = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let j = p.j_start + i as i32;
        let vi = C64::from(a_sign * (u[i] * u[i + 1]).re.sqrt());
        let den = nonzero(I * (u[i] - u[i + 1]), j)?;
        h_frak.push(vi * (v_frak[i].conj() - v_frak[i + 1]) / den);
        v.push(vi);
    }
    let alpha: Vec<CJet> = (0..n).map(|i| pos(v_frak[i], u[i], e2, sign)).collect();
    let beta: Vec<CJet> = (0..n - 1).map(|i| neg(h_frak[i], v[i], e2, 1.0)).collect();
    let alpha0 = (0..n).map(|i| pos(v_frak[i], u[i], two, sign).v.re).collect();
    let beta0 = (0..n - 1).map(|i| neg(h_frak[i], v[i], two, 1.0).v.re).collect();
    let data =
        CkEdgeData { case, kappa: kap, theta, start: p.j_start, u, v, v_frak, h_frak, alpha, beta, alpha0, beta0, t0 };
    let s = p.j_start;
    let domain = Domain::new(0, count as i32 - 1, p.j_start, p.j_end())?;
    let conn = ConnectionFamily::from_fns(
        domain,
        t0,
        |_, k| {
            let i = (k - s) as usize;
            cmc_l(data.v_frak[i], data.u[i], data.alpha[i], e)
        },
        |_, k| {
            let i = (k - s) as usize;
            cmc_m(data.h_frak[i], data.v[i], data.beta[i], e)
        },
    );
    Ok((conn, data))
}

/// Dispatch on `case`.
pub fn build_connection(
    p: &Profile,
    theta: f64,
    case: Case,
    count: usize,
    t0: f64,
) -> Result<(ConnectionFamily, CkEdgeData)> {
    match case {
        Case::Three => build_ck_connection(p, theta, count, t0),
        _ => build_cmc_connection(p, theta, case, count, t0),
    }
}

/// Sym net of the parallel frame with `Φ(base) = 1`, `j` along the profile.
pub fn reconstruct(conn: &ConnectionFamily, case: Case) -> Result<ContactElementNet> {
    let frames = lattice::integrate_frame(conn, QJet::identity(), FLAT_TOL)?;
    let net = nets::sym(&frames, case.xi(), 0.0)?;
    Ok(if case == Case::One { net.transpose() } else { net })
}

/// The rc-net a construction reproduces up to rigid motion.
///
/// Case 3 yields the point-reflected profile `(−f, −h)` with the normals kept.
pub fn reference_net(p: &Profile, theta: f64, count: usize, case: Case) -> Result<ContactElementNet> {
    if case == Case::Three {
        revolution::build_rcnet(&p.mirrored(), theta, count)
    } else {
        revolution::build_rcnet(p, theta, count)
    }
}

fn eigenvector(m: &Quat, w: C64) -> [C64; 2] {
    let a = [m.m12, w - m.m11];
    let b = [w - m.m22, m.m21];
    let n = |v: &[C64; 2]| v[0].norm_sqr() + v[1].norm_sqr();
    if n(&a) >= n(&b) {
        a
    } else {
        b
    }
}

/// Eigenvalues ordered by `Im ω₊ ≥ Im ω₋`, ties by real part.
pub fn eigenvalues(m: &Quat) -> (C64, C64) {
    let half = m.trace() * 0.5;
    let disc = (half * half - m.det()).sqrt();
    let (a, b) = (half + disc, half - disc);
    if a.im > b.im || (a.im == b.im && a.re >= b.re) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Jet of `D = P⁻¹MP` and `P` for a fixed eigenframe value `p`.
///
/// `P` is extended by `P' = PX` with `X` off-diagonal, which keeps
/// `det P` constant. Returns the off-diagonal size of `P⁻¹MP` as well.
pub fn eigen_jet(m: &QJet, p: Quat) -> Result<(QJet, QJet, f64)> {
    let pi = p.inv()?;
    let d = pi * m.val * p;
    let off = d.m12.norm().max(d.m21.norm());
    let (wp, wm) = (d.m11, d.m22);
    if (wp - wm).norm() <= EIGEN_TOL * (wp.norm() + wm.norm()) {
        return Err(Error::RepeatedEigenvalue);
    }
    let g = pi * m.dt * p;
    let x = Quat::new(C64::from(0.0), g.m12 / (wm - wp), g.m21 / (wp - wm), C64::from(0.0));
    let pj = QJet::new(p, p * x);
    let dj = QJet::new(Quat::diag(wp, wm), Quat::diag(g.m11, g.m22));
    Ok((pj, dj, off))
}

/// `M = PDP⁻¹` with `det P = 1`, `D = diag(ω₊, ω₋)`, `Im ω₊ ≥ Im ω₋`.
///
/// The first column of `P` is a unit vector whose larger entry is real
/// positive; for a unitary quaternion `M` this makes `P` special unitary.
pub fn eigen_split(m: &QJet) -> Result<(QJet, QJet)> {
    let a = m.val;
    let (wp, wm) = eigenvalues(&a);
    if (wp - wm).norm() <= EIGEN_TOL * (wp.norm() + wm.norm()) {
        return Err(Error::RepeatedEigenvalue);
    }
    let mut vp = eigenvector(&a, wp);
    let big = if vp[0].norm() >= vp[1].norm() { vp[0] } else { vp[1] };
    let scale = big.conj() / (big.norm() * (vp[0].norm_sqr() + vp[1].norm_sqr()).sqrt());
    vp = [vp[0] * scale, vp[1] * scale];
    let vm = eigenvector(&a, wm);
    let det = vp[0] * vm[1] - vm[0] * vp[1];
    if det.norm() <= EIGEN_TOL {
        return Err(Error::RepeatedEigenvalue);
    }
    let p = Quat::new(vp[0], vm[0] / det, vp[1], vm[1] / det);
    let (pj, dj, _) = eigen_jet(m, p)?;
    Ok((pj, dj))
}

/// Initial frame of the rotational construction for the normal `(a0, 0, b0)`.
pub fn initial_frame(a0: f64, b0: f64) -> Quat {
    let bp = b0 + 1.0;
    if bp.abs() <= 1e-12 {
        return Quat::new(C64::from(0.0), I, I, C64::from(0.0));
    }
    let s = I / (2.0 * bp).sqrt();
    Quat::new(s * bp, s * a0, s * a0, -s * bp)
}

/// Largest change of an edge value along `k`.
pub fn invariance_residual(conn: &ConnectionFamily) -> f64 {
    let d = conn.domain();
    let mut r = 0.0f64;
    if let Some(g) = conn.l_grid() {
        for ((j, _), v) in g.iter() {
            r = r.max(v.max_diff(conn.l(j, d.k_min)));
        }
    }
    if let Some(g) = conn.m_grid() {
        for ((j, _), v) in g.iter() {
            r = r.max(v.max_diff(conn.m(j, d.k_min)));
        }
    }
    r
}

fn frames_from(conn: &ConnectionFamily, p0: (QJet, QJet)) -> FrameFamily {
    let d = conn.domain();
    let (mut p, dm) = p0;
    let mut cols = Vec::with_capacity(d.nj());
    for j in d.j_min..=d.j_max {
        cols.push(p);
        if j < d.j_max {
            p = *conn.l(j, d.k_min) * p;
        }
    }
    let mut powers = vec![QJet::identity()];
    for _ in 1..d.nk() {
        let next = *powers.last().unwrap() * dm;
        powers.push(next);
    }
    let phi = Grid::from_fn(d, |j, k| cols[(j - d.j_min) as usize] * powers[(k - d.k_min) as usize]);
    FrameFamily { phi }
}

fn check_invariant(conn: &ConnectionFamily) -> Result<()> {
    let d = conn.domain();
    if d.nk() < 2 {
        return Err(Error::ShapeMismatch("rotational frames need k-edges".into()));
    }
    let residual = invariance_residual(conn);
    if residual > INVARIANCE_TOL {
        return Err(Error::NotInvariant { residual });
    }
    Ok(())
}

/// `Φ(j, k) = P(j)D^k` with `P(j+1) = L(j)P(j)`.
///
/// `P(0)` is [`initial_frame`] when it diagonalises `M(0)`, which is the
/// case at `t = 0`; otherwise the eigenframe of [`eigen_split`] is used.
pub fn rotational_frames(conn: &ConnectionFamily, a0: f64, b0: f64) -> Result<FrameFamily> {
    check_invariant(conn)?;
    let d = conn.domain();
    let m0 = conn.m(d.j_min, d.k_min);
    let p0 = match eigen_jet(m0, initial_frame(a0, b0)) {
        Ok((p, dm, off)) if off <= 1e-9 * m0.val.max_abs().max(1.0) => (p, dm),
        _ => eigen_split(m0)?,
    };
    Ok(frames_from(conn, p0))
}

/// Distance of `M^{k0}` from the nearer of `±√det · 1`, maximised over `j`.
pub fn closing_residual(conn: &ConnectionFamily, k0: u32) -> f64 {
    let d = conn.domain();
    let mut r = 0.0f64;
    for j in d.j_min..=d.j_max {
        let mk = conn.m(j, d.k_min).val.pow(k0);
        let sq = mk.det().sqrt();
        let plus = mk.max_diff(&Quat::scalar(sq));
        let minus = mk.max_diff(&Quat::scalar(-sq));
        r = r.max(plus.min(minus));
    }
    r
}

/// Helix `γ(k) = (Υ cos(θk + ι), Υ sin(θk + ι), μk + Ψ)` fitted to one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelixFit {
    pub theta: f64,
    pub mu: f64,
    pub upsilon: f64,
    pub iota: f64,
    pub psi: f64,
    /// Max deviation of the row from the helix.
    pub residual: f64,
}

/// Fit the helix of row `j` for a `k`-invariant connection built at any `t`.
///
/// Frames start at the eigenframe `P(0)` of [`eigen_split`], so the helix axis
/// is `e3`. `θ` and `μ` come from the eigenvalues; `Υ`, `ι`, `Ψ` from `k = k_min`.
pub fn helix_check(conn: &ConnectionFamily, j: i32, xi: f64) -> Result<HelixFit> {
    check_invariant(conn)?;
    let d = conn.domain();
    if !(d.j_min..=d.j_max).contains(&j) {
        return Err(Error::ShapeMismatch(format!("row {j} outside the domain")));
    }
    let (p0, dm) = eigen_split(conn.m(d.j_min, d.k_min))?;
    let frames = frames_from(conn, (p0, dm));
    let net = nets::sym_complex(&frames, xi, 0.0)?.to_real(REALITY_TOL)?;
    let (wp, wm) = (dm.val.m11, dm.val.m22);
    let theta = (wp / wm).arg();
    let mu = (I * xi / 2.0 * (dm.dt.m11 / wp - dm.dt.m22 / wm)).re;
    let x0 = net.x.get(j, d.k_min);
    let upsilon = x0.x.hypot(x0.y);
    let iota = x0.y.atan2(x0.x);
    let psi = x0.z;
    let mut residual = 0.0f64;
    for k in d.k_min..=d.k_max {
        let s = (k - d.k_min) as f64;
        let (sn, cs) = (theta * s + iota).sin_cos();
        let model = Vec3::new(upsilon * cs, upsilon * sn, mu * s + psi);
        residual = residual.max(model.max_diff(*net.x.get(j, k)));
    }
    Ok(HelixFit { theta, mu, upsilon, iota, psi, residual })
}

/// Data of the HS Lax pair on a `k`-invariant K = −1 construction.
///
/// `s` and `v` live on the profile vertices, `u`, `ell`, `t1` on the
/// profile edges, `m` and `t2` on the `k`-edges of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct HsLaxData {
    pub start: i32,
    pub s: Vec<C64>,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub ell: Vec<C64>,
    pub m: Vec<C64>,
    /// `tan(δ₍₁₎/2)`.
    pub t1: Vec<C64>,
    /// `tan(δ₍₂₎/2)`.
    pub t2: Vec<C64>,
    pub sin_delta1: Vec<f64>,
    pub sin_delta2: Vec<f64>,
    pub kappa: f64,
    pub theta: f64,
}

/// `tan(δ/2)` from `sin δ = w`, with `cos δ` on the principal branch.
pub fn tan_half(w: f64) -> Result<C64> {
    if w == 0.0 || !w.is_finite() {
        return Err(Error::DivisionByZero(format!("sin δ = {w}")));
    }
    let w = C64::from(w);
    Ok((ONE - (ONE - w * w).sqrt()) / w)
}

impl HsLaxData {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn j_end(&self) -> i32 {
        self.start + self.len() as i32 - 1
    }

    fn idx(&self, j: i32) -> usize {
        assert!((self.start..=self.j_end()).contains(&j), "j = {j} outside the Lax data");
        (j - self.start) as usize
    }

    pub fn s_at(&self, j: i32) -> C64 {
        self.s[self.idx(j)]
    }

    /// `𝓛` on the edge `j → j+1` at spectral parameter `t`.
    pub fn lax_l(&self, j: i32, t: f64) -> QJet {
        let i = self.idx(j);
        let (sp, sq, t1, l) = (self.s[i], self.s[i + 1], self.t1[i], self.ell[i]);
        let e = CJet::exp_linear(ONE, t);
        let pq = c(sp * sq);
        QJet::from_entries(
            c(l * (ONE / (sp * t1) + sq * t1)),
            (e - pq / e) * I,
            (e - (e * pq).recip()) * I,
            c((sp / t1 + t1 / sq) / l),
        )
    }

    /// `𝓜` on the edge `k → k+1` of row `j` at spectral parameter `t`.
    pub fn lax_m(&self, j: i32, t: f64) -> QJet {
        let i = self.idx(j);
        let (sp, t2, m) = (self.s[i], self.t2[i], self.m[i]);
        let e = CJet::exp_linear(ONE, t);
        let pp = c(sp * sp);
        QJet::from_entries(
            c(m * (ONE / (sp * t2) + sp * t2)),
            (e - pp / e) * I,
            (e - (e * pp).recip()) * I,
            c((sp / t2 + t2 / sp) / m),
        )
    }

    /// The Lax connection on a `k`-invariant domain whose rows are profile positions.
    pub fn lax_connection(&self, domain: Domain, t0: f64) -> ConnectionFamily {
        ConnectionFamily::from_fns(domain, t0, |j, _| self.lax_l(j, t0), |j, _| self.lax_m(j, t0))
    }
}

/// Result of [`gauge_to_hs`].
#[derive(Debug, Clone, PartialEq)]
pub struct HsGauge {
    pub hs: HsLaxData,
    /// The admissible gauge `G = g·diag(√s/√i, √i/√s)`.
    pub gauge: Grid<QJet>,
    pub gauged: ConnectionFamily,
    /// Entrywise distance of the gauged connection from the Lax connection.
    pub residual: f64,
}

/// Gauge a case 3 connection into the HS Lax form.
///
/// `√s` starts on the principal branch and continues by `√s(j+1) = u/√s(j)`;
/// the scalar `g` follows `g(j+1, k) = αg`, `g(j, k+1) = βg`.
pub fn gauge_to_hs(conn: &ConnectionFamily, data: &CkEdgeData) -> Result<HsGauge> {
    if data.case != Case::Three {
        return Err(Error::CaseMismatch { case: data.case.number(), kappa: data.kappa });
    }
    let d = conn.domain();
    let n = data.v.len();
    if d.j_min != data.start || d.nj() != n {
        return Err(Error::ShapeMismatch("connection rows do not match the edge data".into()));
    }
    let s = data.v.clone();
    let mut rs = vec![s[0].sqrt()];
    for i in 0..n - 1 {
        rs.push(data.u[i] / rs[i]);
    }
    let mut t1 = Vec::with_capacity(n - 1);
    let mut ell = Vec::with_capacity(n - 1);
    let mut sin_delta1 = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let j = data.start + i as i32;
        let sd = 2.0 / data.alpha0[i];
        let t = tan_half(sd).map_err(|_| Error::DegenerateDelta(j))?;
        let den = ONE / (data.u[i] * t) + data.u[i] * t;
        if den.norm() <= EDGE_TOL {
            return Err(Error::DivisionByZero(format!("ℓ on edge {j}")));
        }
        ell.push(data.v_frak[i] / den);
        t1.push(t);
        sin_delta1.push(sd);
    }
    let mut t2 = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    let mut sin_delta2 = Vec::with_capacity(n);
    for i in 0..n {
        let j = data.start + i as i32;
        let sd = 2.0 / data.beta0[i];
        let t = tan_half(sd).map_err(|_| Error::DegenerateDelta(j))?;
        let den = ONE / (s[i] * t) + s[i] * t;
        if den.norm() <= EDGE_TOL {
            return Err(Error::DivisionByZero(format!("m on row {j}")));
        }
        m.push(data.h_frak[i] / den);
        t2.push(t);
        sin_delta2.push(sd);
    }
    let hs = HsLaxData {
        start: data.start,
        s,
        u: data.u.clone(),
        v: data.v.clone(),
        ell,
        m,
        t1,
        t2,
        sin_delta1,
        sin_delta2,
        kappa: data.kappa,
        theta: data.theta,
    };
    let si = I.sqrt();
    let mut row = vec![CJet::real(1.0)];
    for i in 0..n - 1 {
        let next = row[i] * data.alpha[i];
        row.push(next);
    }
    let gauge = Grid::from_fn(d, |j, k| {
        let i = (j - d.j_min) as usize;
        let mut g = row[i];
        for _ in d.k_min..k {
            g = g * data.beta[i];
        }
        QJet::new(Quat::diag(rs[i] / si, si / rs[i]), Quat::zero()).scale(g)
    });
    let gauged = lattice::gauge(conn, &gauge)?;
    let residual = gauged.max_diff(&hs.lax_connection(d, conn.t0));
    Ok(HsGauge { hs, gauge, gauged, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::flatness_residual;
    use crate::revolution::{profile_elliptic, EllipticParams};
    use std::f64::consts::PI;

    fn hyp(kappa: f64) -> Profile {
        let params = EllipticParams::standard(kappa, 4, 0.3).unwrap();
        profile_elliptic(&params, -1, params.safe_range(-1)).unwrap()
    }

    fn trig(kappa: f64) -> Profile {
        let params = EllipticParams::standard(kappa, 4, 0.3).unwrap();
        profile_elliptic(&params, 1, params.safe_range(1)).unwrap()
    }

    #[test]
    fn case3_is_flat_and_compatible() {
        for kappa in [0.6, 1.0, 1.4] {
            let p = hyp(kappa);
            for t in [-0.5, 0.0, 0.5] {
                let (conn, data) = build_ck_connection(&p, PI / 3.0, 5, t).unwrap();
                assert!(flatness_residual(&conn) < 1e-11);
                assert!(data.compatibility_residuals().iter().all(|r| *r < 1e-12));
            }
        }
    }

    #[test]
    fn case3_angle_data() {
        let p = hyp(0.6);
        let th = PI / 3.0;
        let (_, data) = build_ck_connection(&p, th, 3, 0.0).unwrap();
        for b in &data.beta0 {
            assert!((b - 2.0 * 0.6 / (th / 2.0).sin()).abs() < 1e-12);
        }
        for (i, u) in data.u.iter().enumerate() {
            assert!((u.norm() - 1.0).abs() < 1e-14 && u.re != 0.0);
            assert!(data.v_frak[i].re.abs() < 1e-12);
            let j = p.j_start + i as i32;
            let cc = (2.0 * u.re).powi(2) / data.v_frak[i].norm_sqr();
            assert!((p.c_at(j).powi(2) - cc).abs() < 1e-12);
        }
        for w in data.v.windows(2) {
            assert!(w[0].re * w[1].re < 0.0);
        }
    }

    #[test]
    fn cmc_cases_are_flat() {
        let p2 = trig(1.4);
        let (conn, data) = build_cmc_connection(&p2, PI / 3.0, Case::Two, 4, 0.3).unwrap();
        assert!(flatness_residual(&conn) < 1e-11);
        assert!(data.compatibility_residuals().iter().all(|r| *r < 1e-12));
        let p1 = trig(0.6);
        let (conn, data) = build_cmc_connection(&p1, PI / 3.0, Case::One, 4, 0.3).unwrap();
        assert!(flatness_residual(&conn) < 1e-11);
        assert!(data.compatibility_residuals().iter().all(|r| *r < 1e-12));
        assert!(build_cmc_connection(&p1, PI / 3.0, Case::Two, 4, 0.0).is_err());
    }

    #[test]
    fn broken_compatibility_breaks_flatness() {
        let p = hyp(0.6);
        let (_, mut data) = build_ck_connection(&p, PI / 3.0, 3, 0.0).unwrap();
        data.v_frak[1] += C64::new(0.0, 1e-3);
        assert!(data.compatibility_residuals().iter().any(|r| *r > 1e-4));
    }

    #[test]
    fn reconstruction_matches_rcnet() {
        let th = PI / 3.0;
        let cases = [(hyp(0.6), Case::Three), (trig(1.4), Case::Two), (trig(0.6), Case::One)];
        for (p, case) in cases {
            let (conn, _) = build_connection(&p, th, case, 6, 0.0).unwrap();
            let net = reconstruct(&conn, case).unwrap();
            let target = reference_net(&p, th, 6, case).unwrap();
            let al = nets::rigid_align(&net, &target).unwrap();
            assert!(al.residual < 1e-9, "{case:?} {}", al.residual);
        }
    }

    #[test]
    fn eigen_split_diagonal() {
        let th: f64 = 0.8;
        let m = QJet::constant(Quat::diag(C64::from_polar(1.0, th / 2.0), C64::from_polar(1.0, -th / 2.0)));
        let (p, d) = eigen_split(&m).unwrap();
        assert!(p.val.max_diff(&Quat::identity()) < 1e-15);
        assert!(d.val.max_diff(&m.val) < 1e-15);
    }

    #[test]
    fn eigen_split_reconstructs() {
        let p = hyp(0.6);
        let (conn, _) = build_ck_connection(&p, PI / 3.0, 3, 0.2).unwrap();
        let m = conn.m(1, 0);
        let (pp, d) = eigen_split(m).unwrap();
        let rec = pp * d * pp.inv().unwrap();
        assert!(rec.max_diff(m) < 1e-13);
        assert!((pp.val.det() - 1.0).norm() < 1e-14);
        assert!(pp.val.is_quaternion(1e-13));
    }

    #[test]
    fn eigenvalues_constant_in_j() {
        let p = hyp(0.6);
        let (conn, _) = build_ck_connection(&p, PI / 3.0, 3, 0.0).unwrap();
        let w0 = eigenvalues(&conn.m(p.j_start, 0).val);
        for j in p.js() {
            let w = eigenvalues(&conn.m(j, 0).val);
            assert!((w.0 - w0.0).norm() < 1e-13 && (w.1 - w0.1).norm() < 1e-13);
        }
    }

    #[test]
    fn rotational_frames_agree_with_integration() {
        let p = hyp(0.6);
        let th = PI / 3.0;
        let (conn, _) = build_ck_connection(&p, th, 6, 0.0).unwrap();
        let f = rotational_frames(&conn, p.a[0], p.b[0]).unwrap();
        let net = nets::sym(&f, 2.0, 0.0).unwrap();
        for j in p.js() {
            let n = net.n.get(j, 0);
            assert!(n.max_diff(Vec3::new(p.a_at(j), 0.0, p.b_at(j))) < 1e-12);
        }
        let target = reference_net(&p, th, 6, Case::Three).unwrap();
        assert!(nets::rigid_align(&net, &target).unwrap().residual < 1e-9);
        let flat = lattice::integrate_frame(&conn, *f.get(p.j_start, 0), 1e-9).unwrap();
        for (a, b) in flat.phi.values().iter().zip(f.phi.values()) {
            assert!(a.max_diff(b) < 1e-12);
        }
    }

    #[test]
    fn antidiagonal_initial_frame() {
        let q = initial_frame(0.0, -1.0);
        assert!(q.is_quaternion(1e-15));
        assert!(((q.det()) - 1.0).norm() < 1e-15);
        let n = (q.inv().unwrap() * Quat::embed(Vec3::E3) * q).project();
        assert!(n.max_diff(-Vec3::E3) < 1e-15);
    }

    #[test]
    fn closing() {
        let p = hyp(0.6);
        let (conn, _) = build_ck_connection(&p, 2.0 * PI / 6.0, 3, 0.0).unwrap();
        assert!(closing_residual(&conn, 6) < 1e-10);
        let (conn, _) = build_ck_connection(&p, 2.0 * PI / 2f64.sqrt() / 3.0, 3, 0.0).unwrap();
        assert!(closing_residual(&conn, 6) > 1e-3);
    }

    #[test]
    fn helix_at_zero_is_a_circle() {
        let p = hyp(0.6);
        let (conn, _) = build_ck_connection(&p, PI / 3.0, 7, 0.0).unwrap();
        let fit = helix_check(&conn, 1, 2.0).unwrap();
        assert!(fit.mu.abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!((fit.theta.abs() - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn helix_at_positive_t() {
        let p = hyp(0.6);
        let (conn, _) = build_ck_connection(&p, PI / 3.0, 7, 0.4).unwrap();
        let fit = helix_check(&conn, 2, 2.0).unwrap();
        assert!(fit.mu.abs() > 1e-3);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn gauge_to_hs_matches_lax() {
        let p = hyp(0.6);
        for t in [0.0, 0.4] {
            let (conn, data) = build_ck_connection(&p, PI / 3.0, 4, t).unwrap();
            let g = gauge_to_hs(&conn, &data).unwrap();
            assert!(g.residual < 1e-11, "{}", g.residual);
            for m in &g.hs.m {
                assert!((m.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hs_gauge_keeps_the_net() {
        let p = hyp(0.6);
        let (conn, data) = build_ck_connection(&p, PI / 3.0, 4, 0.0).unwrap();
        let g = gauge_to_hs(&conn, &data).unwrap();
        let f = lattice::integrate_frame(&conn, QJet::identity(), 1e-9).unwrap();
        let gf = lattice::gauge_frame(&f, &g.gauge).unwrap();
        let a = nets::sym(&f, 2.0, 0.0).unwrap();
        let b = nets::sym(&gf, 2.0, 0.0).unwrap();
        assert!(a.max_diff(&b) < 1e-11);
    }
}
