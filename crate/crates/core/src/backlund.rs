//! Bäcklund transforms of K = −1 rc-nets through the HS Lax pair.
//!
//! The transform data `s̃` (and `ŝ`) solve Möbius difference equations
//! `s̃(j+1, k) = A•s̃`, `s̃(j, k+1) = B•s̃` (and `C`, `D` for `ŝ`). The dressed
//! frames `WΦ`, `VΦ` and `ṼWΦ` give the single and double transforms through
//! the Sym formula with `ξ = 2`, `τ = 0`.

use num_complex::Complex64 as C64;

use crate::connect::{eigenvalues, HsLaxData};
use crate::error::{Error, Result};
use crate::lattice::{self, Domain, FrameFamily, Grid, FLAT_TOL};
use crate::nets::{self, ComplexNet, ContactElementNet};
use crate::quat::{CJet, QJet, Quat};

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
/// Denominators below this count as a pole.
pub const POLE_TOL: f64 = 1e-14;
/// Tolerated disagreement between the two propagation paths around a face.
pub const PATH_TOL: f64 = 1e-10;
/// Imaginary residue tolerated in a double transform.
pub const DOUBLE_REALITY_TOL: f64 = 1e-9;
/// Seeds this close to the unit circle count as unitary.
pub const UNIT_SEED_TOL: f64 = 1e-12;
/// `ξ` of the K = −1 Sym formula.
pub const XI: f64 = 2.0;

/// `[[a, b], [c, d]]•z = (az + b)/(cz + d)`.
pub fn moebius(m: &Quat, z: C64) -> Result<C64> {
    let den = m.m21 * z + m.m22;
    if den.norm() <= POLE_TOL * (m.m21.norm() * z.norm() + m.m22.norm()).max(POLE_TOL) {
        return Err(Error::PoleHit { denom: den.norm() });
    }
    Ok((m.m11 * z + m.m12) / den)
}

/// Parameters of a pair of transforms; `alpha` drives `s̃`, `beta` drives `ŝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacklundParams {
    pub alpha: C64,
    pub beta: C64,
    pub s_tilde0: C64,
    pub s_hat0: C64,
}

impl BacklundParams {
    /// A single transform with real `α` and unitary seed `e^{iφ}`.
    pub fn single(alpha: f64, seed_phase: f64) -> Self {
        let s = C64::from_polar(1.0, seed_phase);
        Self { alpha: C64::from(alpha), beta: C64::from(-alpha), s_tilde0: s, s_hat0: s.conj() }
    }

    /// Condition 𝒞 data: `β = −α` and conjugate seeds.
    pub fn condition_c(alpha: C64, s_tilde0: C64) -> Self {
        Self { alpha, beta: -alpha, s_tilde0, s_hat0: s_tilde0.conj() }
    }

    /// `α` lies in `(−π, 0) ∪ (0, π)` and the seed is unitary.
    pub fn is_real_single(&self, tol: f64) -> bool {
        let a = self.alpha;
        a.im.abs() <= tol
            && a.re != 0.0
            && a.re.abs() < std::f64::consts::PI
            && (self.s_tilde0.norm() - 1.0).abs() <= tol
    }

    /// Largest violation of Condition 𝒞, including the conjugate seeds when `|sin α| > 1`.
    pub fn condition_c_residual(&self) -> f64 {
        let mut r = (self.beta + self.alpha).norm().max(self.alpha.sin().im.abs());
        if self.alpha.sin().re.abs() > 1.0 {
            r = r.max((self.s_tilde0 - self.s_hat0.conj()).norm());
        }
        r
    }
}

/// The four Möbius matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    /// `s̃` along `j`.
    A,
    /// `s̃` along `k`.
    B,
    /// `ŝ` along `j`.
    C,
    /// `ŝ` along `k`.
    D,
}

/// Möbius matrix on the edge starting at row `j` (`A`, `C`) or on row `j` (`B`, `D`).
///
/// `A`, `B` take `α`; `C`, `D` take `β`.
pub fn build_abcd(hs: &HsLaxData, param: C64, which: Which, j: i32) -> Result<Quat> {
    let i = (j - hs.start) as usize;
    let (w, t, l) = match which {
        Which::A | Which::C => {
            if i + 1 >= hs.len() {
                return Err(Error::ShapeMismatch(format!("no j-edge at {j}")));
            }
            (hs.u[i], hs.t1[i], hs.ell[i])
        }
        Which::B | Which::D => {
            if i >= hs.len() {
                return Err(Error::ShapeMismatch(format!("no row {j}")));
            }
            (hs.v[i], hs.t2[i], hs.m[i])
        }
    };
    if !(t.norm() > POLE_TOL) || !t.is_finite() {
        return Err(Error::DegenerateDelta(j));
    }
    let (sn, cs) = (param.sin(), param.cos());
    let wi = w.inv();
    let outer = sn / l * (w / t + t / w);
    let inner = sn * l * (ONE / (w * t) + w * t);
    Ok(match which {
        Which::A | Which::B => Quat::new(outer, (wi - w) * cs - w - wi, (w - wi) * cs - w - wi, inner),
        Which::C | Which::D => Quat::new(inner, (w - wi) * cs + w + wi, (wi - w) * cs + w + wi, outer),
    })
}

/// Which transform variable is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// `s̃` with `A`, `B` and `α`.
    Tilde,
    /// `ŝ` with `C`, `D` and `β`.
    Hat,
}

impl Transform {
    fn mats(self) -> (Which, Which) {
        match self {
            Transform::Tilde => (Which::A, Which::B),
            Transform::Hat => (Which::C, Which::D),
        }
    }

    fn param(self, p: &BacklundParams) -> C64 {
        match self {
            Transform::Tilde => p.alpha,
            Transform::Hat => p.beta,
        }
    }

    fn seed(self, p: &BacklundParams) -> C64 {
        match self {
            Transform::Tilde => p.s_tilde0,
            Transform::Hat => p.s_hat0,
        }
    }
}

fn check_rows(hs: &HsLaxData, domain: Domain) -> Result<()> {
    if domain.j_min < hs.start || domain.j_max > hs.j_end() {
        return Err(Error::ShapeMismatch("domain rows outside the Lax data".into()));
    }
    Ok(())
}

/// Fill `s̃` or `ŝ` over `domain` from the seed at `(j_min, k_min)`, first
/// along `j` then along `k`, and check on every face that both paths from
/// the lower-left vertex agree.
///
/// For real parameters the matrices preserve the unit circle; a unitary seed
/// then stays on it and each step is renormalized onto the circle, which
/// keeps rounding from growing along hyperbolic `k`-edge matrices.
pub fn propagate(hs: &HsLaxData, params: &BacklundParams, which: Transform, domain: Domain) -> Result<Grid<C64>> {
    check_rows(hs, domain)?;
    let (mj, mk) = which.mats();
    let par = which.param(params);
    let a: Vec<Quat> = (domain.j_min..domain.j_max).map(|j| build_abcd(hs, par, mj, j)).collect::<Result<_>>()?;
    let b: Vec<Quat> = (domain.j_min..=domain.j_max).map(|j| build_abcd(hs, par, mk, j)).collect::<Result<_>>()?;
    let seed = which.seed(params);
    let on_circle = par.im == 0.0 && (seed.norm() - 1.0).abs() <= UNIT_SEED_TOL;
    let step = |m: &Quat, z: C64| -> Result<C64> {
        let w = moebius(m, z)?;
        Ok(if on_circle { w / w.norm() } else { w })
    };
    let mut s = Grid::filled(domain, seed);
    for j in domain.j_min..domain.j_max {
        let next = step(&a[(j - domain.j_min) as usize], *s.get(j, domain.k_min))?;
        s.set(j + 1, domain.k_min, next);
    }
    for j in domain.j_min..=domain.j_max {
        let bj = &b[(j - domain.j_min) as usize];
        for k in domain.k_min..domain.k_max {
            let next = step(bj, *s.get(j, k))?;
            s.set(j, k + 1, next);
        }
    }
    let mut residual = 0.0f64;
    for (j, k) in domain.faces() {
        let i = (j - domain.j_min) as usize;
        let z = *s.get(j, k);
        let via_k = moebius(&a[i], moebius(&b[i], z)?)?;
        let via_j = moebius(&b[i + 1], moebius(&a[i], z)?)?;
        residual = residual.max((via_k - via_j).norm() / via_j.norm().max(1.0));
    }
    if residual > PATH_TOL {
        return Err(Error::PathInconsistent { residual });
    }
    Ok(s)
}

/// Parallel frames of the HS Lax connection at `t0` with `Φ(j_min, k_min) = 1`.
pub fn base_frames(hs: &HsLaxData, domain: Domain, t0: f64) -> Result<FrameFamily> {
    check_rows(hs, domain)?;
    lattice::integrate_frame(&hs.lax_connection(domain, t0), QJet::identity(), FLAT_TOL)
}

fn e_jet(t0: f64, sign: f64) -> CJet {
    CJet::exp_linear(C64::from(sign), t0)
}

/// `W = [[cot(α/2) s̃/s, ie^t], [ie^t, cot(α/2) s/s̃]]`.
pub fn w_matrix(alpha: C64, s: C64, s_tilde: C64, t0: f64) -> QJet {
    let ct = (alpha / 2.0).tan().inv();
    let ie = e_jet(t0, 1.0) * I;
    QJet::from_entries(CJet::constant(ct * s_tilde / s), ie, ie, CJet::constant(ct * s / s_tilde))
}

/// `V = [[1, ie^{−t} tan(β/2) ŝs], [ie^{−t} tan(β/2)/(ŝs), 1]]`.
pub fn v_matrix(beta: C64, s: C64, s_hat: C64, t0: f64) -> QJet {
    let tb = (beta / 2.0).tan();
    let ie = e_jet(t0, -1.0) * I;
    QJet::from_entries(CJet::real(1.0), ie * (tb * s_hat * s), ie * (tb / (s_hat * s)), CJet::real(1.0))
}

/// `ṼW` in closed form, with `ŝ̃` from the permutability formula.
pub fn vw_matrix(alpha: C64, s: C64, s_tilde: C64, s_hat_tilde: C64, t0: f64) -> QJet {
    let ta = (alpha / 2.0).tan();
    let ct = ta.inv();
    let e = e_jet(t0, 1.0);
    let q = CJet::constant(s * s_hat_tilde);
    QJet::from_entries(
        CJet::constant(s_tilde * (ct / s + s_hat_tilde * ta)),
        (e - q / e) * I,
        (e - (e * q).recip()) * I,
        CJet::constant((s * ct + ta / s_hat_tilde) / s_tilde),
    )
}

fn dress(frames: &FrameFamily, g: impl Fn(i32, i32) -> QJet) -> Result<FrameFamily> {
    let gauge = Grid::from_fn(frames.domain(), g);
    lattice::gauge_frame(frames, &gauge)
}

/// Sym net of `WΦ`; complex in general, real for real `α` and unitary `s̃`.
pub fn single_backlund_complex(
    frames: &FrameFamily,
    hs: &HsLaxData,
    alpha: C64,
    s_tilde: &Grid<C64>,
    t0: f64,
) -> Result<ComplexNet> {
    if s_tilde.domain() != frames.domain() {
        return Err(Error::ShapeMismatch("s̃ grid does not match the frames".into()));
    }
    let dressed = dress(frames, |j, k| w_matrix(alpha, hs.s_at(j), *s_tilde.get(j, k), t0))?;
    nets::sym_complex(&dressed, XI, 0.0)
}

/// Real single transform `Sym(WΦ)`.
pub fn single_backlund(
    frames: &FrameFamily,
    hs: &HsLaxData,
    alpha: f64,
    s_tilde: &Grid<C64>,
    t0: f64,
) -> Result<ContactElementNet> {
    single_backlund_complex(frames, hs, C64::from(alpha), s_tilde, t0)?.to_real(nets::REALITY_TOL)
}

/// Sym net of `VΦ`.
pub fn single_backlund_hat(
    frames: &FrameFamily,
    hs: &HsLaxData,
    beta: C64,
    s_hat: &Grid<C64>,
    t0: f64,
) -> Result<ComplexNet> {
    if s_hat.domain() != frames.domain() {
        return Err(Error::ShapeMismatch("ŝ grid does not match the frames".into()));
    }
    let dressed = dress(frames, |j, k| v_matrix(beta, hs.s_at(j), *s_hat.get(j, k), t0))?;
    nets::sym_complex(&dressed, XI, 0.0)
}

/// `ŝ̃ = (1/s)(ŝs̃ − tan²(α/2))/(1 − tan²(α/2)ŝs̃)`.
pub fn permutability(alpha: C64, s: C64, s_tilde: C64, s_hat: C64) -> Result<C64> {
    let t2 = (alpha / 2.0).tan().powi(2);
    let p = s_hat * s_tilde;
    let den = s * (ONE - t2 * p);
    if den.norm() <= POLE_TOL {
        return Err(Error::PoleHit { denom: den.norm() });
    }
    Ok((p - t2) / den)
}

/// Output of [`double_backlund`].
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleBacklund {
    pub s_hat_tilde: Grid<C64>,
    pub complex: ComplexNet,
    pub net: ContactElementNet,
}

/// Double transform `Sym(ṼWΦ)` under Condition 𝒞.
pub fn double_backlund(
    frames: &FrameFamily,
    hs: &HsLaxData,
    params: &BacklundParams,
    s_tilde: &Grid<C64>,
    s_hat: &Grid<C64>,
    t0: f64,
) -> Result<DoubleBacklund> {
    let d = frames.domain();
    if s_tilde.domain() != d || s_hat.domain() != d {
        return Err(Error::ShapeMismatch("transform grids do not match the frames".into()));
    }
    let alpha = params.alpha;
    let sht = Grid::try_from_fn(d, |j, k| permutability(alpha, hs.s_at(j), *s_tilde.get(j, k), *s_hat.get(j, k)))?;
    let dressed = dress(frames, |j, k| vw_matrix(alpha, hs.s_at(j), *s_tilde.get(j, k), *sht.get(j, k), t0))?;
    let complex = nets::sym_complex(&dressed, XI, 0.0)?;
    let net = complex.to_real(DOUBLE_REALITY_TOL)?;
    Ok(DoubleBacklund { s_hat_tilde: sht, complex, net })
}

/// Deviations from the defining properties of a Bäcklund pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacklundCheck {
    /// `max | |x̃ − x| − |sin α| |`.
    pub distance: f64,
    /// `max |⟨n, ñ⟩ − cos α|`.
    pub angle: f64,
    /// `max |⟨x̃ − x, n⟩|, |⟨x̃ − x, ñ⟩|`.
    pub orthogonality: f64,
}

pub fn check_pair(net: &ContactElementNet, other: &ContactElementNet, alpha: f64) -> BacklundCheck {
    let mut c = BacklundCheck { distance: 0.0, angle: 0.0, orthogonality: 0.0 };
    let (sa, ca) = (alpha.sin().abs(), alpha.cos());
    for (i, x) in net.x.values().iter().enumerate() {
        let (n, xt, nt) = (net.n.values()[i], other.x.values()[i], other.n.values()[i]);
        let dx = xt - *x;
        c.distance = c.distance.max((dx.norm() - sa).abs());
        c.angle = c.angle.max((n.dot(nt) - ca).abs());
        c.orthogonality = c.orthogonality.max(dx.dot(n).abs()).max(dx.dot(nt).abs());
    }
    c
}

/// Which `k`-edge matrix the periodicity search targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KEdge {
    /// `B(α)`.
    B,
    /// `D(β)`.
    D,
}

/// Search line for the periodicity parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSlice {
    /// `α ∈ (0, π)`.
    Real,
    /// `α = π/2 + iy`, `y ∈ (0, y_max]`, where `sin α = cosh y > 1`.
    Imaginary { y_max: f64 },
}

impl AlphaSlice {
    fn range(self) -> (f64, f64) {
        match self {
            AlphaSlice::Real => (1e-6, std::f64::consts::PI - 1e-6),
            AlphaSlice::Imaginary { y_max } => (1e-6, y_max),
        }
    }

    pub fn alpha(self, x: f64) -> C64 {
        match self {
            AlphaSlice::Real => C64::from(x),
            AlphaSlice::Imaginary { .. } => C64::new(std::f64::consts::FRAC_PI_2, x),
        }
    }
}

/// Eigenvalue-ratio phase `|arg(ω₊/ω₋)| ∈ [0, π]` of a `k`-edge matrix, or
/// `None` when the matrix is not elliptic (`|ω₊/ω₋| ≠ 1`).
pub fn eigen_phase(m: &Quat) -> Option<f64> {
    let (wp, wm) = eigenvalues(m);
    let r = wp / wm;
    if !r.is_finite() || (r.norm() - 1.0).abs() > 1e-9 {
        return None;
    }
    Some(r.arg().abs())
}

/// Distance of `M^n / √det(M^n)` from the nearer of `±1`.
pub fn power_residual(m: &Quat, n: u32) -> f64 {
    let scale = m.det().sqrt();
    let mn = m.scale(scale.inv()).pow(n);
    mn.max_diff(&Quat::identity()).min(mn.max_diff(&-Quat::identity()))
}

/// Result of [`find_periodic_alpha`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicAlpha {
    pub alpha: C64,
    /// Position on the slice.
    pub x: f64,
    pub phase: f64,
    pub target: f64,
    /// Max over rows of [`power_residual`] at `N₀`.
    pub residual: f64,
    /// Bracket the root was bisected in.
    pub bracket: (f64, f64),
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Phase of the chosen `k`-edge matrix at slice position `x`, on row `j`.
pub fn slice_phase(hs: &HsLaxData, which: KEdge, slice: AlphaSlice, x: f64, j: i32) -> Option<f64> {
    let w = match which {
        KEdge::B => Which::B,
        KEdge::D => Which::D,
    };
    build_abcd(hs, slice.alpha(x), w, j).ok().as_ref().and_then(eigen_phase)
}

/// Parameter on `slice` for which the `k`-edge matrix has eigenvalue phase
/// `2πp/N₀`, so that its `N₀`-th power is a multiple of the identity.
///
/// The slice is sampled to bracket a crossing inside an elliptic stretch,
/// then bisected to a phase tolerance of `1e−12`.
pub fn find_periodic_alpha(hs: &HsLaxData, n0: u32, p: u32, which: KEdge, slice: AlphaSlice) -> Result<PeriodicAlpha> {
    if n0 < 2 || p == 0 || gcd(p, n0) != 1 {
        return Err(Error::NoRoot(format!("p = {p} must be coprime to N₀ = {n0} ≥ 2")));
    }
    let full = 2.0 * std::f64::consts::PI * p as f64 / n0 as f64;
    let target = full.min(2.0 * std::f64::consts::PI - full);
    let j = hs.start;
    let (lo, hi) = slice.range();
    let samples = 800;
    let xs: Vec<f64> = (0..=samples).map(|i| lo + (hi - lo) * i as f64 / samples as f64).collect();
    let ph: Vec<Option<f64>> = xs.iter().map(|x| slice_phase(hs, which, slice, *x, j)).collect();
    let mut bracket = None;
    for i in 0..samples {
        if let (Some(a), Some(b)) = (ph[i], ph[i + 1]) {
            if (a - target) * (b - target) <= 0.0 {
                bracket = Some((xs[i], xs[i + 1], a));
                break;
            }
        }
    }
    let (mut a, mut b, fa) = bracket.ok_or_else(|| {
        let range = ph.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |r, v| (r.0.min(*v), r.1.max(*v)));
        Error::NoRoot(format!("phase {target} outside the attained range [{}, {}]", range.0, range.1))
    })?;
    let bracket0 = (a, b);
    let mut sa = (fa - target).signum();
    let mut x = 0.5 * (a + b);
    let mut phase = fa;
    for _ in 0..200 {
        x = 0.5 * (a + b);
        phase = slice_phase(hs, which, slice, x, j)
            .ok_or_else(|| Error::NoRoot("bracket left the elliptic range".into()))?;
        if (phase - target).abs() <= 1e-12 || b - a <= f64::EPSILON * x.abs().max(1.0) {
            break;
        }
        if (phase - target).signum() == sa {
            a = x;
            sa = (phase - target).signum();
        } else {
            b = x;
        }
    }
    let alpha = slice.alpha(x);
    let w = if which == KEdge::B { Which::B } else { Which::D };
    let mut residual = 0.0f64;
    for row in hs.start..=hs.j_end() {
        residual = residual.max(power_residual(&build_abcd(hs, alpha, w, row)?, n0));
    }
    Ok(PeriodicAlpha { alpha, x, phase, target, residual, bracket: bracket0 })
}

/// Fixed point `ζ` of `m` on the eigenvector of `ω₊`.
pub fn fixed_point(m: &Quat) -> Result<C64> {
    let (wp, _) = eigenvalues(m);
    let a = (wp - m.m22, m.m21);
    let b = (m.m12, wp - m.m11);
    let (num, den) = if a.0.norm() + a.1.norm() >= b.0.norm() + b.1.norm() { a } else { b };
    if den.norm() <= POLE_TOL {
        return Err(Error::PoleHit { denom: den.norm() });
    }
    Ok(num / den)
}

/// `s̃` from the affine recurrences for `S̃ = 1/(s̃ − ζ)`.
///
/// `ζ(j_min)` is the fixed point of the first `k`-edge matrix and
/// `ζ(j+1) = A•ζ(j)`. Returns `s̃` and the `ζ` sequence.
pub fn linearize(
    hs: &HsLaxData,
    params: &BacklundParams,
    which: Transform,
    domain: Domain,
) -> Result<(Grid<C64>, Vec<C64>)> {
    check_rows(hs, domain)?;
    let (mj, mk) = which.mats();
    let par = which.param(params);
    let b0 = build_abcd(hs, par, mk, domain.j_min)?;
    let mut zeta = vec![fixed_point(&b0)?];
    for j in domain.j_min..domain.j_max {
        let next = moebius(&build_abcd(hs, par, mj, j)?, *zeta.last().unwrap())?;
        zeta.push(next);
    }
    let affine = |m: &Quat, z: C64| {
        let g = m.m21 * z + m.m22;
        let det = m.det();
        (g * g / det, m.m21 * g / det)
    };
    let seed = which.seed(params) - zeta[0];
    if seed.norm() <= POLE_TOL {
        return Err(Error::PoleHit { denom: seed.norm() });
    }
    let mut big = Grid::filled(domain, seed.inv());
    for j in domain.j_min..domain.j_max {
        let i = (j - domain.j_min) as usize;
        let (p, q) = affine(&build_abcd(hs, par, mj, j)?, zeta[i]);
        let next = p * *big.get(j, domain.k_min) + q;
        big.set(j + 1, domain.k_min, next);
    }
    for j in domain.j_min..=domain.j_max {
        let i = (j - domain.j_min) as usize;
        let (p, q) = affine(&build_abcd(hs, par, mk, j)?, zeta[i]);
        for k in domain.k_min..domain.k_max {
            let next = p * *big.get(j, k) + q;
            big.set(j, k + 1, next);
        }
    }
    let mut out = Grid::filled(domain, C64::from(0.0));
    for (j, k) in domain.vertices() {
        let s = *big.get(j, k);
        if s.norm() <= POLE_TOL {
            return Err(Error::PoleHit { denom: s.norm() });
        }
        out.set(j, k, s.inv() + zeta[(j - domain.j_min) as usize]);
    }
    Ok((out, zeta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connect::{build_ck_connection, gauge_to_hs};
    use crate::revolution::{profile_elliptic, EllipticParams};
    use std::f64::consts::PI;

    fn hs(kappa: f64) -> HsLaxData {
        let params = EllipticParams::standard(kappa, 4, 0.3).unwrap();
        let p = profile_elliptic(&params, -1, (0, 8.min(params.safe_range(-1).1))).unwrap();
        let (conn, data) = build_ck_connection(&p, PI / 3.0, 2, 0.0).unwrap();
        gauge_to_hs(&conn, &data).unwrap().hs
    }

    fn dom(h: &HsLaxData, nk: i32) -> Domain {
        Domain::new(h.start, h.j_end(), 0, nk - 1).unwrap()
    }

    #[test]
    fn moebius_identity_and_composition() {
        let z = C64::new(0.3, -0.7);
        assert_eq!(moebius(&Quat::identity(), z).unwrap(), z);
        let m1 = Quat::new(C64::new(1.0, 0.2), C64::new(0.5, 0.0), C64::new(-0.3, 0.1), C64::new(2.0, 0.0));
        let m2 = Quat::new(C64::new(0.7, 0.0), C64::new(0.0, 1.0), C64::new(0.4, 0.4), C64::new(1.0, -0.5));
        let a = moebius(&(m1 * m2), z).unwrap();
        let b = moebius(&m1, moebius(&m2, z).unwrap()).unwrap();
        assert!((a - b).norm() < 1e-12);
        let pole = Quat::new(ONE, ONE, ONE, -z);
        assert!(matches!(moebius(&pole, z), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn c_is_flipped_transpose_of_a() {
        let h = hs(0.6);
        let s1 = Quat::new(C64::from(0.0), ONE, ONE, C64::from(0.0));
        for al in [C64::from(PI / 3.0), C64::new(PI / 2.0, 0.5)] {
            for j in 0..4 {
                let a = build_abcd(&h, al, Which::A, j).unwrap();
                let c = build_abcd(&h, -al, Which::C, j).unwrap();
                assert!((c + s1 * a.transpose() * s1).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn real_alpha_structure() {
        let h = hs(0.6);
        let a = build_abcd(&h, C64::from(1.0), Which::A, 2).unwrap();
        assert!((a.m11 - a.m22.conj()).norm() < 1e-13);
        assert!((a.m12 - a.m21.conj()).norm() < 1e-13);
    }

    #[test]
    fn face_compatibility() {
        let h = hs(0.6);
        let al = C64::from(0.9);
        for j in 0..4 {
            let lhs = build_abcd(&h, al, Which::B, j + 1).unwrap() * build_abcd(&h, al, Which::A, j).unwrap();
            let rhs = build_abcd(&h, al, Which::A, j).unwrap() * build_abcd(&h, al, Which::B, j).unwrap();
            let s = rhs.m11 / lhs.m11;
            assert!((lhs.scale(s) - rhs).max_abs() < 1e-10 * rhs.max_abs());
        }
    }

    #[test]
    fn unitary_propagation() {
        let h = hs(0.6);
        let d = dom(&h, 10);
        for al in [PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
            let s = propagate(&h, &BacklundParams::single(al, 0.3), Transform::Tilde, d).unwrap();
            assert!(s.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn conjugate_propagation() {
        let h = hs(0.6);
        let d = dom(&h, 8);
        let p = BacklundParams::condition_c(C64::new(PI / 2.0, 0.5), C64::from_polar(1.0, 0.3));
        let st = propagate(&h, &p, Transform::Tilde, d).unwrap();
        let sh = propagate(&h, &p, Transform::Hat, d).unwrap();
        for (a, b) in st.values().iter().zip(sh.values()) {
            assert!((a - b.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn single_transform_properties() {
        let h = hs(0.6);
        let d = dom(&h, 8);
        let frames = base_frames(&h, d, 0.0).unwrap();
        let base = nets::sym(&frames, XI, 0.0).unwrap();
        for al in [PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
            let s = propagate(&h, &BacklundParams::single(al, 0.3), Transform::Tilde, d).unwrap();
            let t = single_backlund(&frames, &h, al, &s, 0.0).unwrap();
            let c = check_pair(&base, &t, al);
            assert!(c.distance < 1e-9 && c.angle < 1e-9 && c.orthogonality < 1e-9, "{c:?}");
            for (j, k) in d.faces() {
                if let Ok((kk, _, _)) = nets::curvatures(&t, j, k) {
                    assert!((kk + 1.0).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn vw_closed_form_matches_product() {
        let al = C64::new(PI / 2.0, 0.5);
        let (s, st, sh) = (C64::from_polar(1.0, 0.4), C64::from_polar(1.0, -1.1), C64::from_polar(1.0, 1.1));
        let sht = permutability(al, s, st, sh).unwrap();
        let prod = v_matrix(-al, st, sht, 0.2) * w_matrix(al, s, st, 0.2);
        assert!(prod.max_diff(&vw_matrix(al, s, st, sht, 0.2)) < 1e-14);
    }

    #[test]
    fn permutability_special_value() {
        let s = C64::from_polar(1.0, 0.7);
        let st = C64::from_polar(1.0, 0.2);
        let r = permutability(C64::from(1.1), s, st, st.inv()).unwrap();
        assert!((r - s.inv()).norm() < 1e-15);
    }

    #[test]
    fn double_transform_is_real() {
        let h = hs(0.6);
        let d = dom(&h, 8);
        let frames = base_frames(&h, d, 0.0).unwrap();
        let p = BacklundParams::condition_c(C64::new(PI / 2.0, 0.5), C64::from_polar(1.0, 0.3));
        let st = propagate(&h, &p, Transform::Tilde, d).unwrap();
        let sh = propagate(&h, &p, Transform::Hat, d).unwrap();
        let single = single_backlund_complex(&frames, &h, p.alpha, &st, 0.0).unwrap();
        assert!(single.imag_residue() > 1e-3);
        let db = double_backlund(&frames, &h, &p, &st, &sh, 0.0).unwrap();
        assert!(db.complex.imag_residue() < 1e-9);
        assert!(db.s_hat_tilde.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-10));
        assert!(db.net.n.values().iter().all(|n| (n.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn periodic_alpha_on_the_imaginary_slice() {
        let h = hs(0.6);
        for n0 in [8, 9] {
            let r = find_periodic_alpha(&h, n0, 1, KEdge::B, AlphaSlice::Imaginary { y_max: 3.0 }).unwrap();
            assert!(r.residual < 1e-9, "{r:?}");
        }
        assert!(matches!(find_periodic_alpha(&h, 8, 1, KEdge::B, AlphaSlice::Real), Err(Error::NoRoot(_))));
    }

    #[test]
    fn periodic_alpha_real_slice() {
        let h = hs(1.4);
        let r = find_periodic_alpha(&h, 9, 1, KEdge::B, AlphaSlice::Real).unwrap();
        assert!(r.residual < 1e-9);
        let d = find_periodic_alpha(&h, 9, 1, KEdge::D, AlphaSlice::Real).unwrap();
        assert!(d.residual < 1e-9);
    }

    #[test]
    fn linearization_matches_moebius() {
        let h = hs(0.6);
        let d = dom(&h, 20);
        let p = BacklundParams::single(1.2, 0.4);
        let (lin, zeta) = linearize(&h, &p, Transform::Tilde, d).unwrap();
        let mob = propagate(&h, &p, Transform::Tilde, d).unwrap();
        for (a, b) in lin.values().iter().zip(mob.values()) {
            assert!((a - b).norm() < 1e-9);
        }
        for (i, z) in zeta.iter().enumerate() {
            let b = build_abcd(&h, p.alpha, Which::B, h.start + i as i32).unwrap();
            assert!((moebius(&b, *z).unwrap() - z).norm() < 1e-10);
        }
    }
}
