//! Contact element nets: the Sym formula, edge-constraint checks, Steiner
//! curvatures, cross ratios, principal curvatures and rigid alignment.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{Domain, FrameFamily, Grid};
use crate::quat::{det3, Quat, Vec3};

/// Tolerance on `‖n‖ = 1`.
pub const UNIT_TOL: f64 = 1e-10;
/// Relative imaginary part below which a cross ratio counts as real.
pub const CONCYCLIC_TOL: f64 = 1e-8;
/// Imaginary residue tolerated when reading a complex net as a real one.
pub const REALITY_TOL: f64 = 1e-8;
/// Default parallelism tolerance for principal curvatures.
pub const PRINCIPAL_TOL: f64 = 1e-8;

const DEGENERATE_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ContactElementNet {
    pub x: Grid<Vec3>,
    pub n: Grid<Vec3>,
}

impl ContactElementNet {
    pub fn new(x: Grid<Vec3>, n: Grid<Vec3>) -> Result<Self> {
        if x.domain() != n.domain() {
            return Err(Error::ShapeMismatch("x and n grids differ".into()));
        }
        for ((j, k), v) in n.iter() {
            if (v.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::DegenerateGeometry(format!("‖n({j}, {k})‖ = {}", v.norm())));
            }
        }
        Ok(Self { x, n })
    }

    pub fn domain(&self) -> Domain {
        self.x.domain()
    }

    pub fn transpose(&self) -> Self {
        Self { x: self.x.transpose(), n: self.n.transpose() }
    }

    /// `(R⁻¹xR + T, R⁻¹nR)`.
    pub fn apply_motion(&self, r: &Quat, t: Vec3) -> Result<Self> {
        let ri = r.inv()?;
        let rot = |v: &Vec3| (ri * Quat::embed(*v) * *r).project();
        Ok(Self { x: self.x.map(|v| rot(v) + t), n: self.n.map(rot) })
    }

    /// Largest coordinate difference over positions and normals.
    pub fn max_diff(&self, o: &ContactElementNet) -> f64 {
        let dx = self.x.values().iter().zip(o.x.values()).map(|(a, b)| a.max_diff(*b));
        let dn = self.n.values().iter().zip(o.n.values()).map(|(a, b)| a.max_diff(*b));
        dx.chain(dn).fold(0.0, f64::max)
    }
}

/// Net with complex coordinates, as produced by frames outside the quaternions.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexNet {
    pub x: Grid<[C64; 3]>,
    pub n: Grid<[C64; 3]>,
}

impl ComplexNet {
    /// Largest imaginary part over all coordinates.
    pub fn imag_residue(&self) -> f64 {
        self.x.values().iter().chain(self.n.values()).flat_map(|c| c.iter().map(|z| z.im.abs())).fold(0.0, f64::max)
    }

    /// Real part; fails when the imaginary residue exceeds `tol`.
    pub fn to_real(&self, tol: f64) -> Result<ContactElementNet> {
        let residual = self.imag_residue();
        if !(residual <= tol) {
            return Err(Error::RealityViolated { residual });
        }
        let re = |c: &[C64; 3]| Vec3::new(c[0].re, c[1].re, c[2].re);
        ContactElementNet::new(self.x.map(re), self.n.map(re))
    }
}

fn minus_i_sigma3() -> Quat {
    Quat::embed(Vec3::E3)
}

/// `x = ξ[Φ⁻¹∂Φ]^{tr=0} + τn`, `n = Φ⁻¹(−iσ3)Φ`, keeping complex coordinates.
pub fn sym_complex(frames: &FrameFamily, xi: f64, tau: f64) -> Result<ComplexNet> {
    let d = frames.domain();
    let mut xs = Vec::with_capacity(d.len());
    let mut ns = Vec::with_capacity(d.len());
    for (j, k) in d.vertices() {
        let p = frames.get(j, k);
        let pi = p.val.inv()?;
        let n = (pi * minus_i_sigma3() * p.val).project_complex();
        let dx = (pi * p.dt).project_complex();
        xs.push([0, 1, 2].map(|i| dx[i] * xi + n[i] * tau));
        ns.push(n);
    }
    Ok(ComplexNet { x: Grid::from_vec(d, xs)?, n: Grid::from_vec(d, ns)? })
}

/// Real Sym net; frames must be quaternion valued up to [`REALITY_TOL`].
pub fn sym(frames: &FrameFamily, xi: f64, tau: f64) -> Result<ContactElementNet> {
    sym_complex(frames, xi, tau)?.to_real(REALITY_TOL)
}

/// Face diagonals `(v(j+1,k+1) − v(j,k), v(j+1,k) − v(j,k+1))`.
pub fn diagonals(g: &Grid<Vec3>, j: i32, k: i32) -> (Vec3, Vec3) {
    (*g.get(j + 1, k + 1) - *g.get(j, k), *g.get(j + 1, k) - *g.get(j, k + 1))
}

/// Unit `N` orthogonal to both normal diagonals with `det(xd1, xd2, N) > 0`.
///
/// Vanishing normal diagonals fall back to the plane of the position
/// diagonals; a single surviving diagonal is complemented by the part of
/// `xd1 × xd2` orthogonal to it.
pub fn face_normal(net: &ContactElementNet, j: i32, k: i32) -> Result<Vec3> {
    let (xd1, xd2) = diagonals(&net.x, j, k);
    let (nd1, nd2) = diagonals(&net.n, j, k);
    let xc = xd1.cross(xd2);
    let (l1, l2) = (nd1.norm(), nd2.norm());
    let nc = nd1.cross(nd2);
    let raw = if nc.norm() > DEGENERATE_REL * l1 * l2 && nc.norm() > 0.0 {
        nc
    } else if l1.max(l2) <= DEGENERATE_REL {
        xc
    } else {
        let d = if l1 >= l2 { nd1 } else { nd2 }.scale(1.0 / l1.max(l2));
        xc - d.scale(xc.dot(d))
    };
    let mut big = raw.normalized().ok_or(Error::DegenerateFace { j, k })?;
    if det3(xd1, xd2, big) < 0.0 {
        big = -big;
    }
    Ok(big)
}

/// Per-face curvature and cross-ratio data.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceReport {
    pub j: i32,
    pub k: i32,
    pub gauss: Option<f64>,
    pub mean: Option<f64>,
    pub normal: Option<Vec3>,
    pub cross_ratio: Option<C64>,
    pub concyclic: bool,
    pub embedded: bool,
    pub degenerate: bool,
}

/// `K` and `H` by the Steiner determinant ratios.
pub fn curvatures(net: &ContactElementNet, j: i32, k: i32) -> Result<(f64, f64, Vec3)> {
    let big = face_normal(net, j, k)?;
    let (xd1, xd2) = diagonals(&net.x, j, k);
    let (nd1, nd2) = diagonals(&net.n, j, k);
    let den = det3(xd1, xd2, big);
    if !(den > DEGENERATE_REL * xd1.norm() * xd2.norm()) {
        return Err(Error::DegenerateFace { j, k });
    }
    let gauss = det3(nd1, nd2, big) / den;
    let mean = 0.5 * (det3(xd1, nd2, big) + det3(nd1, xd2, big)) / den;
    Ok((gauss, mean, big))
}

/// Quaternionic cross ratio of a face.
///
/// Returns `(scalar part) + i·‖imaginary part‖` and whether the face is
/// locally embedded (real and negative).
pub fn cross_ratio(net: &ContactElementNet, j: i32, k: i32) -> Result<(C64, bool)> {
    let x = &net.x;
    let p = [*x.get(j, k), *x.get(j + 1, k), *x.get(j + 1, k + 1), *x.get(j, k + 1)];
    cross_ratio_points(p).ok_or(Error::ZeroEdge { j, k })
}

/// Cross ratio of four points in R³; `None` on a zero edge.
pub fn cross_ratio_points(p: [Vec3; 4]) -> Option<(C64, bool)> {
    let e = |a: usize, b: usize| Quat::embed(p[a] - p[b]);
    let inv = |q: Quat| q.inv().ok();
    if (0..4).any(|i| (p[i] - p[(i + 1) % 4]).norm() == 0.0) {
        return None;
    }
    let q = e(0, 1) * inv(e(1, 2))? * e(2, 3) * inv(e(3, 0))?;
    let scalar = (q.trace() * 0.5).re;
    let imag = q.project().norm();
    let value = C64::new(scalar, imag);
    let concyclic = imag <= CONCYCLIC_TOL * value.norm();
    Some((value, concyclic && scalar < 0.0))
}

/// Face report that never fails: degeneracies are flagged.
pub fn face_report(net: &ContactElementNet, j: i32, k: i32) -> FaceReport {
    let curv = curvatures(net, j, k).ok();
    let cr = cross_ratio(net, j, k).ok();
    FaceReport {
        j,
        k,
        gauss: curv.map(|c| c.0),
        mean: curv.map(|c| c.1),
        normal: curv.map(|c| c.2),
        cross_ratio: cr.map(|c| c.0),
        concyclic: cr.is_some_and(|(v, _)| v.im <= CONCYCLIC_TOL * v.norm()),
        embedded: cr.is_some_and(|c| c.1),
        degenerate: curv.is_none(),
    }
}

pub fn face_reports(net: &ContactElementNet) -> Vec<FaceReport> {
    net.domain().faces().map(|(j, k)| face_report(net, j, k)).collect()
}

/// Edge direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    J,
    K,
}

/// Outcome of the edge-constraint checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EcReport {
    /// Max over edges of `|⟨δx, σn⟩|`.
    pub edge_residual: f64,
    /// Edges with `δx = 0` or `σn = 0`, as `(dir, j, k)`.
    pub zero_edges: Vec<(Dir, i32, i32)>,
    /// Faces failing the diagonal nondegeneracy.
    pub degenerate_faces: Vec<(i32, i32)>,
}

impl EcReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.edge_residual <= tol && self.zero_edges.is_empty() && self.degenerate_faces.is_empty()
    }
}

fn edges(d: Domain) -> impl Iterator<Item = (Dir, i32, i32, i32, i32)> {
    let je =
        d.j_edges().into_iter().flat_map(|e| e.vertices().map(|(j, k)| (Dir::J, j, k, j + 1, k)).collect::<Vec<_>>());
    let ke =
        d.k_edges().into_iter().flat_map(|e| e.vertices().map(|(j, k)| (Dir::K, j, k, j, k + 1)).collect::<Vec<_>>());
    je.chain(ke)
}

pub fn validate_ec(net: &ContactElementNet) -> EcReport {
    let mut rep = EcReport::default();
    for (dir, j, k, j1, k1) in edges(net.domain()) {
        let dx = *net.x.get(j1, k1) - *net.x.get(j, k);
        let sn = *net.n.get(j1, k1) + *net.n.get(j, k);
        rep.edge_residual = rep.edge_residual.max(dx.dot(sn).abs());
        if dx.norm() <= DEGENERATE_REL || sn.norm() <= DEGENERATE_REL {
            rep.zero_edges.push((dir, j, k));
        }
    }
    for (j, k) in net.domain().faces() {
        if curvatures(net, j, k).is_err() {
            rep.degenerate_faces.push((j, k));
        }
    }
    rep
}

/// Edge principal curvatures `δn = −R δx`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalCurvatures {
    /// On the `j`-edges.
    pub rj: Grid<f64>,
    /// On the `k`-edges.
    pub rk: Grid<f64>,
    /// Largest parallelism residual seen.
    pub residual: f64,
}

fn edge_r(dx: Vec3, dn: Vec3) -> (f64, f64) {
    let l2 = dx.dot(dx);
    let r = -dn.dot(dx) / l2;
    let scale = dx.norm().max(dn.norm());
    (r, (dn + dx.scale(r)).norm() / scale)
}

pub fn principal_curvatures(net: &ContactElementNet, tol: f64) -> Result<PrincipalCurvatures> {
    let d = net.domain();
    let mut residual = 0.0f64;
    let mut edge = |j: i32, k: i32, j1: i32, k1: i32| {
        let dx = *net.x.get(j1, k1) - *net.x.get(j, k);
        let dn = *net.n.get(j1, k1) - *net.n.get(j, k);
        let (r, res) = edge_r(dx, dn);
        residual = residual.max(res);
        r
    };
    let je = d.j_edges().ok_or(Error::ShapeMismatch("no j-edges".into()))?;
    let ke = d.k_edges().ok_or(Error::ShapeMismatch("no k-edges".into()))?;
    let rj = Grid::from_fn(je, |j, k| edge(j, k, j + 1, k));
    let rk = Grid::from_fn(ke, |j, k| edge(j, k, j, k + 1));
    if !(residual <= tol) {
        return Err(Error::NotPrincipal { residual });
    }
    Ok(PrincipalCurvatures { rj, rk, residual })
}

/// Vertices where a principal-curvature product along a lattice direction is `≤ 0`.
///
/// Vertices without two incident edges in either direction are not classified.
pub fn singular_vertices(pc: &PrincipalCurvatures) -> Vec<(i32, i32)> {
    let d = Domain { j_max: pc.rj.domain().j_max + 1, ..pc.rj.domain() };
    d.vertices()
        .filter(|&(j, k)| {
            let in_j = j > d.j_min && j < d.j_max && *pc.rj.get(j - 1, k) * *pc.rj.get(j, k) <= 0.0;
            let in_k = k > d.k_min && k < d.k_max && *pc.rk.get(j, k - 1) * *pc.rk.get(j, k) <= 0.0;
            in_j || in_k
        })
        .collect()
}

/// Rigid motion taking `a` onto `b`: `b ≈ R⁻¹aR + T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub r: Quat,
    pub t: Vec3,
    /// Max over vertices of the position and normal deviations.
    pub residual: f64,
}

fn to_na(v: Vec3) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}

/// Horn's closed-form absolute orientation over unit quaternions.
pub fn rigid_align(a: &ContactElementNet, b: &ContactElementNet) -> Result<Alignment> {
    if a.domain().nj() * a.domain().nk() != b.domain().nj() * b.domain().nk() {
        return Err(Error::ShapeMismatch("nets have different vertex counts".into()));
    }
    let pa = a.x.values();
    let pb = b.x.values();
    let n = pa.len() as f64;
    let ca = pa.iter().fold(Vec3::ZERO, |s, v| s + *v).scale(1.0 / n);
    let cb = pb.iter().fold(Vec3::ZERO, |s, v| s + *v).scale(1.0 / n);
    let mut s = Matrix3::<f64>::zeros();
    let mut cov = Matrix3::<f64>::zeros();
    for (p, q) in pa.iter().zip(pb) {
        let (p, q) = (to_na(*p - ca), to_na(*q - cb));
        s += p * q.transpose();
        cov += p * p.transpose();
    }
    let mut spread = SymmetricEigen::new(cov).eigenvalues.as_slice().to_vec();
    spread.sort_by(|x, y| y.total_cmp(x));
    if !(spread[1] > 1e-12 * spread[0].max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateGeometry("collinear vertices".into()));
    }
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    #[rustfmt::skip]
    let nm = Matrix4::new(
        sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
        syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
        szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
        sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz,
    );
    let eig = SymmetricEigen::new(nm);
    let best = eig.eigenvalues.imax();
    let q = eig.eigenvectors.column(best);
    // Hamilton q rotates by v ↦ qvq̄, which is conjugation by R = q̄ here.
    let r = Quat::from_real(q[0], -q[1], -q[2], -q[3]);
    let ri = r.inv()?;
    let rot = |v: Vec3| (ri * Quat::embed(v) * r).project();
    let t = cb - rot(ca);
    let mut residual = 0.0f64;
    for (i, (p, q)) in pa.iter().zip(pb).enumerate() {
        residual = residual.max((rot(*p) + t).max_diff(*q));
        residual = residual.max(rot(a.n.values()[i]).max_diff(b.n.values()[i]));
    }
    Ok(Alignment { r, t, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Domain;
    use crate::quat::QJet;

    fn dom(nj: i32, nk: i32) -> Domain {
        Domain::new(0, nj, 0, nk).unwrap()
    }

    fn planar(nj: i32, nk: i32) -> ContactElementNet {
        let d = dom(nj, nk);
        ContactElementNet::new(
            Grid::from_fn(d, |j, k| Vec3::new(j as f64 * 0.7 + 0.1 * k as f64, k as f64, 0.0)),
            Grid::filled(d, Vec3::E3),
        )
        .unwrap()
    }

    fn sphere(nj: i32, nk: i32) -> ContactElementNet {
        let d = dom(nj, nk);
        let p = Grid::from_fn(d, |j, k| {
            let (u, v) = (0.3 + 0.2 * j as f64, 0.25 * k as f64);
            Vec3::new(u.sin() * v.cos(), u.sin() * v.sin(), u.cos())
        });
        ContactElementNet::new(p.clone(), p).unwrap()
    }

    #[test]
    fn sym_of_constant_frames() {
        let d = dom(2, 2);
        let f = FrameFamily { phi: Grid::filled(d, QJet::identity()) };
        let net = sym(&f, 2.0, 0.0).unwrap();
        assert!(net.x.values().iter().all(|v| *v == Vec3::ZERO));
        let net = sym(&f, 3.0, 1.0).unwrap();
        assert!(net.x.values().iter().chain(net.n.values()).all(|v| *v == Vec3::E3));
    }

    #[test]
    fn planar_net_is_flat_ec_net() {
        let net = planar(3, 3);
        assert!(validate_ec(&net).passes(1e-14));
        let (k, h, big) = curvatures(&net, 0, 0).unwrap();
        assert_eq!((k, h), (0.0, 0.0));
        assert!(big.max_diff(Vec3::E3) < 1e-15 || big.max_diff(-Vec3::E3) < 1e-15);
    }

    #[test]
    fn sphere_has_unit_curvatures() {
        let net = sphere(4, 4);
        for (j, k) in net.domain().faces() {
            let (kk, h, _) = curvatures(&net, j, k).unwrap();
            assert!((kk - 1.0).abs() < 1e-12 && (h - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn antipodal_edge_flagged() {
        let d = dom(1, 1);
        let n = Grid::from_fn(d, |_, k| if k == 0 { Vec3::E3 } else { -Vec3::E3 });
        let x = Grid::from_fn(d, |j, k| Vec3::new(j as f64, k as f64, 0.0));
        let rep = validate_ec(&ContactElementNet::new(x, n).unwrap());
        assert!(rep.zero_edges.contains(&(Dir::K, 0, 0)));
    }

    #[test]
    fn unit_square_cross_ratio() {
        let p = [Vec3::ZERO, Vec3::E1, Vec3::new(1.0, 1.0, 0.0), Vec3::E2];
        let (cr, emb) = cross_ratio_points(p).unwrap();
        assert!((cr - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(emb);
    }

    #[test]
    fn crossed_concyclic_quad_is_not_embedded() {
        // Four points on the unit circle visited out of cyclic order.
        let at = |deg: f64| Vec3::new(deg.to_radians().cos(), deg.to_radians().sin(), 0.0);
        let (cr, emb) = cross_ratio_points([at(20.0), at(210.0), at(130.0), at(350.0)]).unwrap();
        assert!(cr.im.abs() < 1e-12 && cr.re > 0.0);
        assert!(!emb);
    }

    #[test]
    fn principal_curvatures_of_sphere_and_plane() {
        let pc = principal_curvatures(&sphere(3, 3), PRINCIPAL_TOL).unwrap();
        assert!(pc.rj.values().iter().chain(pc.rk.values()).all(|r| (r + 1.0).abs() < 1e-12));
        assert!(singular_vertices(&pc).is_empty());
        let net = planar(3, 3);
        let pc = principal_curvatures(&net, PRINCIPAL_TOL).unwrap();
        assert!(pc.rj.values().iter().all(|r| *r == 0.0));
        let sing = singular_vertices(&pc);
        let corners = [(0, 0), (0, 3), (3, 0), (3, 3)];
        assert_eq!(sing.len(), 16 - 4);
        assert!(corners.iter().all(|c| !sing.contains(c)));
    }

    #[test]
    fn align_identical_and_moved() {
        let a = sphere(3, 4);
        let al = rigid_align(&a, &a).unwrap();
        assert!(al.residual < 1e-14 && al.t.norm() < 1e-14);
        assert!(al.r.max_diff(&Quat::identity()) < 1e-14 || al.r.max_diff(&-Quat::identity()) < 1e-14);
        let h = std::f64::consts::PI / 6.0;
        let r = Quat::from_real(h.cos(), 0.0, 0.0, h.sin());
        let t = Vec3::new(1.0, 2.0, 3.0);
        let b = a.apply_motion(&r, t).unwrap();
        let al = rigid_align(&a, &b).unwrap();
        assert!(al.residual < 1e-10);
        assert!(al.t.max_diff(t) < 1e-10);
        let v = Vec3::new(0.3, -0.2, 0.9);
        let rv = |q: &Quat| (q.inv().unwrap() * Quat::embed(v) * *q).project();
        assert!(rv(&al.r).max_diff(rv(&r)) < 1e-10);
    }

    #[test]
    fn align_rejects_collinear() {
        let d = dom(3, 0);
        let x = Grid::from_fn(d, |j, _| Vec3::new(j as f64, 0.0, 0.0));
        let net = ContactElementNet::new(x, Grid::filled(d, Vec3::E3)).unwrap();
        assert!(matches!(rigid_align(&net, &net), Err(Error::DegenerateGeometry(_))));
    }
}
