//! Quad-lattice domains, discrete connections with spectral dependence,
//! flatness, parallel frames and gauge actions.
//!
//! Edges are stored in positive orientation only: `L(j, k)` lives on the
//! edge `(j, k) → (j+1, k)` and `M(j, k)` on `(j, k) → (j, k+1)`. Reversed
//! edges carry the inverse.

use crate::error::{Error, Result};
use crate::quat::{QJet, Quat};

/// Default flatness tolerance, relative to the frame size.
pub const FLAT_TOL: f64 = 1e-9;

/// Inclusive rectangle of lattice vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Domain {
    pub j_min: i32,
    pub j_max: i32,
    pub k_min: i32,
    pub k_max: i32,
}

impl Domain {
    pub fn new(j_min: i32, j_max: i32, k_min: i32, k_max: i32) -> Result<Self> {
        if j_max < j_min || k_max < k_min {
            return Err(Error::ShapeMismatch(format!("empty domain j {j_min}..={j_max}, k {k_min}..={k_max}")));
        }
        Ok(Self { j_min, j_max, k_min, k_max })
    }

    pub fn nj(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn nk(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.nj() * self.nk()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, j: i32, k: i32) -> bool {
        (self.j_min..=self.j_max).contains(&j) && (self.k_min..=self.k_max).contains(&k)
    }

    /// Vertices in row-major order, `j` outer.
    pub fn vertices(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        (self.j_min..=self.j_max).flat_map(move |j| (self.k_min..=self.k_max).map(move |k| (j, k)))
    }

    /// Faces labelled by their lower-left vertex.
    pub fn faces(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        (self.j_min..self.j_max).flat_map(move |j| (self.k_min..self.k_max).map(move |k| (j, k)))
    }

    pub fn face_count(&self) -> usize {
        (self.nj() - 1) * (self.nk() - 1)
    }

    /// Sub-domain carrying the `j`-edges.
    pub fn j_edges(&self) -> Option<Domain> {
        (self.j_max > self.j_min).then_some(Domain { j_max: self.j_max - 1, ..*self })
    }

    /// Sub-domain carrying the `k`-edges.
    pub fn k_edges(&self) -> Option<Domain> {
        (self.k_max > self.k_min).then_some(Domain { k_max: self.k_max - 1, ..*self })
    }

    pub fn transpose(&self) -> Domain {
        Domain { j_min: self.k_min, j_max: self.k_max, k_min: self.j_min, k_max: self.j_max }
    }
}

/// Values over a [`Domain`], row-major with `j` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    domain: Domain,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_fn(domain: Domain, mut f: impl FnMut(i32, i32) -> T) -> Self {
        let data = domain.vertices().map(|(j, k)| f(j, k)).collect();
        Self { domain, data }
    }

    pub fn try_from_fn<E>(
        domain: Domain,
        mut f: impl FnMut(i32, i32) -> std::result::Result<T, E>,
    ) -> std::result::Result<Self, E> {
        let data = domain.vertices().map(|(j, k)| f(j, k)).collect::<std::result::Result<_, _>>()?;
        Ok(Self { domain, data })
    }

    pub fn from_vec(domain: Domain, data: Vec<T>) -> Result<Self> {
        if data.len() != domain.len() {
            return Err(Error::ShapeMismatch(format!("{} values for {} vertices", data.len(), domain.len())));
        }
        Ok(Self { domain, data })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    fn index(&self, j: i32, k: i32) -> usize {
        assert!(self.domain.contains(j, k), "({j}, {k}) outside {:?}", self.domain);
        (j - self.domain.j_min) as usize * self.domain.nk() + (k - self.domain.k_min) as usize
    }

    pub fn get(&self, j: i32, k: i32) -> &T {
        &self.data[self.index(j, k)]
    }

    pub fn get_mut(&mut self, j: i32, k: i32) -> &mut T {
        let i = self.index(j, k);
        &mut self.data[i]
    }

    pub fn set(&mut self, j: i32, k: i32, v: T) {
        *self.get_mut(j, k) = v;
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = ((i32, i32), &T)> {
        self.domain.vertices().zip(self.data.iter())
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid { domain: self.domain, data: self.data.iter().map(&mut f).collect() }
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(domain: Domain, v: T) -> Self {
        Self { domain, data: vec![v; domain.len()] }
    }

    /// Swap the roles of `j` and `k`.
    pub fn transpose(&self) -> Grid<T> {
        let d = self.domain.transpose();
        Grid::from_fn(d, |j, k| self.get(k, j).clone())
    }
}

/// Edge-valued connection with value and `t`-derivative at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionFamily {
    domain: Domain,
    pub t0: f64,
    l: Option<Grid<QJet>>,
    m: Option<Grid<QJet>>,
}

impl ConnectionFamily {
    /// `l` lives on `domain.j_edges()`, `m` on `domain.k_edges()`.
    pub fn new(domain: Domain, t0: f64, l: Option<Grid<QJet>>, m: Option<Grid<QJet>>) -> Result<Self> {
        if l.as_ref().map(|g| g.domain()) != domain.j_edges() {
            return Err(Error::ShapeMismatch("L grid does not match the j-edges".into()));
        }
        if m.as_ref().map(|g| g.domain()) != domain.k_edges() {
            return Err(Error::ShapeMismatch("M grid does not match the k-edges".into()));
        }
        Ok(Self { domain, t0, l, m })
    }

    pub fn from_fns(
        domain: Domain,
        t0: f64,
        mut l: impl FnMut(i32, i32) -> QJet,
        mut m: impl FnMut(i32, i32) -> QJet,
    ) -> Self {
        Self {
            domain,
            t0,
            l: domain.j_edges().map(|d| Grid::from_fn(d, &mut l)),
            m: domain.k_edges().map(|d| Grid::from_fn(d, &mut m)),
        }
    }

    pub fn identity(domain: Domain) -> Self {
        Self::from_fns(domain, 0.0, |_, _| QJet::identity(), |_, _| QJet::identity())
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Connection on the edge `(j, k) → (j+1, k)`.
    pub fn l(&self, j: i32, k: i32) -> &QJet {
        self.l.as_ref().expect("domain has no j-edges").get(j, k)
    }

    /// Connection on the edge `(j, k) → (j, k+1)`.
    pub fn m(&self, j: i32, k: i32) -> &QJet {
        self.m.as_ref().expect("domain has no k-edges").get(j, k)
    }

    pub fn set_l(&mut self, j: i32, k: i32, v: QJet) {
        self.l.as_mut().expect("domain has no j-edges").set(j, k, v);
    }

    pub fn set_m(&mut self, j: i32, k: i32, v: QJet) {
        self.m.as_mut().expect("domain has no k-edges").set(j, k, v);
    }

    pub fn l_grid(&self) -> Option<&Grid<QJet>> {
        self.l.as_ref()
    }

    pub fn m_grid(&self) -> Option<&Grid<QJet>> {
        self.m.as_ref()
    }

    /// Swap the roles of `j` and `k`.
    pub fn transpose(&self) -> ConnectionFamily {
        ConnectionFamily {
            domain: self.domain.transpose(),
            t0: self.t0,
            l: self.m.as_ref().map(Grid::transpose),
            m: self.l.as_ref().map(Grid::transpose),
        }
    }

    /// Largest entrywise difference over all edges, both layers.
    pub fn max_diff(&self, o: &ConnectionFamily) -> f64 {
        let mut r = 0.0f64;
        for (a, b) in [(&self.l, &o.l), (&self.m, &o.m)] {
            if let (Some(a), Some(b)) = (a, b) {
                for (x, y) in a.values().iter().zip(b.values()) {
                    r = r.max(x.max_diff(y));
                }
            }
        }
        r
    }
}

/// Face residual `M(j+1,k) L(j,k) − L(j,k+1) M(j,k)` in both layers.
pub fn face_residual(conn: &ConnectionFamily, j: i32, k: i32) -> f64 {
    let lhs = *conn.m(j + 1, k) * *conn.l(j, k);
    let rhs = *conn.l(j, k + 1) * *conn.m(j, k);
    lhs.max_diff(&rhs)
}

/// Max over faces of the compatibility residual.
pub fn flatness_residual(conn: &ConnectionFamily) -> f64 {
    conn.domain().faces().map(|(j, k)| face_residual(conn, j, k)).fold(0.0, f64::max)
}

/// Parallel frame `Φ` with `Φ(q) = η_{qp} Φ(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFamily {
    pub phi: Grid<QJet>,
}

impl FrameFamily {
    pub fn domain(&self) -> Domain {
        self.phi.domain()
    }

    pub fn get(&self, j: i32, k: i32) -> &QJet {
        self.phi.get(j, k)
    }

    pub fn transpose(&self) -> FrameFamily {
        FrameFamily { phi: self.phi.transpose() }
    }
}

/// Integrate along `j` at `k_min`, then along `k`; the base vertex is
/// `(j_min, k_min)`. Path independence is checked on every face afterwards.
pub fn integrate_frame(conn: &ConnectionFamily, phi00: QJet, tol: f64) -> Result<FrameFamily> {
    let d = conn.domain();
    phi00.val.inv()?;
    let mut phi = Grid::filled(d, phi00);
    for j in d.j_min..d.j_max {
        let next = *conn.l(j, d.k_min) * *phi.get(j, d.k_min);
        phi.set(j + 1, d.k_min, next);
    }
    for j in d.j_min..=d.j_max {
        for k in d.k_min..d.k_max {
            let m = conn.m(j, k);
            m.val.inv()?;
            let next = *m * *phi.get(j, k);
            phi.set(j, k + 1, next);
        }
    }
    let mut residual = 0.0f64;
    for (j, k) in d.faces() {
        let via_l = *conn.l(j, k + 1) * *phi.get(j, k + 1);
        let here = phi.get(j + 1, k + 1);
        residual = residual.max(via_l.max_diff(here) / here.val.max_abs().max(1.0));
    }
    if residual > tol {
        return Err(Error::NotFlat { residual });
    }
    for v in phi.values() {
        v.val.inv()?;
    }
    Ok(FrameFamily { phi })
}

/// `(G·η)_{qp} = G_q η_{qp} G_p⁻¹`.
pub fn gauge(conn: &ConnectionFamily, g: &Grid<QJet>) -> Result<ConnectionFamily> {
    let d = conn.domain();
    if g.domain() != d {
        return Err(Error::ShapeMismatch("gauge grid does not match the connection".into()));
    }
    let ginv = Grid::try_from_fn(d, |j, k| g.get(j, k).inv())?;
    let l = match d.j_edges() {
        Some(e) => Some(Grid::from_fn(e, |j, k| *g.get(j + 1, k) * *conn.l(j, k) * *ginv.get(j, k))),
        None => None,
    };
    let m = match d.k_edges() {
        Some(e) => Some(Grid::from_fn(e, |j, k| *g.get(j, k + 1) * *conn.m(j, k) * *ginv.get(j, k))),
        None => None,
    };
    ConnectionFamily::new(d, conn.t0, l, m)
}

/// `Φ ↦ GΦ`.
pub fn gauge_frame(frames: &FrameFamily, g: &Grid<QJet>) -> Result<FrameFamily> {
    if g.domain() != frames.domain() {
        return Err(Error::ShapeMismatch("gauge grid does not match the frame".into()));
    }
    for v in g.values() {
        v.val.inv()?;
    }
    Ok(FrameFamily { phi: Grid::from_fn(frames.domain(), |j, k| *g.get(j, k) * *frames.get(j, k)) })
}

/// Right multiplication `Φ ↦ ΦH` by a vertex-independent `H`.
pub fn right_multiply(frames: &FrameFamily, h: QJet) -> FrameFamily {
    FrameFamily { phi: frames.phi.map(|p| *p * h) }
}

/// Constant matrix as a jet.
pub fn constant(q: Quat) -> QJet {
    QJet::constant(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn dom(nj: i32, nk: i32) -> Domain {
        Domain::new(0, nj, 0, nk).unwrap()
    }

    fn rot3(phi: f64) -> Quat {
        Quat::diag(C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi))
    }

    #[test]
    fn identity_connection_is_flat() {
        let c = ConnectionFamily::identity(dom(3, 4));
        assert_eq!(flatness_residual(&c), 0.0);
        let f = integrate_frame(&c, QJet::identity(), FLAT_TOL).unwrap();
        assert!(f.phi.values().iter().all(|p| p.max_diff(&QJet::identity()) == 0.0));
    }

    #[test]
    fn single_defect_breaks_flatness() {
        let mut c = ConnectionFamily::identity(dom(2, 2));
        // exp(0.1·iσ3)
        c.set_l(0, 0, QJet::constant(rot3(0.1)));
        assert!(flatness_residual(&c) > 0.09);
        assert!(matches!(integrate_frame(&c, QJet::identity(), FLAT_TOL), Err(Error::NotFlat { .. })));
    }

    #[test]
    fn constant_connection_two_steps() {
        let g = QJet::new(Quat::from_real(0.8, 0.1, -0.2, 0.3), Quat::from_real(0.0, 0.5, 0.1, 0.0));
        let c = ConnectionFamily::from_fns(dom(1, 1), 0.0, |_, _| g, |_, _| g);
        let p0 = QJet::constant(Quat::from_real(1.0, 0.0, 0.3, 0.0));
        let f = integrate_frame(&c, p0, FLAT_TOL).unwrap();
        assert!(f.get(1, 1).max_diff(&(g * g * p0)) < 1e-14);
    }

    #[test]
    fn gauge_round_trip() {
        let d = dom(2, 3);
        let c = ConnectionFamily::from_fns(
            d,
            0.0,
            |j, k| QJet::constant(rot3(0.1 * j as f64 + 0.05 * k as f64)),
            |j, _| QJet::constant(rot3(0.2 - 0.03 * j as f64)),
        );
        let g = Grid::from_fn(d, |j, k| {
            QJet::new(Quat::from_real(1.0, 0.1 * j as f64, 0.2, 0.05 * k as f64), Quat::from_real(0.0, 0.1, 0.0, 0.2))
        });
        let gi = Grid::try_from_fn(d, |j, k| g.get(j, k).inv()).unwrap();
        let back = gauge(&gauge(&c, &g).unwrap(), &gi).unwrap();
        assert!(back.max_diff(&c) < 1e-13);
        let unit = Grid::filled(d, QJet::identity());
        assert!(gauge(&c, &unit).unwrap().max_diff(&c) == 0.0);
    }
}
