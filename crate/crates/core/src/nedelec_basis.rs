//! Hierarchical H(curl) shape functions on the reference square and cube.
//!
//! Every shape function is either a gradient `∇w` or a sum of terms
//! `a ∇b`, so values and curls follow from first derivatives of scalar
//! factors only: `curl(a ∇b) = ∇a × ∇b` and `curl ∇w = 0`. Scalars are
//! carried as [`Jet`]s (value plus gradient).
//!
//! Local DoF order: all edges (`p` functions each), then all faces in 3D,
//! then the interior. Per edge: the lowest-order function followed by
//! `p-1` gradients. Per face: type 1 `(i,j)`, type 2 `(i,j)`, then the two
//! families of type 3, with `(i,j)` stored at `i(p-1)+j`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::geometry::{MapPoint, Vec3};
use crate::mesh::{edges, FACES_3D};
use crate::orientation::CellOrientation;
use crate::poly1d::{LegendreTable, PolynomialDegree};

/// Scalar value with its gradient on the reference cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: Vec3,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, g: Vec3::zeros() }
    }

    pub fn coordinate(axis: usize, x: f64) -> Self {
        let mut g = Vec3::zeros();
        g[axis] = 1.0;
        Self { v: x, g }
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            v: self.v * s,
            g: self.g * s,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            g: self.g + o.g,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            v: self.v - o.v,
            g: self.g - o.g,
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            g: self.g * o.v + o.g * self.v,
        }
    }
}

/// Value and curl of one shape function at one point.
///
/// In 2D both are embedded in 3D: the value has zero `z` component and the
/// scalar curl is stored in `curl.z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeValue {
    pub value: Vec3,
    pub curl: Vec3,
}

impl ShapeValue {
    fn gradient(w: Jet) -> Self {
        Self {
            value: w.g,
            curl: Vec3::zeros(),
        }
    }

    /// `a ∇b`.
    fn term(a: Jet, b: Jet) -> Self {
        Self {
            value: b.g * a.v,
            curl: a.g.cross(&b.g),
        }
    }
}

impl Add for ShapeValue {
    type Output = ShapeValue;
    fn add(self, o: ShapeValue) -> ShapeValue {
        ShapeValue {
            value: self.value + o.value,
            curl: self.curl + o.curl,
        }
    }
}

impl Sub for ShapeValue {
    type Output = ShapeValue;
    fn sub(self, o: ShapeValue) -> ShapeValue {
        ShapeValue {
            value: self.value - o.value,
            curl: self.curl - o.curl,
        }
    }
}

/// Topological entity carrying a shape function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Edge(usize),
    Face(usize),
    Cell,
}

/// Family and polynomial indices of a shape function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    EdgeLowest,
    EdgeHigher(usize),
    FaceType1(usize, usize),
    FaceType2(usize, usize),
    FaceType3x(usize),
    FaceType3y(usize),
    CellType1(usize, usize, usize),
    CellType2a(usize, usize, usize),
    CellType2b(usize, usize, usize),
    CellType3x(usize, usize),
    CellType3y(usize, usize),
    CellType3z(usize, usize),
}

impl ShapeKind {
    /// Curl-free families.
    pub fn is_gradient(self) -> bool {
        matches!(
            self,
            ShapeKind::EdgeHigher(_) | ShapeKind::FaceType1(..) | ShapeKind::CellType1(..)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeFunctionId {
    pub entity: Entity,
    pub kind: ShapeKind,
}

impl fmt::Display for ShapeFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.entity {
            Entity::Edge(m) => write!(f, "edge{m}.")?,
            Entity::Face(m) => write!(f, "face{m}.")?,
            Entity::Cell => write!(f, "cell.")?,
        }
        match self.kind {
            ShapeKind::EdgeLowest => write!(f, "lowest"),
            ShapeKind::EdgeHigher(i) => write!(f, "higher{i}"),
            ShapeKind::FaceType1(i, j) => write!(f, "t1.{i}.{j}"),
            ShapeKind::FaceType2(i, j) => write!(f, "t2.{i}.{j}"),
            ShapeKind::FaceType3x(j) => write!(f, "t3x.{j}"),
            ShapeKind::FaceType3y(i) => write!(f, "t3y.{i}"),
            ShapeKind::CellType1(i, j, k) => write!(f, "t1.{i}.{j}.{k}"),
            ShapeKind::CellType2a(i, j, k) => write!(f, "t2a.{i}.{j}.{k}"),
            ShapeKind::CellType2b(i, j, k) => write!(f, "t2b.{i}.{j}.{k}"),
            ShapeKind::CellType3x(j, k) => write!(f, "t3x.{j}.{k}"),
            ShapeKind::CellType3y(i, k) => write!(f, "t3y.{i}.{k}"),
            ShapeKind::CellType3z(i, j) => write!(f, "t3z.{i}.{j}"),
        }
    }
}

/// Nédélec element of degree `p` on the reference square or cube.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NedelecElement {
    dim: usize,
    p: usize,
    layout: Vec<ShapeFunctionId>,
}

impl NedelecElement {
    pub fn new(dim: usize, p: PolynomialDegree) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        let p = p.as_usize();
        let n = p - 1;
        let mut layout = Vec::new();
        for m in 0..edges(dim).len() {
            layout.push(ShapeFunctionId {
                entity: Entity::Edge(m),
                kind: ShapeKind::EdgeLowest,
            });
            for i in 0..n {
                layout.push(ShapeFunctionId {
                    entity: Entity::Edge(m),
                    kind: ShapeKind::EdgeHigher(i),
                });
            }
        }
        if dim == 3 {
            for m in 0..6 {
                let e = Entity::Face(m);
                let push = |layout: &mut Vec<ShapeFunctionId>, kind| layout.push(ShapeFunctionId { entity: e, kind });
                for i in 0..n {
                    for j in 0..n {
                        push(&mut layout, ShapeKind::FaceType1(i, j));
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        push(&mut layout, ShapeKind::FaceType2(i, j));
                    }
                }
                for j in 0..n {
                    push(&mut layout, ShapeKind::FaceType3x(j));
                }
                for i in 0..n {
                    push(&mut layout, ShapeKind::FaceType3y(i));
                }
            }
        }
        let mut cell = |kind| {
            layout.push(ShapeFunctionId {
                entity: Entity::Cell,
                kind,
            })
        };
        if dim == 2 {
            for i in 0..n {
                for j in 0..n {
                    cell(ShapeKind::CellType1(i, j, 0));
                }
            }
            for i in 0..n {
                for j in 0..n {
                    cell(ShapeKind::CellType2a(i, j, 0));
                }
            }
            for j in 0..n {
                cell(ShapeKind::CellType3x(j, 0));
            }
            for i in 0..n {
                cell(ShapeKind::CellType3y(i, 0));
            }
        } else {
            let triples = || (0..n).flat_map(move |i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))));
            for (i, j, k) in triples() {
                cell(ShapeKind::CellType1(i, j, k));
            }
            for (i, j, k) in triples() {
                cell(ShapeKind::CellType2a(i, j, k));
            }
            for (i, j, k) in triples() {
                cell(ShapeKind::CellType2b(i, j, k));
            }
            let pairs = || (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)));
            for (j, k) in pairs() {
                cell(ShapeKind::CellType3x(j, k));
            }
            for (i, k) in pairs() {
                cell(ShapeKind::CellType3y(i, k));
            }
            for (i, j) in pairs() {
                cell(ShapeKind::CellType3z(i, j));
            }
        }
        Ok(Self { dim, p, layout })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.len()
    }

    pub fn layout(&self) -> &[ShapeFunctionId] {
        &self.layout
    }

    pub fn dofs_per_edge(&self) -> usize {
        self.p
    }

    pub fn dofs_per_face(&self) -> usize {
        if self.dim == 3 {
            face_dof_count(self.p)
        } else {
            0
        }
    }

    pub fn dofs_per_cell(&self) -> usize {
        let n = self.p - 1;
        if self.dim == 2 {
            2 * n * n + 2 * n
        } else {
            3 * n * n * n + 3 * n * n
        }
    }

    pub fn n_edges(&self) -> usize {
        edges(self.dim).len()
    }

    pub fn n_faces(&self) -> usize {
        if self.dim == 3 {
            6
        } else {
            0
        }
    }

    /// First local index of the DoFs of an entity.
    pub fn entity_offset(&self, e: Entity) -> usize {
        let ne = self.n_edges() * self.p;
        match e {
            Entity::Edge(m) => m * self.p,
            Entity::Face(m) => ne + m * self.dofs_per_face(),
            Entity::Cell => ne + self.n_faces() * self.dofs_per_face(),
        }
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.layout.iter().position(|id| id.to_string() == name)
    }

    /// All shape functions at reference point `xh` for the given orientation.
    pub fn eval_reference(&self, orient: &CellOrientation, xh: &Vec3, out: &mut Vec<ShapeValue>) {
        out.clear();
        out.reserve(self.layout.len());
        let dim = self.dim;
        let p = self.p;
        let n = p - 1;
        let nv = 1 << dim;
        let mut lam = [Jet::constant(0.0); 8];
        let mut sig = [Jet::constant(0.0); 8];
        for v in 0..nv {
            let mut l = Jet::constant(1.0);
            let mut s = Jet::constant(0.0);
            for a in 0..dim {
                let x = Jet::coordinate(a, xh[a]);
                let f = if (v >> a) & 1 == 1 { x } else { Jet::constant(1.0) - x };
                l = l * f;
                s = s + f;
            }
            lam[v] = l;
            sig[v] = s;
        }
        let mut t1 = LegendreTable::new(p + 1);
        let mut t2 = LegendreTable::new(p + 1);
        let mut t3 = LegendreTable::new(p + 1);
        // L_k(t) and l_k(t) as jets.
        let il = |tab: &LegendreTable, t: Jet, k: usize| Jet {
            v: tab.il[k],
            g: t.g * tab.l[k - 1],
        };
        let lj = |tab: &LegendreTable, t: Jet, k: usize| Jet {
            v: tab.l[k],
            g: t.g * tab.dl[k],
        };

        for oe in &orient.edges {
            let [a, b] = oe.local;
            let t = if dim == 2 { sig[b] - sig[a] } else { sig[a] - sig[b] };
            let mu = lam[a] + lam[b];
            out.push(ShapeValue::term(mu.scale(0.5), t));
            if n > 0 {
                t1.fill(t.v);
                for i in 0..n {
                    out.push(ShapeValue::gradient(il(&t1, t, i + 2) * mu));
                }
            }
        }

        if dim == 3 && n > 0 {
            for f in 0..6 {
                let [a0, a1, a3] = orient.face_vertices(f);
                let xi = sig[a0] - sig[a1];
                let eta = sig[a0] - sig[a3];
                let lf = FACES_3D[f]
                    .iter()
                    .fold(Jet::constant(0.0), |s, &v| s + lam[v]);
                t1.fill(xi.v);
                t2.fill(eta.v);
                for i in 0..n {
                    for j in 0..n {
                        out.push(ShapeValue::gradient(lf * il(&t1, xi, i + 2) * il(&t2, eta, j + 2)));
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        let u = ShapeValue::term(lf * lj(&t1, xi, i + 1) * il(&t2, eta, j + 2), xi);
                        let w = ShapeValue::term(lf * il(&t1, xi, i + 2) * lj(&t2, eta, j + 1), eta);
                        out.push(u - w);
                    }
                }
                for j in 0..n {
                    out.push(ShapeValue::term(il(&t2, eta, j + 2) * lf, xi));
                }
                for i in 0..n {
                    out.push(ShapeValue::term(il(&t1, xi, i + 2) * lf, eta));
                }
            }
        }

        if n == 0 {
            return;
        }
        let x = Jet::coordinate(0, xh[0]);
        let y = Jet::coordinate(1, xh[1]);
        let xi = x.scale(2.0) - Jet::constant(1.0);
        let eta = y.scale(2.0) - Jet::constant(1.0);
        t1.fill(xi.v);
        t2.fill(eta.v);
        if dim == 2 {
            for i in 0..n {
                for j in 0..n {
                    out.push(ShapeValue::gradient(il(&t1, xi, i + 2) * il(&t2, eta, j + 2)));
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let u = ShapeValue::term(lj(&t1, xi, i + 1).scale(2.0) * il(&t2, eta, j + 2), x);
                    let w = ShapeValue::term(il(&t1, xi, i + 2) * lj(&t2, eta, j + 1).scale(2.0), y);
                    out.push(u - w);
                }
            }
            for j in 0..n {
                out.push(ShapeValue::term(il(&t2, eta, j + 2), x));
            }
            for i in 0..n {
                out.push(ShapeValue::term(il(&t1, xi, i + 2), y));
            }
            return;
        }
        let z = Jet::coordinate(2, xh[2]);
        let zeta = z.scale(2.0) - Jet::constant(1.0);
        t3.fill(zeta.v);
        let a = |i: usize| il(&t1, xi, i + 2);
        let b = |j: usize| il(&t2, eta, j + 2);
        let c = |k: usize| il(&t3, zeta, k + 2);
        // d/dy L(2y-1) = 2 l(2y-1), similarly for z.
        let db = |j: usize| lj(&t2, eta, j + 1).scale(2.0);
        let dc = |k: usize| lj(&t3, zeta, k + 1).scale(2.0);
        let mut idx = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    idx.push((i, j, k));
                }
            }
        }
        for &(i, j, k) in &idx {
            out.push(ShapeValue::gradient(a(i) * b(j) * c(k)));
        }
        for &(i, j, k) in &idx {
            let g = ShapeValue::gradient(a(i) * b(j) * c(k));
            let fy = a(i) * db(j) * c(k);
            out.push(g - ShapeValue::term(fy.scale(2.0), y));
        }
        for &(i, j, k) in &idx {
            let g = ShapeValue::gradient(a(i) * b(j) * c(k));
            let fy = a(i) * db(j) * c(k);
            let fz = a(i) * b(j) * dc(k);
            out.push(g - ShapeValue::term(fy.scale(2.0), y) - ShapeValue::term(fz.scale(2.0), z));
        }
        for j in 0..n {
            for k in 0..n {
                out.push(ShapeValue::term(b(j) * c(k), x));
            }
        }
        for i in 0..n {
            for k in 0..n {
                out.push(ShapeValue::term(a(i) * c(k), y));
            }
        }
        for i in 0..n {
            for j in 0..n {
                out.push(ShapeValue::term(a(i) * b(j), z));
            }
        }
        debug_assert_eq!(out.len(), self.layout.len());
    }

    /// Shape functions pushed forward to the physical cell.
    pub fn eval_physical(
        &self,
        orient: &CellOrientation,
        xh: &Vec3,
        mp: &MapPoint,
        out: &mut Vec<ShapeValue>,
    ) {
        self.eval_reference(orient, xh, out);
        for s in out.iter_mut() {
            *s = piola(s, mp);
        }
    }
}

/// Number of DoFs of one face of a degree-`p` hexahedral element.
pub fn face_dof_count(p: usize) -> usize {
    let n = p - 1;
    2 * n * n + 2 * n
}

/// Covariant Piola push-forward: `F^{-T} v` and `F curl / det F`.
pub fn piola(s: &ShapeValue, mp: &MapPoint) -> ShapeValue {
    ShapeValue {
        value: mp.inv.transpose() * s.value,
        curl: mp.jac * s.curl / mp.det,
    }
}

/// Tangential trace `n × (v × n)` for a unit normal.
pub fn tangential_trace(v: &Vec3, n: &Vec3) -> Vec3 {
    n.cross(&v.cross(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_counts() {
        for p in 1..=6 {
            let pd = PolynomialDegree::new(p as u32).unwrap();
            let e2 = NedelecElement::new(2, pd).unwrap();
            let e3 = NedelecElement::new(3, pd).unwrap();
            assert_eq!(e2.n_dofs(), 2 * p * (p + 1));
            assert_eq!(e3.n_dofs(), 3 * p * (p + 1) * (p + 1));
        }
    }

    #[test]
    fn names_are_unique() {
        let e = NedelecElement::new(3, PolynomialDegree::new(3).unwrap()).unwrap();
        let mut names: Vec<String> = e.layout().iter().map(|i| i.to_string()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), e.n_dofs());
    }
}
