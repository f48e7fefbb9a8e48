//! Hanging-node constraints for H(curl) conformity.
//!
//! Across a hanging facet the refined DoFs are tied to the coarse ones by
//! `u_fine = A u_coarse`. The weights `A` are first computed once per
//! `(dim, p)` in a canonical frame: the coarse facet-local frame with every
//! edge running along `+x`/`+y` and every face in the identity class. They
//! come from an L² projection of coarse tangential traces onto the traces of
//! the refined functions, which is exact because the coarse trace space is
//! contained in the refined one.
//!
//! Actual orientations differ from the canonical frame by signed
//! permutations `D` (edge reversal, face class), giving
//! `A' = D_fine A D_coarseᵀ`. The familiar special cases are available as
//! separate operations: [`adapt_edge_constraints`], [`invert_x`],
//! [`invert_y`], [`exchange_xy`] and [`adapt_internal_edge_constraints`].
//!
//! Refined-face layout (3D), in the coarse facet-local frame:
//!
//! ```text
//!   E6 E7        F2 | F3       E1^C
//! E9  E3  E11   ----+----   E2^C  E3^C
//!  E0 -+- E1     F0 | F1       E0^C
//! E8  E2  E10
//!   E4 E5
//! ```
//!
//! `E0`,`E1` lie on `y = 1/2`, `E2`,`E3` on `x = 1/2`; the remaining child
//! edges halve the coarse edges.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::dofs::DofHandler;
use crate::error::{Error, Result};
use crate::geometry::{CellMap, Vec3};
use crate::mesh::{edges, InterfaceDescriptor, RefinedMesh, FACES_3D};
use crate::nedelec_basis::{face_dof_count, Entity, NedelecElement, ShapeValue};
use crate::orientation::{CellOrientation, FaceClass, OrientationAssignment};
use crate::poly1d::{gauss_rule, PolynomialDegree};

/// Weights with magnitude below this are dropped.
pub const DROP_TOLERANCE: f64 = 1e-13;

/// Refined-side entity of a hanging facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FineEntity {
    /// `E0..E11` in 3D, `C0, C1` in 2D.
    Edge(usize),
    /// `F0..F3`.
    Face(usize),
}

/// Coarse-side entity of a hanging facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoarseEntity {
    /// `E0^C..E3^C` in 3D; the hanging edge itself in 2D.
    Edge(usize),
    Face,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockTag {
    pub row: FineEntity,
    pub col: CoarseEntity,
}

impl fmt::Display for BlockTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = match self.row {
            FineEntity::Edge(i) => i,
            FineEntity::Face(i) => 12 + i,
        };
        let c = match self.col {
            CoarseEntity::Edge(i) => i,
            CoarseEntity::Face => 4,
        };
        write!(f, "C({r},{c})")
    }
}

/// Weights tying the DoFs of one refined entity to one coarse entity.
///
/// In canonical blocks `rows`/`cols` are indices within the entities; in
/// mesh blocks they are global DoF ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    pub tag: BlockTag,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub weights: DMatrix<f64>,
}

impl ConstraintBlock {
    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

/// Signed permutation `actual[a] = sign[a] * canonical[index[a]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPermutation {
    pub map: Vec<(usize, f64)>,
}

impl SignedPermutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).map(|i| (i, 1.0)).collect(),
        }
    }

    /// Edge DoFs under reversal: function `i` changes by `(-1)^(i+1)`.
    pub fn edge(p: usize, reversed: bool) -> Self {
        Self {
            map: (0..p)
                .map(|i| (i, if reversed && i % 2 == 0 { -1.0 } else { 1.0 }))
                .collect(),
        }
    }

    /// Face DoFs in class `g` relative to the identity class.
    pub fn face(p: usize, g: FaceClass) -> Self {
        let layout = FaceLayout::new(p);
        let mut map = Vec::with_capacity(layout.len());
        for a in 0..layout.len() {
            let (mut idx, mut s) = (a, 1.0);
            if g.swap {
                let (b, t) = layout.swapped(a);
                idx = b;
                s = t;
            }
            let (px, py) = layout.parity(a);
            if g.x_rev && px % 2 == 1 {
                s = -s;
            }
            if g.y_rev && py % 2 == 1 {
                s = -s;
            }
            map.push((idx, s));
        }
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Index arithmetic of the DoFs of one face.
#[derive(Debug, Clone, Copy)]
pub struct FaceLayout {
    n: usize,
}

impl FaceLayout {
    pub fn new(p: usize) -> Self {
        Self { n: p - 1 }
    }

    pub fn len(&self) -> usize {
        2 * self.n * self.n + 2 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn type1(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn type2(&self, i: usize, j: usize) -> usize {
        self.n * self.n + i * self.n + j
    }

    pub fn type3x(&self, j: usize) -> usize {
        2 * self.n * self.n + j
    }

    pub fn type3y(&self, i: usize) -> usize {
        2 * self.n * self.n + self.n + i
    }

    /// Parity of a DoF under reversal of the `x` and `y` face axes.
    pub fn parity(&self, a: usize) -> (usize, usize) {
        let n = self.n;
        if a < 2 * n * n {
            let r = a % (n * n);
            (r / n, r % n)
        } else if a < 2 * n * n + n {
            (1, a - 2 * n * n)
        } else {
            (a - 2 * n * n - n, 1)
        }
    }

    /// Partner of a DoF under exchange of the face axes, with its sign.
    pub fn swapped(&self, a: usize) -> (usize, f64) {
        let n = self.n;
        if a < n * n {
            (self.type1(a % n, a / n), 1.0)
        } else if a < 2 * n * n {
            let r = a - n * n;
            (self.type2(r % n, r / n), -1.0)
        } else if a < 2 * n * n + n {
            (self.type3y(a - 2 * n * n), 1.0)
        } else {
            (self.type3x(a - 2 * n * n - n), 1.0)
        }
    }
}

/// `out[i][j] = r_i c_j a[π_r(i)][π_c(j)]`.
pub fn transform_block(
    a: &DMatrix<f64>,
    rows: &SignedPermutation,
    cols: &SignedPermutation,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let (ri, rs) = rows.map[i];
        let (cj, cs) = cols.map[j];
        rs * cs * a[(ri, cj)]
    })
}

/// Edge-to-edge block when coarse and child edges switch direction together:
/// entries with odd `i + j` change sign iff the two orientations differ.
pub fn adapt_edge_constraints(block: &DMatrix<f64>, parent_reversed: bool, child_reversed: bool) -> DMatrix<f64> {
    let mut out = block.clone();
    if parent_reversed != child_reversed {
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                if (i + j) % 2 == 1 {
                    out[(i, j)] = -out[(i, j)];
                }
            }
        }
    }
    out
}

/// Face operations used to move a face block between frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceOp {
    XInversion,
    YInversion,
    XyExchange,
}

fn flip_by_parity(block: &DMatrix<f64>, p: usize, axis: usize) -> DMatrix<f64> {
    let lay = FaceLayout::new(p);
    DMatrix::from_fn(block.nrows(), block.ncols(), |i, j| {
        let pi = if axis == 0 { lay.parity(i).0 } else { lay.parity(i).1 };
        let pj = if axis == 0 { lay.parity(j).0 } else { lay.parity(j).1 };
        if (pi + pj) % 2 == 1 {
            -block[(i, j)]
        } else {
            block[(i, j)]
        }
    })
}

/// Face-to-face block after reversing the `x` axis on both sides.
pub fn invert_x(block: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    flip_by_parity(block, p, 0)
}

/// Face-to-face block after reversing the `y` axis on both sides.
pub fn invert_y(block: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    flip_by_parity(block, p, 1)
}

/// Face-to-face block after exchanging `x` and `y` on both sides.
pub fn exchange_xy(block: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let s = SignedPermutation::face(
        p,
        FaceClass {
            x_rev: false,
            y_rev: false,
            swap: true,
        },
    );
    transform_block(block, &s, &s)
}

/// Operations taking a face frame of class `from` to class `to`, in the
/// order they are applied (exchange first, then inversions).
pub fn select_operations(from: FaceClass, to: FaceClass) -> Vec<FaceOp> {
    let a = to.matrix();
    let b = from.matrix();
    // h = M_to * M_from^T (signed permutation matrices).
    let mut h = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = (0..2).map(|k| a[i][k] * b[j][k]).sum();
        }
    }
    let rel = FaceClass::from_matrix(h);
    let mut ops = Vec::new();
    if rel.swap {
        ops.push(FaceOp::XyExchange);
    }
    if rel.x_rev {
        ops.push(FaceOp::XInversion);
    }
    if rel.y_rev {
        ops.push(FaceOp::YInversion);
    }
    ops
}

pub fn apply_face_ops(block: &DMatrix<f64>, p: usize, ops: &[FaceOp]) -> DMatrix<f64> {
    ops.iter().fold(block.clone(), |b, op| match op {
        FaceOp::XInversion => invert_x(&b, p),
        FaceOp::YInversion => invert_y(&b, p),
        FaceOp::XyExchange => exchange_xy(&b, p),
    })
}

/// Blocks of the four inner child edges (3D) in actual orientation.
///
/// `canonical[k][l]` is the block of inner edge `k` against coarse edge
/// `l < 4` or the coarse face (`l = 4`). Rows follow the inner edge's
/// reversal, columns the coarse edge reversals and the coarse face class.
pub fn adapt_internal_edge_constraints(
    canonical: &[[DMatrix<f64>; 5]; 4],
    p: usize,
    inner_reversed: [bool; 4],
    coarse_reversed: [bool; 4],
    face: FaceClass,
) -> [[DMatrix<f64>; 5]; 4] {
    std::array::from_fn(|k| {
        let r = SignedPermutation::edge(p, inner_reversed[k]);
        std::array::from_fn(|l| {
            let c = if l < 4 {
                SignedPermutation::edge(p, coarse_reversed[l])
            } else {
                SignedPermutation::face(p, face)
            };
            transform_block(&canonical[k][l], &r, &c)
        })
    })
}

/// Canonical weights for one `(dim, p)`.
#[derive(Debug, Clone)]
pub struct CanonicalConstraints {
    pub dim: usize,
    pub p: usize,
    /// Full matrix: rows are fine entities, columns coarse entities.
    pub matrix: DMatrix<f64>,
    pub row_entities: Vec<(FineEntity, usize)>,
    pub col_entities: Vec<(CoarseEntity, usize)>,
}

impl CanonicalConstraints {
    fn offset_rows(&self, e: FineEntity) -> (usize, usize) {
        let mut off = 0;
        for &(r, n) in &self.row_entities {
            if r == e {
                return (off, n);
            }
            off += n;
        }
        panic!("unknown fine entity {e:?}");
    }

    fn offset_cols(&self, e: CoarseEntity) -> (usize, usize) {
        let mut off = 0;
        for &(c, n) in &self.col_entities {
            if c == e {
                return (off, n);
            }
            off += n;
        }
        panic!("unknown coarse entity {e:?}");
    }

    pub fn block(&self, tag: BlockTag) -> ConstraintBlock {
        let (r0, nr) = self.offset_rows(tag.row);
        let (c0, nc) = self.offset_cols(tag.col);
        ConstraintBlock {
            tag,
            rows: (0..nr).collect(),
            cols: (0..nc).collect(),
            weights: self.matrix.view((r0, c0), (nr, nc)).into_owned(),
        }
    }

    pub fn blocks(&self) -> Vec<ConstraintBlock> {
        let mut out = Vec::new();
        for &(r, nr) in &self.row_entities {
            for &(c, nc) in &self.col_entities {
                if nr > 0 && nc > 0 {
                    out.push(self.block(BlockTag { row: r, col: c }));
                }
            }
        }
        out
    }
}

/// Child cells of the reference cell touching its facet `z = 0` (3D) or `y = 0` (2D).
fn reference_children(dim: usize) -> Vec<[usize; 2]> {
    if dim == 2 {
        vec![[0, 0], [1, 0]]
    } else {
        vec![[0, 0], [1, 0], [0, 1], [1, 1]]
    }
}

/// Fine entity of each local edge/face of reference child `(kx, ky)` on the facet.
fn child_rows(dim: usize, k: [usize; 2]) -> Vec<(FineEntity, Entity)> {
    let [kx, ky] = k;
    if dim == 2 {
        return vec![(FineEntity::Edge(kx), Entity::Edge(2))];
    }
    let bottom = if ky == 0 { 4 + kx } else { kx };
    let top = if ky == 0 { kx } else { 6 + kx };
    let left = if kx == 0 { 8 + ky } else { 2 + ky };
    let right = if kx == 0 { 2 + ky } else { 10 + ky };
    vec![
        (FineEntity::Edge(bottom), Entity::Edge(2)),
        (FineEntity::Edge(top), Entity::Edge(3)),
        (FineEntity::Edge(left), Entity::Edge(0)),
        (FineEntity::Edge(right), Entity::Edge(1)),
        (FineEntity::Face(kx + 2 * ky), Entity::Face(4)),
    ]
}

fn coarse_cols(dim: usize) -> Vec<(CoarseEntity, Entity)> {
    if dim == 2 {
        vec![(CoarseEntity::Edge(0), Entity::Edge(2))]
    } else {
        vec![
            (CoarseEntity::Edge(0), Entity::Edge(2)),
            (CoarseEntity::Edge(1), Entity::Edge(3)),
            (CoarseEntity::Edge(2), Entity::Edge(0)),
            (CoarseEntity::Edge(3), Entity::Edge(1)),
            (CoarseEntity::Face, Entity::Face(4)),
        ]
    }
}

fn box_map(dim: usize, lo: [f64; 3], h: f64) -> CellMap {
    let coords: Vec<[f64; 3]> = (0..1usize << dim)
        .map(|v| {
            let mut x = [0.0; 3];
            for a in 0..dim {
                x[a] = lo[a] + h * ((v >> a) & 1) as f64;
            }
            x
        })
        .collect();
    CellMap::new(dim, &coords)
}

/// Canonical weights by L² projection on the refined facet.
pub fn compute_reference_constraint_weights(dim: usize, p: PolynomialDegree) -> Result<CanonicalConstraints> {
    let el = NedelecElement::new(dim, p)?;
    let pu = p.as_usize();
    let nf = if dim == 3 { face_dof_count(pu) } else { 0 };
    let row_entities: Vec<(FineEntity, usize)> = if dim == 2 {
        vec![(FineEntity::Edge(0), pu), (FineEntity::Edge(1), pu)]
    } else {
        (0..12)
            .map(|i| (FineEntity::Edge(i), pu))
            .chain((0..4).map(|i| (FineEntity::Face(i), nf)))
            .collect()
    };
    let col_entities: Vec<(CoarseEntity, usize)> = coarse_cols(dim)
        .into_iter()
        .map(|(c, e)| (c, if matches!(e, Entity::Face(_)) { nf } else { pu }))
        .collect();
    let row_off = |e: FineEntity| {
        let mut off = 0;
        for &(r, n) in &row_entities {
            if r == e {
                return off;
            }
            off += n;
        }
        unreachable!()
    };
    let nrows: usize = row_entities.iter().map(|r| r.1).sum();
    let ncols: usize = col_entities.iter().map(|c| c.1).sum();
    let reference = CellOrientation::reference(dim);
    let coarse_map = box_map(dim, [0.0; 3], 1.0);
    let mut gram = DMatrix::<f64>::zeros(nrows, nrows);
    let mut rhs = DMatrix::<f64>::zeros(nrows, ncols);
    let rule = gauss_rule(pu + 2, [0.0, 0.5])?;
    let mut fine_vals: Vec<ShapeValue> = Vec::new();
    let mut coarse_vals: Vec<ShapeValue> = Vec::new();
    let cols = coarse_cols(dim);
    for k in reference_children(dim) {
        let lo = [0.5 * k[0] as f64, 0.5 * k[1] as f64, 0.0];
        let lo3 = if dim == 2 { [lo[0], 0.0, 0.0] } else { lo };
        let child_map = box_map(dim, lo3, 0.5);
        let rows = child_rows(dim, k);
        // (canonical row, local dof of the child)
        let mut rmap = Vec::new();
        for &(fe, ent) in &rows {
            let n = if matches!(ent, Entity::Face(_)) { nf } else { pu };
            let r0 = row_off(fe);
            let l0 = el.entity_offset(ent);
            for t in 0..n {
                rmap.push((r0 + t, l0 + t));
            }
        }
        let mut cmap = Vec::new();
        let mut c0 = 0;
        for &(ce, ent) in &cols {
            let n = if matches!(ce, CoarseEntity::Face) { nf } else { pu };
            let l0 = el.entity_offset(ent);
            for t in 0..n {
                cmap.push((c0 + t, l0 + t));
            }
            c0 += n;
        }
        let ny = if dim == 3 { rule.len() } else { 1 };
        for qi in 0..rule.len() {
            for qj in 0..ny {
                let (x, y, w) = if dim == 3 {
                    (lo[0] + rule.points[qi], lo[1] + rule.points[qj], rule.weights[qi] * rule.weights[qj])
                } else {
                    (lo[0] + rule.points[qi], 0.0, rule.weights[qi])
                };
                let xp = Vec3::new(x, y, 0.0);
                let xh_child = child_map.inverse(&xp).expect("inside child");
                let mp = child_map.at(&xh_child);
                el.eval_physical(&reference, &xh_child, &mp, &mut fine_vals);
                let mpc = coarse_map.at(&xp);
                el.eval_physical(&reference, &xp, &mpc, &mut coarse_vals);
                // Tangential components on the facet: x (and y in 3D).
                let tan = |v: &Vec3| if dim == 3 { Vec3::new(v.x, v.y, 0.0) } else { Vec3::new(v.x, 0.0, 0.0) };
                for &(ra, la) in &rmap {
                    let ta = tan(&fine_vals[la].value);
                    for &(rb, lb) in &rmap {
                        gram[(ra, rb)] += w * ta.dot(&tan(&fine_vals[lb].value));
                    }
                    for &(cj, lj) in &cmap {
                        rhs[(ra, cj)] += w * ta.dot(&tan(&coarse_vals[lj].value));
                    }
                }
            }
        }
    }
    let mut matrix = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Invariant("singular trace Gram matrix".into()))?;
    for w in matrix.iter_mut() {
        if w.abs() < DROP_TOLERANCE {
            *w = 0.0;
        }
    }
    Ok(CanonicalConstraints {
        dim,
        p: pu,
        matrix,
        row_entities,
        col_entities,
    })
}

/// Cached canonical weights.
pub fn reference_constraint_weights(dim: usize, p: PolynomialDegree) -> Result<Arc<CanonicalConstraints>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<CanonicalConstraints>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().unwrap().get(&(dim, p.get())) {
        return Ok(c.clone());
    }
    let c = Arc::new(compute_reference_constraint_weights(dim, p)?);
    cache.lock().unwrap().insert((dim, p.get()), c.clone());
    Ok(c)
}

/// Constraints of one hanging facet, in global DoF ids.
#[derive(Debug, Clone)]
pub struct InterfaceConstraints {
    pub interface: InterfaceDescriptor,
    pub blocks: Vec<ConstraintBlock>,
}

/// All hanging-node constraints of a mesh: `u[slave] = Σ w u[master]`.
#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    pub entries: BTreeMap<usize, Vec<(usize, f64)>>,
    pub interfaces: Vec<InterfaceConstraints>,
}

impl ConstraintSet {
    pub fn is_constrained(&self, dof: usize) -> bool {
        self.entries.contains_key(&dof)
    }

    pub fn n_constrained(&self) -> usize {
        self.entries.len()
    }

    /// Fill constrained entries of `u` from its unconstrained ones.
    pub fn distribute<T>(&self, u: &mut [T])
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        for (&s, masters) in &self.entries {
            let mut acc = T::default();
            for &(m, w) in masters {
                acc = acc + u[m] * w;
            }
            u[s] = acc;
        }
    }
}

fn class_from_grid(c0: [i32; 2], c1: [i32; 2], c3: [i32; 2]) -> FaceClass {
    let xi = [c0[0] - c1[0], c0[1] - c1[1]];
    let eta = [c0[0] - c3[0], c0[1] - c3[1]];
    if xi[0] != 0 {
        FaceClass {
            x_rev: xi[0] < 0,
            y_rev: eta[1] < 0,
            swap: false,
        }
    } else {
        FaceClass {
            x_rev: xi[1] < 0,
            y_rev: eta[0] < 0,
            swap: true,
        }
    }
}

/// Oriented edges and face frames of all active cells, keyed by sorted vertex ids.
struct EntityFrames {
    edges: HashMap<[usize; 2], [usize; 2]>,
    faces: HashMap<[usize; 4], [usize; 3]>,
}

impl EntityFrames {
    fn new(mesh: &RefinedMesh, orient: &OrientationAssignment) -> Self {
        let mut edges_m = HashMap::new();
        let mut faces_m = HashMap::new();
        for c in mesh.active_cells() {
            let o = orient.get(c);
            let v = &mesh.cell(c).vertices;
            for oe in &o.edges {
                let g = [v[oe.local[0]], v[oe.local[1]]];
                let mut k = g;
                k.sort_unstable();
                edges_m.insert(k, g);
            }
            for f in 0..o.faces.len() {
                let [a0, a1, a3] = o.face_vertices(f);
                let mut k = FACES_3D[f].map(|q| v[q]);
                k.sort_unstable();
                faces_m.insert(k, [v[a0], v[a1], v[a3]]);
            }
        }
        Self {
            edges: edges_m,
            faces: faces_m,
        }
    }

    fn edge(&self, a: usize, b: usize) -> Result<[usize; 2]> {
        let mut k = [a, b];
        k.sort_unstable();
        self.edges
            .get(&k)
            .copied()
            .ok_or_else(|| Error::Invariant(format!("edge {k:?} has no active owner")))
    }

    fn face(&self, v: &[usize]) -> Result<[usize; 3]> {
        let mut k = [v[0], v[1], v[2], v[3]];
        k.sort_unstable();
        self.faces
            .get(&k)
            .copied()
            .ok_or_else(|| Error::Invariant(format!("face {k:?} has no active owner")))
    }
}

/// Orientation data of one hanging facet relative to the canonical frame.
struct InterfaceFrame {
    coarse_edge_rev: Vec<bool>,
    coarse_face: FaceClass,
    child_edge_rev: Vec<bool>,
    child_face: Vec<FaceClass>,
}

fn interface_frame(d: &InterfaceDescriptor, frames: &EntityFrames, dim: usize) -> Result<InterfaceFrame> {
    let gc = |v: usize| {
        d.grid_coord(v)
            .ok_or_else(|| Error::Invariant(format!("vertex {v} not on interface grid")))
    };
    let rev = |start: usize, end: usize| -> Result<bool> {
        let o = frames.edge(start, end)?;
        Ok(o[0] != start)
    };
    if dim == 2 {
        let c = &d.corners;
        let m = d.child_facets[0][1];
        return Ok(InterfaceFrame {
            coarse_edge_rev: vec![rev(c[0], c[1])?],
            coarse_face: FaceClass::IDENTITY,
            child_edge_rev: vec![rev(c[0], m)?, rev(m, c[1])?],
            child_face: Vec::new(),
        });
    }
    let c = &d.corners;
    let coarse_edges = [[c[0], c[1]], [c[2], c[3]], [c[0], c[2]], [c[1], c[3]]];
    let coarse_edge_rev = coarse_edges
        .iter()
        .map(|&[a, b]| rev(a, b))
        .collect::<Result<Vec<_>>>()?;
    let ff = frames.face(c)?;
    let coarse_face = class_from_grid(gc(ff[0])?, gc(ff[1])?, gc(ff[2])?);
    let child_edge_rev = d
        .child_edges
        .iter()
        .map(|&[a, b]| rev(a, b))
        .collect::<Result<Vec<_>>>()?;
    let child_face = d
        .child_facets
        .iter()
        .map(|f| {
            let t = frames.face(f)?;
            Ok(class_from_grid(gc(t[0])?, gc(t[1])?, gc(t[2])?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InterfaceFrame {
        coarse_edge_rev,
        coarse_face,
        child_edge_rev,
        child_face,
    })
}

fn row_perm(fr: &InterfaceFrame, p: usize, e: FineEntity) -> SignedPermutation {
    match e {
        FineEntity::Edge(i) => SignedPermutation::edge(p, fr.child_edge_rev[i]),
        FineEntity::Face(i) => SignedPermutation::face(p, fr.child_face[i]),
    }
}

fn col_perm(fr: &InterfaceFrame, p: usize, e: CoarseEntity) -> SignedPermutation {
    match e {
        CoarseEntity::Edge(i) => SignedPermutation::edge(p, fr.coarse_edge_rev[i]),
        CoarseEntity::Face => SignedPermutation::face(p, fr.coarse_face),
    }
}

/// Block of one interface in actual orientation.
///
/// Uses the parity rules where they apply and the general signed
/// permutation otherwise; both agree wherever both are defined.
fn actual_block(
    canon: &CanonicalConstraints,
    fr: &InterfaceFrame,
    inner: Option<&[[DMatrix<f64>; 5]; 4]>,
    tag: BlockTag,
) -> DMatrix<f64> {
    let p = canon.p;
    let a = canon.block(tag).weights;
    match (tag.row, tag.col) {
        (FineEntity::Edge(i), CoarseEntity::Edge(j)) if canon.dim == 2 || i >= 4 => {
            if fr.child_edge_rev[i] == fr.coarse_edge_rev[j] {
                adapt_edge_constraints(&a, false, fr.coarse_edge_rev[j])
            } else {
                transform_block(&a, &row_perm(fr, p, tag.row), &col_perm(fr, p, tag.col))
            }
        }
        (FineEntity::Edge(i), col) if i < 4 && canon.dim == 3 => {
            let l = match col {
                CoarseEntity::Edge(j) => j,
                CoarseEntity::Face => 4,
            };
            inner.expect("inner blocks for 3D")[i][l].clone()
        }
        (FineEntity::Face(i), CoarseEntity::Face) if fr.child_face[i] == fr.coarse_face => {
            apply_face_ops(&a, p, &select_operations(FaceClass::IDENTITY, fr.coarse_face))
        }
        _ => transform_block(&a, &row_perm(fr, p, tag.row), &col_perm(fr, p, tag.col)),
    }
}

/// Assemble the constraint set of a mesh.
pub fn build_constraints(
    mesh: &RefinedMesh,
    orient: &OrientationAssignment,
    dofs: &DofHandler,
) -> Result<ConstraintSet> {
    let dim = mesh.dim();
    let el = dofs.element();
    let p = el.degree();
    let pd = PolynomialDegree::new(p as u32)?;
    let canon = reference_constraint_weights(dim, pd)?;
    let frames = EntityFrames::new(mesh, orient);
    let mut set = ConstraintSet::default();
    let mut masters_seen = std::collections::BTreeSet::new();
    for d in mesh.interface_descriptors()? {
        let fr = interface_frame(&d, &frames, dim)?;
        let inner = if dim == 3 {
            let canonical: [[DMatrix<f64>; 5]; 4] = std::array::from_fn(|k| {
                std::array::from_fn(|l| {
                    let col = if l < 4 { CoarseEntity::Edge(l) } else { CoarseEntity::Face };
                    canon.block(BlockTag { row: FineEntity::Edge(k), col }).weights
                })
            });
            Some(adapt_internal_edge_constraints(
                &canonical,
                p,
                [fr.child_edge_rev[0], fr.child_edge_rev[1], fr.child_edge_rev[2], fr.child_edge_rev[3]],
                [fr.coarse_edge_rev[0], fr.coarse_edge_rev[1], fr.coarse_edge_rev[2], fr.coarse_edge_rev[3]],
                fr.coarse_face,
            ))
        } else {
            None
        };
        let row_dofs = |e: FineEntity| -> Result<Vec<usize>> {
            let r = match e {
                FineEntity::Edge(i) => {
                    let [a, b] = if dim == 2 {
                        [d.child_facets[i][0], d.child_facets[i][1]]
                    } else {
                        d.child_edges[i]
                    };
                    dofs.edge_dofs(a, b)
                }
                FineEntity::Face(i) => {
                    let f = &d.child_facets[i];
                    dofs.face_dofs([f[0], f[1], f[2], f[3]])
                }
            };
            r.map(|r| r.collect())
                .ok_or_else(|| Error::Invariant(format!("refined entity {e:?} of an interface has no DoFs")))
        };
        let col_dofs = |e: CoarseEntity| -> Result<Vec<usize>> {
            let c = &d.corners;
            let r = match e {
                CoarseEntity::Edge(j) if dim == 2 => {
                    let _ = j;
                    dofs.edge_dofs(c[0], c[1])
                }
                CoarseEntity::Edge(j) => {
                    let [a, b] = [[c[0], c[1]], [c[2], c[3]], [c[0], c[2]], [c[1], c[3]]][j];
                    dofs.edge_dofs(a, b)
                }
                CoarseEntity::Face => dofs.face_dofs([c[0], c[1], c[2], c[3]]),
            };
            r.map(|r| r.collect())
                .ok_or_else(|| Error::Invariant(format!("coarse entity {e:?} of an interface has no DoFs")))
        };
        let mut blocks = Vec::new();
        let mut rows_of_interface: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for &(re, nr) in &canon.row_entities {
            if nr == 0 {
                continue;
            }
            let rd = row_dofs(re)?;
            for &r in &rd {
                rows_of_interface.entry(r).or_default();
            }
            for &(ce, nc) in &canon.col_entities {
                if nc == 0 {
                    continue;
                }
                let tag = BlockTag { row: re, col: ce };
                let w = actual_block(&canon, &fr, inner.as_ref(), tag);
                if w.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let cd = col_dofs(ce)?;
                for (i, &r) in rd.iter().enumerate() {
                    let row = rows_of_interface.get_mut(&r).unwrap();
                    for (j, &c) in cd.iter().enumerate() {
                        if w[(i, j)] != 0.0 {
                            row.push((c, w[(i, j)]));
                            masters_seen.insert(c);
                        }
                    }
                }
                blocks.push(ConstraintBlock {
                    tag,
                    rows: rd.clone(),
                    cols: cd,
                    weights: w,
                });
            }
        }
        for (slave, mut masters) in rows_of_interface {
            masters.sort_by_key(|m| m.0);
            match set.entries.get(&slave) {
                Some(prev) => {
                    let same = prev.len() == masters.len()
                        && prev
                            .iter()
                            .zip(&masters)
                            .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-10);
                    if !same {
                        return Err(Error::Invariant(format!(
                            "conflicting constraints for DoF {slave}: {prev:?} vs {masters:?}"
                        )));
                    }
                }
                None => {
                    set.entries.insert(slave, masters);
                }
            }
        }
        set.interfaces.push(InterfaceConstraints { interface: d, blocks });
    }
    if let Some(m) = masters_seen.iter().find(|m| set.entries.contains_key(m)) {
        return Err(Error::Invariant(format!(
            "DoF {m} is both constrained and a master (constraint chain)"
        )));
    }
    Ok(set)
}

/// Local edge of cell `c` with the given global endpoints.
pub fn local_edge(mesh: &RefinedMesh, c: usize, a: usize, b: usize) -> Option<usize> {
    let v = &mesh.cell(c).vertices;
    edges(mesh.dim())
        .iter()
        .position(|&[x, y]| (v[x] == a && v[y] == b) || (v[x] == b && v[y] == a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_layout_parity_and_swap() {
        let l = FaceLayout::new(3);
        assert_eq!(l.len(), 12);
        assert_eq!(l.parity(l.type1(1, 0)), (1, 0));
        assert_eq!(l.parity(l.type3x(1)), (1, 1));
        assert_eq!(l.parity(l.type3y(0)), (0, 1));
        for a in 0..l.len() {
            let (b, s) = l.swapped(a);
            let (c, t) = l.swapped(b);
            assert_eq!(c, a);
            assert_eq!(s * t, 1.0);
        }
    }

    #[test]
    fn edge_block_parity() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = adapt_edge_constraints(&a, false, true);
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -3.0, 4.0]));
        assert_eq!(adapt_edge_constraints(&a, true, true), a);
    }
}
