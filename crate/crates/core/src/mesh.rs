//! Refinement forest of quadrilateral/hexahedral cells.
//!
//! Cells are never removed. Refining a cell appends its `2^dim` children, so
//! cell ids are stable across refinements. New vertices (edge midpoints,
//! face and cell centres) are shared through a table keyed by the sorted
//! global ids of the entity they bisect.
//!
//! Local numbering is lexicographic: vertex `v` sits at reference
//! coordinates `(v & 1, (v >> 1) & 1, (v >> 2) & 1)`, and child `k` occupies
//! the corner at vertex `k`.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{to_vec3, CellMap, Vec3};

/// Local edges of the reference square.
pub const EDGES_2D: [[usize; 2]; 4] = [[0, 2], [1, 3], [0, 1], [2, 3]];

/// Local edges of the reference cube.
pub const EDGES_3D: [[usize; 2]; 12] = [
    [0, 2],
    [1, 3],
    [0, 1],
    [2, 3],
    [4, 6],
    [5, 7],
    [4, 5],
    [6, 7],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Local faces of the reference cube; face `f` is normal to axis `f / 2`
/// on side `f % 2`. Vertices are listed in face-local position order.
pub const FACES_3D: [[usize; 4]; 6] = [
    [0, 2, 4, 6],
    [1, 3, 5, 7],
    [0, 1, 4, 5],
    [2, 3, 6, 7],
    [0, 1, 2, 3],
    [4, 5, 6, 7],
];

pub fn n_vertices(dim: usize) -> usize {
    1 << dim
}

pub fn edges(dim: usize) -> &'static [[usize; 2]] {
    if dim == 2 {
        &EDGES_2D
    } else {
        &EDGES_3D
    }
}

pub fn n_facets(dim: usize) -> usize {
    2 * dim
}

/// Vertices of facet `f` in facet-local order (an edge in 2D, a face in 3D).
pub fn facet_vertices(dim: usize, f: usize) -> &'static [usize] {
    if dim == 2 {
        &EDGES_2D[f]
    } else {
        &FACES_3D[f]
    }
}

pub fn vertex_bits(v: usize) -> [usize; 3] {
    [v & 1, (v >> 1) & 1, (v >> 2) & 1]
}

/// Axis along which local edge `e` runs.
pub fn edge_axis(dim: usize, e: usize) -> usize {
    let [a, b] = edges(dim)[e];
    (a ^ b).trailing_zeros() as usize
}

/// In-plane axes of facet `f`, in facet-local order.
pub fn facet_axes(dim: usize, f: usize) -> Vec<usize> {
    (0..dim).filter(|&a| a != f / 2).collect()
}

/// Whether child `k`'s edge `e` lies on the parent's edge `e`.
pub fn edge_on_parent_edge(dim: usize, child: usize, e: usize) -> bool {
    let axis = edge_axis(dim, e);
    let fixed = vertex_bits(edges(dim)[e][0]);
    let kb = vertex_bits(child);
    (0..dim).filter(|&a| a != axis).all(|a| kb[a] == fixed[a])
}

/// Whether child `k`'s facet `f` lies on the parent's facet `f`.
pub fn facet_on_parent_facet(child: usize, f: usize) -> bool {
    vertex_bits(child)[f / 2] == f % 2
}

/// One cell of the forest.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub vertices: Vec<usize>,
    pub level: u32,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub child_index: usize,
    pub material: u32,
}

impl Cell {
    pub fn is_active(&self) -> bool {
        self.children.is_empty()
    }
}

/// What lies across a facet of an active cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Neighbor {
    Boundary,
    /// Active cell of the same level and its local facet index.
    Same(usize, usize),
    /// Active cell one level coarser and its local facet index.
    Coarser(usize, usize),
    /// Active children of the refined same-level neighbour, with local facet index.
    Finer(Vec<(usize, usize)>),
}

/// Hanging facet seen from its coarse side.
///
/// Positions refer to the coarse cell's facet-local frame: `corners[i]` is
/// the global vertex at facet-local position `i`. In 3D `grid` holds each
/// of the nine nodes of the refined face with coordinates in `{0,1,2}^2`;
/// in 2D the three nodes of the refined edge with coordinates in `{0,1,2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceDescriptor {
    pub coarse_cell: usize,
    pub coarse_facet: usize,
    pub corners: Vec<usize>,
    /// Fine active cells touching the facet and their local facet index.
    pub fine_cells: Vec<(usize, usize)>,
    /// Child facets in facet-local position order (`F0..F3` in 3D, `C0, C1` in 2D).
    pub child_facets: Vec<Vec<usize>>,
    /// 3D only: child edges `E0..E11` as `(start, end)` along the local `+x`/`+y` axis.
    pub child_edges: Vec<[usize; 2]>,
    pub grid: Vec<(usize, [i32; 2])>,
}

impl InterfaceDescriptor {
    pub fn grid_coord(&self, v: usize) -> Option<[i32; 2]> {
        self.grid.iter().find(|(g, _)| *g == v).map(|(_, c)| *c)
    }
}

/// Refinement forest with shared vertices.
#[derive(Debug, Clone)]
pub struct RefinedMesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    cells: Vec<Cell>,
    n_roots: usize,
    midpoints: HashMap<Vec<usize>, usize>,
    facet_map: HashMap<Vec<usize>, Vec<(usize, usize)>>,
    edge_map: HashMap<[usize; 2], Vec<(usize, usize)>>,
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl RefinedMesh {
    /// Mesh of root cells; each root lists its vertices lexicographically.
    pub fn from_roots(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        cells: Vec<Vec<usize>>,
        materials: Option<Vec<u32>>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if cells.is_empty() {
            return Err(Error::Config("mesh has no cells".into()));
        }
        if let Some(m) = &materials {
            if m.len() != cells.len() {
                return Err(Error::Config("material list length differs from cell count".into()));
            }
        }
        let mut vertices = vertices;
        if dim == 2 {
            for v in &mut vertices {
                v[2] = 0.0;
            }
        }
        let nv = n_vertices(dim);
        let mut mesh = Self {
            dim,
            vertices,
            cells: Vec::with_capacity(cells.len()),
            n_roots: cells.len(),
            midpoints: HashMap::new(),
            facet_map: HashMap::new(),
            edge_map: HashMap::new(),
        };
        for (i, cv) in cells.into_iter().enumerate() {
            if cv.len() != nv {
                return Err(Error::Config(format!(
                    "cell {i} has {} vertices, expected {nv}",
                    cv.len()
                )));
            }
            if let Some(&bad) = cv.iter().find(|&&v| v >= mesh.vertices.len()) {
                return Err(Error::Config(format!("cell {i} references unknown vertex {bad}")));
            }
            if sorted(cv.clone()).windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Config(format!("cell {i} repeats a vertex")));
            }
            let material = materials.as_ref().map_or(0, |m| m[i]);
            mesh.push_cell(Cell {
                vertices: cv,
                level: 0,
                parent: None,
                children: Vec::new(),
                child_index: 0,
                material,
            });
            mesh.check_geometry(i)?;
        }
        for (key, owners) in &mesh.facet_map {
            if owners.len() > 2 {
                return Err(Error::Config(format!(
                    "facet {key:?} shared by {} root cells",
                    owners.len()
                )));
            }
        }
        Ok(mesh)
    }

    /// Structured box mesh with `counts[a]` cells along axis `a`.
    pub fn brick(dim: usize, counts: [usize; 3], lower: [f64; 3], upper: [f64; 3]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        let n = [counts[0], counts[1], if dim == 3 { counts[2] } else { 1 }];
        if n.iter().take(dim).any(|&c| c == 0) {
            return Err(Error::Config("subdivision counts must be positive".into()));
        }
        let nz_nodes = if dim == 3 { n[2] + 1 } else { 1 };
        let mut vertices = Vec::new();
        for k in 0..nz_nodes {
            for j in 0..=n[1] {
                for i in 0..=n[0] {
                    let t = [i as f64 / n[0] as f64, j as f64 / n[1] as f64, k as f64 / n[2] as f64];
                    let mut x = [0.0; 3];
                    for a in 0..dim {
                        x[a] = lower[a] + t[a] * (upper[a] - lower[a]);
                    }
                    vertices.push(x);
                }
            }
        }
        let id = |i: usize, j: usize, k: usize| i + (n[0] + 1) * (j + (n[1] + 1) * k);
        let mut cells = Vec::new();
        let nzc = if dim == 3 { n[2] } else { 1 };
        for k in 0..nzc {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let cv = (0..n_vertices(dim))
                        .map(|v| {
                            let b = vertex_bits(v);
                            id(i + b[0], j + b[1], k + b[2])
                        })
                        .collect();
                    cells.push(cv);
                }
            }
        }
        Self::from_roots(dim, vertices, cells, None)
    }

    /// Unit cube `[0, extent]^dim` split into `n^dim` cells.
    pub fn cube(dim: usize, n: usize, extent: f64) -> Result<Self> {
        Self::brick(dim, [n, n, n], [0.0; 3], [extent; 3])
    }

    fn check_geometry(&self, cell: usize) -> Result<()> {
        let map = self.cell_map(cell);
        for v in 0..n_vertices(self.dim) {
            let b = vertex_bits(v);
            let xh = Vec3::new(b[0] as f64, b[1] as f64, b[2] as f64);
            let det = map.jacobian(&xh).determinant();
            if !(det > 0.0) || !det.is_finite() {
                return Err(Error::Config(format!(
                    "cell {cell} is degenerate or inverted at local vertex {v} (det {det:e})"
                )));
            }
        }
        Ok(())
    }

    fn push_cell(&mut self, cell: Cell) -> usize {
        let id = self.cells.len();
        for f in 0..n_facets(self.dim) {
            let key = sorted(facet_vertices(self.dim, f).iter().map(|&v| cell.vertices[v]).collect());
            self.facet_map.entry(key).or_default().push((id, f));
        }
        if self.dim == 3 {
            for (e, [a, b]) in EDGES_3D.iter().enumerate() {
                self.edge_map
                    .entry(edge_key(cell.vertices[*a], cell.vertices[*b]))
                    .or_default()
                    .push((id, e));
            }
        }
        self.cells.push(cell);
        id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_roots(&self) -> usize {
        self.n_roots
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        to_vec3(self.vertices[v])
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &Cell {
        &self.cells[c]
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn active_cells(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| self.cells[c].is_active()).collect()
    }

    pub fn n_active(&self) -> usize {
        self.cells.iter().filter(|c| c.is_active()).count()
    }

    pub fn set_material(&mut self, cell: usize, material: u32) {
        self.cells[cell].material = material;
    }

    pub fn cell_coords(&self, c: usize) -> Vec<[f64; 3]> {
        self.cells[c].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_map(&self, c: usize) -> CellMap {
        CellMap::new(self.dim, &self.cell_coords(c))
    }

    pub fn cell_center(&self, c: usize) -> Vec3 {
        self.cell_map(c).center()
    }

    /// Global vertex ids of facet `f` of cell `c`, in facet-local order.
    pub fn facet_global(&self, c: usize, f: usize) -> Vec<usize> {
        facet_vertices(self.dim, f).iter().map(|&v| self.cells[c].vertices[v]).collect()
    }

    pub fn edge_global(&self, c: usize, e: usize) -> [usize; 2] {
        let [a, b] = edges(self.dim)[e];
        [self.cells[c].vertices[a], self.cells[c].vertices[b]]
    }

    /// Vertex created at the centre of the entity spanned by `key`, if any.
    pub fn midpoint(&self, key: &[usize]) -> Option<usize> {
        self.midpoints.get(&sorted(key.to_vec())).copied()
    }

    /// Cells (at any level) that have exactly this edge, with local edge index.
    pub fn cells_with_edge(&self, a: usize, b: usize) -> &[(usize, usize)] {
        if self.dim == 2 {
            return self
                .facet_map
                .get(edge_key(a, b).as_slice())
                .map_or(&[], |v| v.as_slice());
        }
        self.edge_map.get(&edge_key(a, b)).map_or(&[], |v| v.as_slice())
    }

    fn node_vertex(&mut self, cell: usize, node: [usize; 3]) -> usize {
        let dim = self.dim;
        let mids: Vec<usize> = (0..dim).filter(|&a| node[a] == 1).collect();
        let pv = &self.cells[cell].vertices;
        if mids.is_empty() {
            let v = (0..dim).map(|a| (node[a] / 2) << a).sum::<usize>();
            return pv[v];
        }
        let mut key = Vec::with_capacity(1 << mids.len());
        for m in 0..(1usize << mids.len()) {
            let mut v = 0;
            for a in 0..dim {
                let bit = match mids.iter().position(|&x| x == a) {
                    Some(i) => (m >> i) & 1,
                    None => node[a] / 2,
                };
                v |= bit << a;
            }
            key.push(pv[v]);
        }
        let key = sorted(key);
        if let Some(&v) = self.midpoints.get(&key) {
            return v;
        }
        let mut x = [0.0; 3];
        for &g in &key {
            for (xa, ga) in x.iter_mut().zip(self.vertices[g]) {
                *xa += ga;
            }
        }
        for xa in &mut x {
            *xa /= key.len() as f64;
        }
        let id = self.vertices.len();
        self.vertices.push(x);
        self.midpoints.insert(key, id);
        id
    }

    fn refine_one(&mut self, cell: usize) {
        if !self.cells[cell].is_active() {
            return;
        }
        let dim = self.dim;
        let nv = n_vertices(dim);
        let mut kids = Vec::with_capacity(nv);
        for k in 0..nv {
            let kb = vertex_bits(k);
            let verts: Vec<usize> = (0..nv)
                .map(|v| {
                    let vb = vertex_bits(v);
                    self.node_vertex(cell, [kb[0] + vb[0], kb[1] + vb[1], kb[2] + vb[2]])
                })
                .collect();
            let parent = &self.cells[cell];
            let child = Cell {
                vertices: verts,
                level: parent.level + 1,
                parent: Some(cell),
                children: Vec::new(),
                child_index: k,
                material: parent.material,
            };
            kids.push(self.push_cell(child));
        }
        self.cells[cell].children = kids;
    }

    /// Refine the given active cells, then restore 2:1 balance.
    ///
    /// Inactive ids are skipped. Returns the number of cells refined,
    /// including those refined for balance.
    pub fn refine_cells(&mut self, ids: &[usize]) -> Result<usize> {
        if let Some(&bad) = ids.iter().find(|&&c| c >= self.cells.len()) {
            return Err(Error::Config(format!("unknown cell id {bad}")));
        }
        let mut count = 0;
        for &c in ids {
            if self.cells[c].is_active() {
                self.refine_one(c);
                count += 1;
            }
        }
        loop {
            let bad = self.balance_violators();
            if bad.is_empty() {
                break;
            }
            for c in bad {
                self.refine_one(c);
                count += 1;
            }
        }
        Ok(count)
    }

    /// Refine every active cell whose centre lies in the box.
    pub fn refine_box(&mut self, lower: [f64; 3], upper: [f64; 3]) -> Result<usize> {
        let ids: Vec<usize> = self
            .active_cells()
            .into_iter()
            .filter(|&c| {
                let x = self.cell_center(c);
                (0..self.dim).all(|a| x[a] >= lower[a] && x[a] <= upper[a])
            })
            .collect();
        self.refine_cells(&ids)
    }

    pub fn refine_all(&mut self) -> Result<usize> {
        let ids = self.active_cells();
        self.refine_cells(&ids)
    }

    /// Active cells whose level is more than one below an active cell
    /// touching them through a facet or an edge.
    pub fn balance_violators(&self) -> BTreeSet<usize> {
        let mut bad = BTreeSet::new();
        let dim = self.dim;
        for (a, cell) in self.cells.iter().enumerate() {
            if !cell.is_active() || cell.level < 2 {
                continue;
            }
            for f in 0..n_facets(dim) {
                let mut cur = a;
                loop {
                    let key = sorted(self.facet_global(cur, f));
                    let others: Vec<usize> = self.facet_map[&key]
                        .iter()
                        .map(|&(c, _)| c)
                        .filter(|&c| c != cur)
                        .collect();
                    if let Some(&o) = others.first() {
                        if self.cells[o].is_active() && self.cells[o].level + 1 < cell.level {
                            bad.insert(o);
                        }
                        break;
                    }
                    match self.cells[cur].parent {
                        Some(p) if facet_on_parent_facet(self.cells[cur].child_index, f) => cur = p,
                        _ => break,
                    }
                }
            }
            if dim == 3 {
                for e in 0..EDGES_3D.len() {
                    let mut cur = a;
                    loop {
                        let [u, v] = self.edge_global(cur, e);
                        for &(o, _) in &self.edge_map[&edge_key(u, v)] {
                            if self.cells[o].is_active() && self.cells[o].level + 1 < cell.level {
                                bad.insert(o);
                            }
                        }
                        match self.cells[cur].parent {
                            Some(p) if edge_on_parent_edge(3, self.cells[cur].child_index, e) => {
                                cur = p
                            }
                            _ => break,
                        }
                    }
                }
            }
        }
        bad
    }

    pub fn is_balanced(&self) -> bool {
        self.balance_violators().is_empty()
    }

    /// Neighbour across facet `f` of cell `c`.
    pub fn face_neighbor(&self, c: usize, f: usize) -> Neighbor {
        let key = sorted(self.facet_global(c, f));
        if let Some(&(o, g)) = self.facet_map[&key].iter().find(|&&(o, _)| o != c) {
            let other = &self.cells[o];
            if other.is_active() {
                return Neighbor::Same(o, g);
            }
            let kids = other
                .children
                .iter()
                .filter(|&&k| facet_on_parent_facet(self.cells[k].child_index, g))
                .map(|&k| (k, g))
                .collect();
            return Neighbor::Finer(kids);
        }
        let cell = &self.cells[c];
        if let Some(p) = cell.parent {
            if facet_on_parent_facet(cell.child_index, f) {
                let pkey = sorted(self.facet_global(p, f));
                if let Some(&(o, g)) = self.facet_map[&pkey].iter().find(|&&(o, _)| o != p) {
                    if self.cells[o].is_active() {
                        return Neighbor::Coarser(o, g);
                    }
                }
            }
        }
        Neighbor::Boundary
    }

    pub fn neighbor_is_coarser(&self, c: usize, f: usize) -> bool {
        matches!(self.face_neighbor(c, f), Neighbor::Coarser(..))
    }

    /// All hanging facets, seen from their coarse side, ordered by coarse cell id.
    pub fn interface_descriptors(&self) -> Result<Vec<InterfaceDescriptor>> {
        let bad = self.balance_violators();
        if !bad.is_empty() {
            return Err(Error::Invariant(format!(
                "mesh is not 2:1 balanced; cells {:?} are too coarse",
                bad.iter().take(8).collect::<Vec<_>>()
            )));
        }
        let mut out = Vec::new();
        for c in self.active_cells() {
            for f in 0..n_facets(self.dim) {
                if let Neighbor::Finer(kids) = self.face_neighbor(c, f) {
                    out.push(self.describe_interface(c, f, kids)?);
                }
            }
        }
        Ok(out)
    }

    fn mid(&self, key: &[usize]) -> Result<usize> {
        self.midpoint(key).ok_or_else(|| {
            Error::Invariant(format!("missing midpoint vertex for entity {key:?}"))
        })
    }

    fn describe_interface(
        &self,
        c: usize,
        f: usize,
        fine_cells: Vec<(usize, usize)>,
    ) -> Result<InterfaceDescriptor> {
        let corners = self.facet_global(c, f);
        if self.dim == 2 {
            let (g0, g1) = (corners[0], corners[1]);
            let m = self.mid(&[g0, g1])?;
            return Ok(InterfaceDescriptor {
                coarse_cell: c,
                coarse_facet: f,
                corners,
                fine_cells,
                child_facets: vec![vec![g0, m], vec![m, g1]],
                child_edges: Vec::new(),
                grid: vec![(g0, [0, 0]), (m, [1, 0]), (g1, [2, 0])],
            });
        }
        let [g0, g1, g2, g3] = [corners[0], corners[1], corners[2], corners[3]];
        let m01 = self.mid(&[g0, g1])?;
        let m23 = self.mid(&[g2, g3])?;
        let m02 = self.mid(&[g0, g2])?;
        let m13 = self.mid(&[g1, g3])?;
        let ce = self.mid(&[g0, g1, g2, g3])?;
        let child_edges = vec![
            [m02, ce],
            [ce, m13],
            [m01, ce],
            [ce, m23],
            [g0, m01],
            [m01, g1],
            [g2, m23],
            [m23, g3],
            [g0, m02],
            [m02, g2],
            [g1, m13],
            [m13, g3],
        ];
        let child_facets = vec![
            vec![g0, m01, m02, ce],
            vec![m01, g1, ce, m13],
            vec![m02, ce, g2, m23],
            vec![ce, m13, m23, g3],
        ];
        let grid = vec![
            (g0, [0, 0]),
            (m01, [1, 0]),
            (g1, [2, 0]),
            (m02, [0, 1]),
            (ce, [1, 1]),
            (m13, [2, 1]),
            (g2, [0, 2]),
            (m23, [1, 2]),
            (g3, [2, 2]),
        ];
        Ok(InterfaceDescriptor {
            coarse_cell: c,
            coarse_facet: f,
            corners,
            fine_cells,
            child_facets,
            child_edges,
            grid,
        })
    }

    /// Relabel vertex `v` as `perm[v]`; geometry and topology are unchanged.
    pub fn permute_vertex_numbering(&self, perm: &[usize]) -> Result<Self> {
        let n = self.vertices.len();
        if perm.len() != n {
            return Err(Error::Config(format!(
                "permutation has length {}, mesh has {n} vertices",
                perm.len()
            )));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::Config("vertex permutation is not a bijection".into()));
            }
            seen[p] = true;
        }
        let mut vertices = vec![[0.0; 3]; n];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = self.vertices[old];
        }
        let mut out = Self {
            dim: self.dim,
            vertices,
            cells: Vec::with_capacity(self.cells.len()),
            n_roots: self.n_roots,
            midpoints: self
                .midpoints
                .iter()
                .map(|(k, &v)| (sorted(k.iter().map(|&g| perm[g]).collect()), perm[v]))
                .collect(),
            facet_map: HashMap::new(),
            edge_map: HashMap::new(),
        };
        for cell in &self.cells {
            let mut c = cell.clone();
            c.vertices = cell.vertices.iter().map(|&v| perm[v]).collect();
            out.push_cell(c);
        }
        Ok(out)
    }

    /// Seeded uniformly random vertex permutation.
    pub fn random_permutation(&self, seed: u64) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.vertices.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        perm
    }

    /// Lowest-id active cell containing `x`, with its reference coordinates.
    pub fn locate(&self, x: &Vec3) -> Option<(usize, Vec3)> {
        for c in self.active_cells() {
            let map = self.cell_map(c);
            let lo = map.nodes().iter().fold(Vec3::repeat(f64::INFINITY), |m, p| m.inf(p));
            let hi = map.nodes().iter().fold(Vec3::repeat(f64::NEG_INFINITY), |m, p| m.sup(p));
            let tol = 1e-12 * map.diameter();
            if (0..self.dim).any(|a| x[a] < lo[a] - tol || x[a] > hi[a] + tol) {
                continue;
            }
            if let Some(xh) = map.inverse(x) {
                if crate::geometry::contains_reference(self.dim, &xh, 1e-10) {
                    let mut xh = xh;
                    for a in 0..self.dim {
                        xh[a] = xh[a].clamp(0.0, 1.0);
                    }
                    return Some((c, xh));
                }
            }
        }
        None
    }
}

/// One refinement step of a mesh file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RefineInstruction {
    Cells { cells: Vec<usize> },
    Box { box_min: Vec<f64>, box_max: Vec<f64> },
    All { all: bool },
}

/// JSON mesh description: root cells plus refinement steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub materials: Option<Vec<u32>>,
    #[serde(default)]
    pub refine: Vec<RefineInstruction>,
    /// Applied after refinement; entry `v` is the new id of vertex `v`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_permutation: Option<Vec<usize>>,
}

fn coord3(v: &[f64], what: &str) -> Result<[f64; 3]> {
    if v.len() < 2 || v.len() > 3 {
        return Err(Error::Config(format!("{what} must have 2 or 3 coordinates")));
    }
    Ok([v[0], v[1], v.get(2).copied().unwrap_or(0.0)])
}

impl MeshFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("mesh file: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh file serializes")
    }

    /// Root cells of a structured box.
    pub fn brick(dim: usize, counts: [usize; 3], lower: [f64; 3], upper: [f64; 3]) -> Result<Self> {
        let m = RefinedMesh::brick(dim, counts, lower, upper)?;
        Ok(Self {
            dim,
            vertices: m.vertices.iter().map(|x| x[..dim].to_vec()).collect(),
            cells: m.cells.iter().map(|c| c.vertices.clone()).collect(),
            materials: None,
            refine: Vec::new(),
            vertex_permutation: None,
        })
    }

    pub fn build(&self) -> Result<RefinedMesh> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| coord3(v, "vertex"))
            .collect::<Result<Vec<_>>>()?;
        let mut mesh =
            RefinedMesh::from_roots(self.dim, vertices, self.cells.clone(), self.materials.clone())?;
        for step in &self.refine {
            match step {
                RefineInstruction::Cells { cells } => {
                    mesh.refine_cells(cells)?;
                }
                RefineInstruction::Box { box_min, box_max } => {
                    mesh.refine_box(coord3(box_min, "box_min")?, coord3(box_max, "box_max")?)?;
                }
                RefineInstruction::All { all } => {
                    if *all {
                        mesh.refine_all()?;
                    }
                }
            }
        }
        if let Some(p) = &self.vertex_permutation {
            mesh = mesh.permute_vertex_numbering(p)?;
        }
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_entity_tables() {
        // Child 0 touches parent edges 0, 2, 8 and faces 0, 2, 4.
        let on: Vec<usize> = (0..12).filter(|&e| edge_on_parent_edge(3, 0, e)).collect();
        assert_eq!(on, vec![0, 2, 8]);
        let on: Vec<usize> = (0..6).filter(|&f| facet_on_parent_facet(7, f)).collect();
        assert_eq!(on, vec![1, 3, 5]);
        assert_eq!(edge_axis(3, 8), 2);
        assert_eq!(edge_axis(2, 0), 1);
    }

    #[test]
    fn refined_vertices_are_shared() {
        let mut m = RefinedMesh::cube(3, 2, 1.0).unwrap();
        let before = m.vertices().len();
        m.refine_cells(&[0, 1]).unwrap();
        // 19 new vertices per hex, 5 of them on the shared face.
        assert_eq!(m.vertices().len(), before + 19 + 14);
    }
}
