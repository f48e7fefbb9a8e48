//! Global orientation of edges and faces from vertex numbering.
//!
//! Conforming entities are oriented from their own global vertex ids, so
//! every cell sharing an entity derives the same orientation. An entity of
//! a fine cell that is a half (edge) or quarter (face) of an active coarse
//! entity instead takes its orientation from the parent's vertex ids at the
//! same local positions. Those are the coarse entity's ids, so fine and
//! coarse sides agree, which the hanging-node constraints rely on.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{
    edge_on_parent_edge, edges, facet_on_parent_facet, facet_vertices, n_facets, Neighbor,
    RefinedMesh, FACES_3D,
};

/// How an edge orientation was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeSource {
    /// From the edge's own vertex ids.
    Own,
    /// Inherited from the parent edge because a face neighbour is coarser.
    Hanging,
    /// Inherited from the parent edge; only an edge neighbour is coarser.
    EdgeOnly,
}

/// Oriented edge of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrientedEdge {
    /// Local vertex indices, start first.
    pub local: [usize; 2],
    /// Global ids of the start and end vertex.
    pub global: [usize; 2],
    /// Direction is opposite to the reference-cell edge.
    pub flipped: bool,
    pub source: EdgeSource,
}

/// Position of an oriented face frame relative to the face-local frame.
///
/// With `swap == false` the face axes `(ξ, η)` run along the local `(x, y)`
/// axes; with `swap == true` along `(y, x)`. The `*_rev` flags report
/// whether `ξ` and `η` point against the local axis they run along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct FaceClass {
    pub x_rev: bool,
    pub y_rev: bool,
    pub swap: bool,
}

impl FaceClass {
    pub const IDENTITY: FaceClass = FaceClass {
        x_rev: false,
        y_rev: false,
        swap: false,
    };

    /// Classification of the tuple of face-local positions `(f0, f1, f2, f3)`.
    pub fn from_positions(pos: [usize; 4]) -> Self {
        let b = |q: usize| [(q & 1) as i32, (q >> 1) as i32];
        let (p0, p1, p3) = (b(pos[0]), b(pos[1]), b(pos[3]));
        let xi = [p0[0] - p1[0], p0[1] - p1[1]];
        let eta = [p0[0] - p3[0], p0[1] - p3[1]];
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

    /// Signed axis matrix `M` with `(ξ, η) = M (x, y)` on `[-1, 1]^2`.
    pub fn matrix(self) -> [[i32; 2]; 2] {
        let sx = if self.x_rev { -1 } else { 1 };
        let sy = if self.y_rev { -1 } else { 1 };
        if self.swap {
            [[0, sx], [sy, 0]]
        } else {
            [[sx, 0], [0, sy]]
        }
    }

    pub fn from_matrix(m: [[i32; 2]; 2]) -> Self {
        if m[0][0] != 0 {
            FaceClass {
                x_rev: m[0][0] < 0,
                y_rev: m[1][1] < 0,
                swap: false,
            }
        } else {
            FaceClass {
                x_rev: m[0][1] < 0,
                y_rev: m[1][0] < 0,
                swap: true,
            }
        }
    }

    pub fn all() -> [FaceClass; 8] {
        let mut out = [FaceClass::IDENTITY; 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = FaceClass {
                x_rev: i & 1 == 1,
                y_rev: i & 2 == 2,
                swap: i & 4 == 4,
            };
        }
        out
    }
}

/// Oriented face of one 3D cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrientedFace {
    /// Face-local positions of `f0..f3`.
    pub positions: [usize; 4],
    /// Global ids that decided the orientation, in tuple order.
    pub tuple: [usize; 4],
    pub class: FaceClass,
    pub hanging: bool,
}

/// Orientation of every edge and face of one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellOrientation {
    pub edges: Vec<OrientedEdge>,
    pub faces: Vec<OrientedFace>,
}

impl CellOrientation {
    /// Reference orientation: every entity follows the reference cell.
    pub fn reference(dim: usize) -> Self {
        let edges = edges(dim)
            .iter()
            .map(|&[a, b]| OrientedEdge {
                local: [a, b],
                global: [a, b],
                flipped: false,
                source: EdgeSource::Own,
            })
            .collect();
        let faces = if dim == 3 {
            (0..6)
                .map(|_| OrientedFace {
                    positions: [3, 2, 0, 1],
                    tuple: [3, 2, 0, 1],
                    class: FaceClass::IDENTITY,
                    hanging: false,
                })
                .collect()
        } else {
            Vec::new()
        };
        Self { edges, faces }
    }

    /// Local vertices `(v_f0, v_f1, v_f3)` of face `f`.
    pub fn face_vertices(&self, f: usize) -> [usize; 3] {
        let p = self.faces[f].positions;
        [FACES_3D[f][p[0]], FACES_3D[f][p[1]], FACES_3D[f][p[3]]]
    }
}

fn oriented_pair(local: [usize; 2], ids: [usize; 2], own: [usize; 2], source: EdgeSource) -> OrientedEdge {
    let (l, g) = if ids[0] < ids[1] {
        (local, own)
    } else {
        ([local[1], local[0]], [own[1], own[0]])
    };
    OrientedEdge {
        local: l,
        global: g,
        flipped: l[0] != local[0],
        source,
    }
}

/// Edge orientation from each edge's own vertex ids.
pub fn orient_edges(mesh: &RefinedMesh, cell: usize) -> Vec<OrientedEdge> {
    let v = &mesh.cell(cell).vertices;
    edges(mesh.dim())
        .iter()
        .map(|&[a, b]| oriented_pair([a, b], [v[a], v[b]], [v[a], v[b]], EdgeSource::Own))
        .collect()
}

/// Face-local positions `(f0, f1, f2, f3)` for the global ids at positions `0..4`.
///
/// `f0` holds the largest id, `f2` the opposite corner, and `f1`/`f3` the
/// larger/smaller of the two corners adjacent to `f0`.
pub fn face_tuple_positions(ids: [usize; 4]) -> [usize; 4] {
    const ADJACENT: [[usize; 2]; 4] = [[1, 2], [0, 3], [3, 0], [1, 2]];
    let p0 = (0..4).max_by_key(|&q| ids[q]).unwrap();
    let p2 = 3 - p0;
    let [l, r] = ADJACENT[p0];
    let (p1, p3) = if ids[l] > ids[r] { (l, r) } else { (r, l) };
    [p0, p1, p2, p3]
}

fn oriented_face(ids: [usize; 4], hanging: bool) -> OrientedFace {
    let positions = face_tuple_positions(ids);
    OrientedFace {
        positions,
        tuple: positions.map(|q| ids[q]),
        class: FaceClass::from_positions(positions),
        hanging,
    }
}

/// Face orientation from each face's own vertex ids (3D only).
pub fn orient_faces(mesh: &RefinedMesh, cell: usize) -> Vec<OrientedFace> {
    if mesh.dim() != 3 {
        return Vec::new();
    }
    let v = &mesh.cell(cell).vertices;
    FACES_3D
        .iter()
        .map(|f| oriented_face(f.map(|q| v[q]), false))
        .collect()
}

fn facets_with_edge(dim: usize, e: usize) -> Vec<usize> {
    let [a, b] = edges(dim)[e];
    (0..n_facets(dim))
        .filter(|&f| {
            let fv = facet_vertices(dim, f);
            fv.contains(&a) && fv.contains(&b)
        })
        .collect()
}

/// Edge orientation where edges lying on a parent edge inside a face with a
/// coarser neighbour take the parent's direction.
pub fn orient_edges_hanging(mesh: &RefinedMesh, cell: usize) -> Vec<OrientedEdge> {
    let dim = mesh.dim();
    let c = mesh.cell(cell);
    let mut out = orient_edges(mesh, cell);
    let Some(parent) = c.parent else {
        return out;
    };
    let pv = &mesh.cell(parent).vertices;
    for (e, &[a, b]) in edges(dim).iter().enumerate() {
        if !edge_on_parent_edge(dim, c.child_index, e) {
            continue;
        }
        if facets_with_edge(dim, e)
            .into_iter()
            .any(|f| mesh.neighbor_is_coarser(cell, f))
        {
            out[e] = oriented_pair(
                [a, b],
                [pv[a], pv[b]],
                [c.vertices[a], c.vertices[b]],
                EdgeSource::Hanging,
            );
        }
    }
    out
}

/// Face orientation where quarter faces of a coarser neighbour's face take
/// the parent face's frame (3D only).
pub fn orient_faces_hanging(mesh: &RefinedMesh, cell: usize) -> Vec<OrientedFace> {
    let mut out = orient_faces(mesh, cell);
    if mesh.dim() != 3 {
        return out;
    }
    let c = mesh.cell(cell);
    let Some(parent) = c.parent else {
        return out;
    };
    let pv = &mesh.cell(parent).vertices;
    for (f, fv) in FACES_3D.iter().enumerate() {
        if facet_on_parent_facet(c.child_index, f) && mesh.neighbor_is_coarser(cell, f) {
            out[f] = oriented_face(fv.map(|q| pv[q]), true);
        }
    }
    out
}

/// Re-orient edges whose only coarser neighbour touches them through an edge.
///
/// For every face neighbour of the same level, each face of that neighbour
/// perpendicular to the shared face is tested for a coarser neighbour; the
/// cell's edge lying in both faces then takes its parent's direction.
/// Returns the local indices of the edges changed to [`EdgeSource::EdgeOnly`].
pub fn fix_edge_only_hanging(
    mesh: &RefinedMesh,
    cell: usize,
    edges_out: &mut [OrientedEdge],
) -> Vec<usize> {
    let dim = mesh.dim();
    let c = mesh.cell(cell);
    let mut touched = Vec::new();
    if dim != 3 {
        return touched;
    }
    let Some(parent) = c.parent else {
        return touched;
    };
    let pv = &mesh.cell(parent).vertices;
    for i in 0..n_facets(dim) {
        let Neighbor::Same(nb, g) = mesh.face_neighbor(cell, i) else {
            continue;
        };
        for j in (0..n_facets(dim)).filter(|&j| j / 2 != g / 2) {
            if !mesh.neighbor_is_coarser(nb, j) {
                continue;
            }
            let nf = mesh.facet_global(nb, j);
            let Some(e) = (0..edges(dim).len()).find(|&e| {
                let [u, v] = mesh.edge_global(cell, e);
                nf.contains(&u) && nf.contains(&v)
            }) else {
                continue;
            };
            if !edge_on_parent_edge(dim, c.child_index, e) {
                continue;
            }
            if facets_with_edge(dim, e)
                .into_iter()
                .any(|f| mesh.neighbor_is_coarser(cell, f))
            {
                continue;
            }
            let [a, b] = edges(dim)[e];
            edges_out[e] = oriented_pair(
                [a, b],
                [pv[a], pv[b]],
                [c.vertices[a], c.vertices[b]],
                EdgeSource::EdgeOnly,
            );
            if !touched.contains(&e) {
                touched.push(e);
            }
        }
    }
    touched.sort_unstable();
    touched
}

/// Orientation of every active cell.
#[derive(Debug, Clone)]
pub struct OrientationAssignment {
    dim: usize,
    cells: Vec<Option<CellOrientation>>,
}

impl OrientationAssignment {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, cell: usize) -> &CellOrientation {
        self.cells[cell]
            .as_ref()
            .expect("orientation is only stored for active cells")
    }

    pub fn try_get(&self, cell: usize) -> Option<&CellOrientation> {
        self.cells.get(cell).and_then(|c| c.as_ref())
    }

    /// `(cell, local edge)` pairs oriented because of an edge-only coarser neighbour.
    pub fn edge_only_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (c, o) in self.cells.iter().enumerate() {
            if let Some(o) = o {
                for (e, oe) in o.edges.iter().enumerate() {
                    if oe.source == EdgeSource::EdgeOnly {
                        out.push((c, e));
                    }
                }
            }
        }
        out
    }

    /// Every entity shared by several active cells must be oriented identically.
    pub fn check_consistency(&self, mesh: &RefinedMesh) -> Result<()> {
        let mut edge_dir: HashMap<[usize; 2], ([usize; 2], usize)> = HashMap::new();
        let mut face_dir: HashMap<Vec<usize>, ([usize; 3], usize)> = HashMap::new();
        for c in mesh.active_cells() {
            let o = self.get(c);
            let v = &mesh.cell(c).vertices;
            for oe in &o.edges {
                let g = [v[oe.local[0]], v[oe.local[1]]];
                let mut key = g;
                key.sort_unstable();
                if let Some((prev, owner)) = edge_dir.insert(key, (g, c)) {
                    if prev != g {
                        return Err(Error::Invariant(format!(
                            "edge {key:?} oriented {prev:?} by cell {owner} but {g:?} by cell {c}"
                        )));
                    }
                }
            }
            for (f, of) in o.faces.iter().enumerate() {
                let fv = FACES_3D[f];
                let g = [v[fv[of.positions[0]]], v[fv[of.positions[1]]], v[fv[of.positions[3]]]];
                let mut key: Vec<usize> = fv.iter().map(|&q| v[q]).collect();
                key.sort_unstable();
                if let Some((prev, owner)) = face_dir.insert(key.clone(), (g, c)) {
                    if prev != g {
                        return Err(Error::Invariant(format!(
                            "face {key:?} framed {prev:?} by cell {owner} but {g:?} by cell {c}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Full orientation pipeline: own ids, then parent ids for hanging entities.
pub fn orient_mesh(mesh: &RefinedMesh) -> OrientationAssignment {
    let mut cells = vec![None; mesh.n_cells()];
    for c in mesh.active_cells() {
        let mut edges = orient_edges_hanging(mesh, c);
        fix_edge_only_hanging(mesh, c, &mut edges);
        let faces = orient_faces_hanging(mesh, c);
        cells[c] = Some(CellOrientation { edges, faces });
    }
    OrientationAssignment {
        dim: mesh.dim(),
        cells,
    }
}

/// Orientation from own vertex ids only, ignoring hanging entities.
pub fn orient_mesh_plain(mesh: &RefinedMesh) -> OrientationAssignment {
    let mut cells = vec![None; mesh.n_cells()];
    for c in mesh.active_cells() {
        cells[c] = Some(CellOrientation {
            edges: orient_edges(mesh, c),
            faces: orient_faces(mesh, c),
        });
    }
    OrientationAssignment {
        dim: mesh.dim(),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_examples() {
        assert_eq!(face_tuple_positions([10, 4, 7, 2]).map(|q| [10, 4, 7, 2][q]), [10, 7, 2, 4]);
        assert_eq!(face_tuple_positions([1, 2, 3, 4]).map(|q| [1, 2, 3, 4][q]), [4, 3, 1, 2]);
        assert_eq!(FaceClass::from_positions([3, 2, 0, 1]), FaceClass::IDENTITY);
    }

    #[test]
    fn matrix_round_trip() {
        for c in FaceClass::all() {
            assert_eq!(FaceClass::from_matrix(c.matrix()), c);
        }
    }
}
