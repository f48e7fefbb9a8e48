//! Global DoF numbering.
//!
//! Entities are identified by their sorted global vertex ids, so the DoFs
//! of a shared edge or face are the same in every cell touching it. Within
//! an entity the order is the local layout order of [`NedelecElement`],
//! which is well defined because all cells agree on the entity orientation.

use std::collections::HashMap;

use crate::mesh::{edges, RefinedMesh, FACES_3D};
use crate::nedelec_basis::{Entity, NedelecElement};

#[derive(Debug, Clone)]
pub struct DofHandler {
    element: NedelecElement,
    n_dofs: usize,
    cell_dofs: Vec<Vec<usize>>,
    edge_first: HashMap<[usize; 2], usize>,
    face_first: HashMap<[usize; 4], usize>,
}

fn key2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn key4(v: [usize; 4]) -> [usize; 4] {
    let mut k = v;
    k.sort_unstable();
    k
}

/// Number every edge, face and interior DoF of the active cells in cell-id order.
pub fn distribute_dofs(mesh: &RefinedMesh, element: &NedelecElement) -> DofHandler {
    let dim = mesh.dim();
    let (pe, pf, pc) = (
        element.dofs_per_edge(),
        element.dofs_per_face(),
        element.dofs_per_cell(),
    );
    let mut next = 0;
    let mut edge_first = HashMap::new();
    let mut face_first = HashMap::new();
    let mut cell_dofs = vec![Vec::new(); mesh.n_cells()];
    for c in mesh.active_cells() {
        let v = &mesh.cell(c).vertices;
        let mut local = Vec::with_capacity(element.n_dofs());
        for &[a, b] in edges(dim) {
            let first = *edge_first.entry(key2(v[a], v[b])).or_insert_with(|| {
                next += pe;
                next - pe
            });
            local.extend(first..first + pe);
        }
        if dim == 3 {
            for f in &FACES_3D {
                let first = *face_first.entry(key4(f.map(|q| v[q]))).or_insert_with(|| {
                    next += pf;
                    next - pf
                });
                local.extend(first..first + pf);
            }
        }
        local.extend(next..next + pc);
        next += pc;
        debug_assert_eq!(local.len(), element.n_dofs());
        cell_dofs[c] = local;
    }
    DofHandler {
        element: element.clone(),
        n_dofs: next,
        cell_dofs,
        edge_first,
        face_first,
    }
}

impl DofHandler {
    pub fn element(&self) -> &NedelecElement {
        &self.element
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell]
    }

    /// Global DoFs of the edge between two global vertices.
    pub fn edge_dofs(&self, a: usize, b: usize) -> Option<std::ops::Range<usize>> {
        let first = *self.edge_first.get(&key2(a, b))?;
        Some(first..first + self.element.dofs_per_edge())
    }

    /// Global DoFs of the face with the given global vertices.
    pub fn face_dofs(&self, v: [usize; 4]) -> Option<std::ops::Range<usize>> {
        let first = *self.face_first.get(&key4(v))?;
        Some(first..first + self.element.dofs_per_face())
    }

    /// Centroid of the entity carrying each DoF.
    pub fn dof_positions(&self, mesh: &RefinedMesh) -> Vec<[f64; 3]> {
        let dim = mesh.dim();
        let mut pos = vec![[0.0; 3]; self.n_dofs];
        for c in mesh.active_cells() {
            let v = &mesh.cell(c).vertices;
            for (id, &g) in self.element.layout().iter().zip(&self.cell_dofs[c]) {
                let local: &[usize] = match id.entity {
                    Entity::Edge(m) => &edges(dim)[m],
                    Entity::Face(m) => &FACES_3D[m],
                    Entity::Cell => &[0, 1, 2, 3, 4, 5, 6, 7][..1 << dim],
                };
                let mut x = [0.0; 3];
                for &q in local {
                    let y = mesh.vertex(v[q]);
                    for a in 0..3 {
                        x[a] += y[a] / local.len() as f64;
                    }
                }
                pos[g] = x;
            }
        }
        pos
    }

    /// Global DoFs of one entity of a cell.
    pub fn entity_dofs(&self, cell: usize, e: Entity) -> &[usize] {
        let off = self.element.entity_offset(e);
        let len = match e {
            Entity::Edge(_) => self.element.dofs_per_edge(),
            Entity::Face(_) => self.element.dofs_per_face(),
            Entity::Cell => self.element.dofs_per_cell(),
        };
        &self.cell_dofs[cell][off..off + len]
    }
}
