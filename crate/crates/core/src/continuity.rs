//! Tangential continuity of discrete fields across cell facets.

use rayon::prelude::*;

use crate::discretization::{Discretization, FieldScalar};
use crate::geometry::{contains_reference, Vec3};
use crate::mesh::{facet_axes, n_facets, Neighbor};
use crate::poly1d::gauss_rule;

/// Largest tangential jump found and where.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct JumpReport {
    pub max_jump: f64,
    pub conforming_facets: usize,
    pub hanging_facets: usize,
    /// `(cell, local facet)` of the worst jump.
    pub worst: Option<(usize, usize)>,
}

/// Reference point on facet `f` for facet-local coordinates `(s, t)`.
pub fn facet_point(dim: usize, f: usize, s: f64, t: f64) -> Vec3 {
    let mut xh = Vec3::zeros();
    xh[f / 2] = (f % 2) as f64;
    let axes = facet_axes(dim, f);
    xh[axes[0]] = s;
    if dim == 3 {
        xh[axes[1]] = t;
    }
    xh
}

/// Unit outward normal of facet `f` at a point with Jacobian inverse `inv`.
pub fn facet_normal(inv: &crate::geometry::Mat3, f: usize) -> Vec3 {
    let mut nh = Vec3::zeros();
    nh[f / 2] = if f % 2 == 1 { 1.0 } else { -1.0 };
    let n = inv.transpose() * nh;
    n / n.norm()
}

/// Facet-local Gauss points `(s, t, weight)` on `[0,1]^(dim-1)`.
pub fn facet_rule(dim: usize, n: usize) -> Vec<(f64, f64, f64)> {
    let r = gauss_rule(n, [0.0, 1.0]).expect("valid rule");
    let mut out = Vec::new();
    if dim == 2 {
        for i in 0..n {
            out.push((r.points[i], 0.0, r.weights[i]));
        }
    } else {
        for j in 0..n {
            for i in 0..n {
                out.push((r.points[i], r.points[j], r.weights[i] * r.weights[j]));
            }
        }
    }
    out
}

fn facet_jump<T: FieldScalar>(disc: &Discretization, u: &[T], a: usize, f: usize, b: usize, n_points: usize) -> f64 {
    let dim = disc.dim();
    let ma = disc.mesh.cell_map(a);
    let mb = disc.mesh.cell_map(b);
    let mut worst: f64 = 0.0;
    for (s, t, _) in facet_rule(dim, n_points) {
        let xa = facet_point(dim, f, s, t);
        let mp = ma.at(&xa);
        let n = facet_normal(&mp.inv, f);
        let Some(xb) = mb.inverse(&mp.x) else {
            return f64::INFINITY;
        };
        if !contains_reference(dim, &xb, 1e-8) {
            return f64::INFINITY;
        }
        let va = disc.eval(u, a, &xa).tangential(&n);
        let vb = disc.eval(u, b, &xb).tangential(&n);
        let d = [va[0] - vb[0], va[1] - vb[1], va[2] - vb[2]];
        worst = worst.max(crate::discretization::norm3(&d));
    }
    worst
}

/// Maximum tangential jump of `u` over all interior facets, conforming and hanging.
pub fn max_tangential_jump<T: FieldScalar>(disc: &Discretization, u: &[T], n_points: usize) -> JumpReport {
    let dim = disc.dim();
    let pairs: Vec<(usize, usize, usize, bool)> = disc
        .mesh
        .active_cells()
        .into_iter()
        .flat_map(|a| (0..n_facets(dim)).map(move |f| (a, f)))
        .filter_map(|(a, f)| match disc.mesh.face_neighbor(a, f) {
            Neighbor::Same(b, _) if a < b => Some((a, f, b, false)),
            Neighbor::Coarser(b, _) => Some((a, f, b, true)),
            _ => None,
        })
        .collect();
    let jumps: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, f, b, _)| facet_jump(disc, u, a, f, b, n_points))
        .collect();
    let mut rep = JumpReport::default();
    for (&(a, f, _, hanging), &j) in pairs.iter().zip(&jumps) {
        if hanging {
            rep.hanging_facets += 1;
        } else {
            rep.conforming_facets += 1;
        }
        if j > rep.max_jump {
            rep.max_jump = j;
            rep.worst = Some((a, f));
        }
    }
    rep
}
