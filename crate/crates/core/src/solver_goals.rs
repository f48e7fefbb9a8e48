//! Direct solution of an assembled system and goal functionals.
//!
//! Goals are evaluated on the full coefficient vector: a point value
//! (taken in the lowest-id active cell containing the point), an integral
//! over an axis-aligned rectangle and an integral over all cells of one
//! material.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discretization::{combine, Discretization, FieldValue};
use crate::error::{Error, Result};
use crate::geometry::{to_vec3, Vec3};
use crate::maxwell_assembly::MaxwellSystem;
use crate::poly1d::{gauss_rule, tensor_rule};
use crate::sparse::{solve_direct_with, Ordering, SolveStats};

type C64 = Complex64;

/// Full coefficient vector of a solved system.
#[derive(Debug, Clone)]
pub struct Solution {
    pub coefficients: Vec<C64>,
    pub stats: SolveStats,
}

/// Solve, then reconstruct constrained DoFs and check they satisfy their equations.
pub fn solve_system(disc: &Discretization, sys: &MaxwellSystem) -> Result<Solution> {
    let positions = sys.elimination.free_positions(disc);
    let (x, stats) = solve_direct_with(&sys.matrix, &sys.rhs, Ordering::Geometric(&positions))?;
    let u = sys.elimination.reconstruct(disc, &x);
    let scale = u.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    for (&s, masters) in &disc.constraints.entries {
        let combo: C64 = masters.iter().map(|&(m, w)| u[m] * w).sum();
        if (u[s] - combo).norm() > 1e-13 * scale {
            return Err(Error::Invariant(format!(
                "constrained DoF {s} does not satisfy its constraint"
            )));
        }
    }
    Ok(Solution { coefficients: u, stats })
}

/// What is integrated or sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
    Z,
    /// `|u|²`, real.
    Intensity,
}

impl Component {
    fn pick(self, v: &[C64; 3]) -> C64 {
        match self {
            Component::X => v[0],
            Component::Y => v[1],
            Component::Z => v[2],
            Component::Intensity => C64::new(v.iter().map(|c| c.norm_sqr()).sum(), 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalKind {
    PointValue {
        point: Vec<f64>,
    },
    /// Rectangle `x[axis] = value`, other coordinates within `[lower, upper]`.
    FaceIntegral {
        axis: usize,
        value: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    DomainIntegral {
        material: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalFunctionalSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: GoalKind,
    pub component: Component,
}

fn pad3(v: &[f64], what: &str) -> Result<Vec3> {
    match v.len() {
        2 => Ok(Vec3::new(v[0], v[1], 0.0)),
        3 => Ok(Vec3::new(v[0], v[1], v[2])),
        _ => Err(Error::Config(format!("{what} must have 2 or 3 coordinates"))),
    }
}

/// Lower and upper corner of an axis-aligned box cell, or `None` if the cell is not one.
fn box_bounds(disc: &Discretization, c: usize) -> Option<(Vec3, Vec3)> {
    let map = disc.mesh.cell_map(c);
    let nodes = map.nodes();
    let lo = nodes.iter().fold(Vec3::repeat(f64::INFINITY), |m, p| m.inf(p));
    let hi = nodes.iter().fold(Vec3::repeat(f64::NEG_INFINITY), |m, p| m.sup(p));
    let tol = 1e-12 * map.diameter();
    for (v, x) in nodes.iter().enumerate() {
        for a in 0..disc.dim() {
            let want = if (v >> a) & 1 == 1 { hi[a] } else { lo[a] };
            if (x[a] - want).abs() > tol {
                return None;
            }
        }
    }
    Some((lo, hi))
}

fn face_integral(
    disc: &Discretization,
    u: &[C64],
    axis: usize,
    value: f64,
    lower: &Vec3,
    upper: &Vec3,
    comp: Component,
) -> Result<C64> {
    let dim = disc.dim();
    if axis >= dim {
        return Err(Error::Config(format!("face integral axis {axis} in {dim}D")));
    }
    let others: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
    let nq = 2 * (disc.element.degree() + 1);
    let rule = gauss_rule(nq, [0.0, 1.0])?;
    let mut owners = Vec::new();
    let mut closed = Vec::new();
    for c in disc.mesh.active_cells() {
        let (lo, hi) = box_bounds(disc, c).ok_or_else(|| {
            Error::Config(format!("face integral needs axis-aligned box cells; cell {c} is not"))
        })?;
        let tol = 1e-12 * (hi - lo).norm();
        if others.iter().any(|&a| hi[a] <= lower[a] + tol || lo[a] >= upper[a] - tol) {
            continue;
        }
        if value >= lo[axis] - tol && value < hi[axis] - tol {
            owners.push((c, lo, hi));
        } else if (value - hi[axis]).abs() <= tol {
            closed.push((c, lo, hi));
        }
    }
    if owners.is_empty() {
        owners = closed;
    }
    if owners.is_empty() {
        return Err(Error::Config(format!(
            "face integral plane x[{axis}] = {value} does not meet the mesh"
        )));
    }
    let mut total = C64::new(0.0, 0.0);
    let mut shapes = Vec::new();
    for (c, lo, hi) in owners {
        let map = disc.mesh.cell_map(c);
        let mut xh = Vec3::zeros();
        xh[axis] = ((value - lo[axis]) / (hi[axis] - lo[axis])).clamp(0.0, 1.0);
        // Clipped reference sub-interval and its length per in-plane axis.
        let spans: Vec<(f64, f64, f64)> = others
            .iter()
            .map(|&a| {
                let (l, h) = (lower[a].max(lo[a]), upper[a].min(hi[a]));
                let s0 = (l - lo[a]) / (hi[a] - lo[a]);
                let s1 = (h - lo[a]) / (hi[a] - lo[a]);
                (s0, s1 - s0, h - l)
            })
            .collect();
        let n2 = if dim == 3 { nq } else { 1 };
        for j in 0..n2 {
            for i in 0..nq {
                let mut w = rule.weights[i] * spans[0].2;
                xh[others[0]] = spans[0].0 + spans[0].1 * rule.points[i];
                if dim == 3 {
                    w *= rule.weights[j] * spans[1].2;
                    xh[others[1]] = spans[1].0 + spans[1].1 * rule.points[j];
                }
                let mp = map.at(&xh);
                disc.element
                    .eval_physical(disc.orientation.get(c), &xh, &mp, &mut shapes);
                let f = combine(&shapes, disc.dofs.cell_dofs(c), u);
                total += comp.pick(&f.value) * w;
            }
        }
    }
    Ok(total)
}

fn domain_integral(disc: &Discretization, u: &[C64], material: u32, comp: Component) -> Result<C64> {
    let qrule = tensor_rule(disc.dim(), 2 * (disc.element.degree() + 1))?;
    let mut total = C64::new(0.0, 0.0);
    let mut shapes = Vec::new();
    let mut found = false;
    for c in disc.mesh.active_cells() {
        if disc.mesh.cell(c).material != material {
            continue;
        }
        found = true;
        let map = disc.mesh.cell_map(c);
        for (xh, w) in &qrule {
            let xh = to_vec3(*xh);
            let mp = map.at(&xh);
            disc.element
                .eval_physical(disc.orientation.get(c), &xh, &mp, &mut shapes);
            let f = combine(&shapes, disc.dofs.cell_dofs(c), u);
            total += comp.pick(&f.value) * (w * mp.det.abs());
        }
    }
    if !found {
        return Err(Error::Config(format!("no active cell has material {material}")));
    }
    Ok(total)
}

/// Field value at a physical point, from the lowest-id active cell containing it.
pub fn point_value(disc: &Discretization, u: &[C64], x: &Vec3) -> Result<FieldValue<C64>> {
    let (c, xh) = disc
        .mesh
        .locate(x)
        .ok_or_else(|| Error::Config(format!("point {:?} lies in no cell", x.as_slice())))?;
    Ok(disc.eval(u, c, &xh))
}

/// Evaluate one goal functional; intensity goals have zero imaginary part.
pub fn evaluate_goal(disc: &Discretization, u: &[C64], spec: &GoalFunctionalSpec) -> Result<C64> {
    match &spec.kind {
        GoalKind::PointValue { point } => {
            let x = pad3(point, "point")?;
            Ok(spec.component.pick(&point_value(disc, u, &x)?.value))
        }
        GoalKind::FaceIntegral {
            axis,
            value,
            lower,
            upper,
        } => {
            let (l, h) = (pad3(lower, "lower")?, pad3(upper, "upper")?);
            face_integral(disc, u, *axis, *value, &l, &h, spec.component)
        }
        GoalKind::DomainIntegral { material } => domain_integral(disc, u, *material, spec.component),
    }
}

/// One row of a refinement study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub level: usize,
    pub dofs: usize,
    pub errors: Vec<f64>,
}

/// `|J(u_l) − J(u_ref)|` per goal.
pub fn goal_errors(values: &[C64], reference: &[C64]) -> Vec<f64> {
    values.iter().zip(reference).map(|(a, b)| (a - b).norm()).collect()
}

/// CSV with columns `level,dofs` followed by one error column per goal.
pub fn study_csv(goal_names: &[String], rows: &[StudyRow]) -> String {
    let mut s = String::from("level,dofs");
    for n in goal_names {
        s.push_str(&format!(",{n}_err"));
    }
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{}", r.level, r.dofs));
        for e in &r.errors {
            s.push_str(&format!(",{e:.6e}"));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::RefinedMesh;
    use crate::poly1d::PolynomialDegree;

    #[test]
    fn csv_layout() {
        let rows = vec![StudyRow {
            level: 0,
            dofs: 12,
            errors: vec![0.5, 0.25, 0.125],
        }];
        let names: Vec<String> = ["J_P", "J_F", "J_D"].iter().map(|s| s.to_string()).collect();
        let csv = study_csv(&names, &rows);
        assert_eq!(
            csv,
            "level,dofs,J_P_err,J_F_err,J_D_err\n0,12,5.000000e-1,2.500000e-1,1.250000e-1\n"
        );
    }

    #[test]
    fn point_outside_is_an_error() {
        let mesh = RefinedMesh::cube(2, 1, 1.0).unwrap();
        let d = Discretization::new(mesh, PolynomialDegree::new(1).unwrap()).unwrap();
        let u = vec![C64::new(0.0, 0.0); d.n_dofs()];
        assert!(point_value(&d, &u, &Vec3::new(2.0, 0.5, 0.0)).is_err());
    }
}
