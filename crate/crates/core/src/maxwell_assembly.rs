//! Time-harmonic Maxwell system: volume, absorbing and incident terms.
//!
//! The bilinear form is
//! `∫ μ⁻¹ curl u · curl φ − ε ω² u · φ dx + iκω ∫_{Γ∞} γᵀu · γᵀφ ds`
//! with right-hand side `∫_{Γinc} γᵀu_inc · γᵀφ ds`, where `γᵀv = v − (v·n)n`.
//! All products are bilinear (no conjugation), so the matrix is complex
//! symmetric. Constrained DoFs are eliminated during assembly: every local
//! row and column is expanded onto free DoFs through the constraint weights,
//! so the system has one unknown per unconstrained DoF.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuity::{facet_normal, facet_point, facet_rule};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::{to_vec3, Vec3};
use crate::mesh::{facet_axes, facet_vertices, n_facets, Neighbor};
use crate::nedelec_basis::ShapeValue;
use crate::poly1d::tensor_rule;
use crate::sparse::{CsrMatrix, TripletAccumulator};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Coefficients of one material for a fixed wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub mu: f64,
    pub epsilon: C64,
    pub kappa: C64,
    pub omega: f64,
    pub lambda_wavelength: f64,
}

impl MaterialParams {
    pub fn new(mu: f64, epsilon: C64, lambda_wavelength: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {mu}")));
        }
        if !(lambda_wavelength > 0.0 && lambda_wavelength.is_finite()) {
            return Err(Error::Config(format!(
                "wavelength must be positive, got {lambda_wavelength}"
            )));
        }
        if !(epsilon.re.is_finite() && epsilon.im.is_finite()) {
            return Err(Error::Config("epsilon must be finite".into()));
        }
        Ok(Self {
            mu,
            epsilon,
            kappa: epsilon.sqrt(),
            omega: 2.0 * std::f64::consts::PI / lambda_wavelength,
            lambda_wavelength,
        })
    }

    /// Material with refractive index `n`, so `ε = n²`.
    pub fn from_index(n: C64, lambda_wavelength: f64) -> Result<Self> {
        Self::new(1.0, n * n, lambda_wavelength)
    }
}

/// Plane wave `a · pol · exp(−iωκ d·x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    direction: Vec3,
    polarization: Vec3,
    amplitude: C64,
}

impl IncidentWave {
    /// Directions are normalized; they must be orthogonal.
    pub fn new(direction: Vec3, polarization: Vec3, amplitude: C64) -> Result<Self> {
        let (dn, pn) = (direction.norm(), polarization.norm());
        if dn == 0.0 || pn == 0.0 || !dn.is_finite() || !pn.is_finite() {
            return Err(Error::Config("incident direction and polarization must be nonzero".into()));
        }
        let (d, p) = (direction / dn, polarization / pn);
        if d.dot(&p).abs() > 1e-10 {
            return Err(Error::Config(
                "incident polarization must be orthogonal to the direction".into(),
            ));
        }
        Ok(Self {
            direction: d,
            polarization: p,
            amplitude,
        })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn polarization(&self) -> Vec3 {
        self.polarization
    }

    pub fn amplitude(&self) -> C64 {
        self.amplitude
    }

    pub fn value(&self, x: &Vec3, omega: f64, kappa: C64) -> [C64; 3] {
        let phase = C64::new(0.0, -omega * self.direction.dot(x)) * kappa;
        let s = self.amplitude * phase.exp();
        [
            s * self.polarization.x,
            s * self.polarization.y,
            s * self.polarization.z,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Incident,
    Absorbing,
}

/// Boundary facets lying in the plane `x[axis] = value` get `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRule {
    pub axis: usize,
    pub value: f64,
    pub kind: BoundaryKind,
}

/// First matching rule wins; unmatched facets get `default`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryTagging {
    #[serde(default)]
    pub rules: Vec<BoundaryRule>,
    #[serde(default)]
    pub default: Option<BoundaryKind>,
}

impl BoundaryTagging {
    pub fn all(kind: BoundaryKind) -> Self {
        Self {
            rules: Vec::new(),
            default: Some(kind),
        }
    }

    pub fn classify(&self, corners: &[Vec3], tol: f64) -> Option<BoundaryKind> {
        self.rules
            .iter()
            .find(|r| r.axis < 3 && corners.iter().all(|x| (x[r.axis] - r.value).abs() <= tol))
            .map(|r| r.kind)
            .or(self.default)
    }
}

/// Everything besides the discretization needed to assemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxwellProblem {
    /// Indexed by cell material id.
    pub materials: BTreeMap<u32, MaterialParams>,
    pub incident: Option<IncidentWave>,
    pub boundary: BoundaryTagging,
}

impl MaxwellProblem {
    pub fn material(&self, id: u32) -> Result<&MaterialParams> {
        self.materials
            .get(&id)
            .ok_or_else(|| Error::Config(format!("no material with id {id}")))
    }
}

/// Free (unconstrained) DoFs and how constrained ones expand onto them.
#[derive(Debug, Clone)]
pub struct Elimination {
    n_dofs: usize,
    free_dofs: Vec<usize>,
    free_index: Vec<usize>,
    expansion: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl Elimination {
    pub fn new(disc: &Discretization) -> Result<Self> {
        let n = disc.n_dofs();
        let cs = &disc.constraints;
        let mut free_index = vec![usize::MAX; n];
        let mut free_dofs = Vec::new();
        for (d, slot) in free_index.iter_mut().enumerate() {
            if !cs.is_constrained(d) {
                *slot = free_dofs.len();
                free_dofs.push(d);
            }
        }
        let mut expansion = BTreeMap::new();
        for (&slave, masters) in &cs.entries {
            let mut list = Vec::with_capacity(masters.len());
            for &(m, w) in masters {
                if free_index[m] == usize::MAX {
                    return Err(Error::Invariant(format!(
                        "DoF {slave} is constrained to DoF {m}, which is itself constrained"
                    )));
                }
                list.push((free_index[m], w));
            }
            expansion.insert(slave, list);
        }
        Ok(Self {
            n_dofs: n,
            free_dofs,
            free_index,
            expansion,
        })
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Calls `f(free, weight)` for every free DoF that global DoF `g` depends on.
    pub fn expand(&self, g: usize, mut f: impl FnMut(usize, f64)) {
        let i = self.free_index[g];
        if i != usize::MAX {
            f(i, 1.0);
        } else if let Some(list) = self.expansion.get(&g) {
            for &(m, w) in list {
                f(m, w);
            }
        }
    }

    /// Full coefficient vector from free values; constrained entries are reconstructed.
    pub fn reconstruct(&self, disc: &Discretization, x: &[C64]) -> Vec<C64> {
        let mut u = vec![ZERO; self.n_dofs];
        for (k, &d) in self.free_dofs.iter().enumerate() {
            u[d] = x[k];
        }
        disc.constraints.distribute(&mut u);
        u
    }

    /// Positions of the free DoFs, for geometric orderings.
    pub fn free_positions(&self, disc: &Discretization) -> Vec<[f64; 3]> {
        let all = disc.dofs.dof_positions(&disc.mesh);
        self.free_dofs.iter().map(|&d| all[d]).collect()
    }

    pub fn restrict(&self, u: &[C64]) -> Vec<C64> {
        self.free_dofs.iter().map(|&d| u[d]).collect()
    }
}

/// Assembled and constraint-eliminated linear system.
#[derive(Debug, Clone)]
pub struct MaxwellSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<C64>,
    pub elimination: Elimination,
    pub incident_facets: usize,
    pub absorbing_facets: usize,
}

impl MaxwellSystem {
    /// Number of unknowns (unconstrained DoFs).
    pub fn dof_count(&self) -> usize {
        self.elimination.n_free()
    }
}

/// Per-cell coefficients `(a, b)` of `a curl·curl + b mass`.
type CellCoef<'a> = dyn Fn(usize) -> Result<(C64, C64)> + Sync + 'a;
/// Volume source `(g, h)` giving the right-hand side `∫ h·curl φ + g·φ`.
type VolumeSource<'a> = dyn Fn(&Vec3) -> ([C64; 3], [C64; 3]) + Sync + 'a;

struct BoundaryFacet {
    cell: usize,
    facet: usize,
    kind: BoundaryKind,
}

struct LocalOutput {
    dofs: Vec<usize>,
    mat: Vec<C64>,
    vec: Vec<C64>,
}

fn dot3(a: &[C64; 3], b: &Vec3) -> C64 {
    a[0] * b.x + a[1] * b.y + a[2] * b.z
}

/// Boundary facets of all active cells, tagged.
fn boundary_facets(disc: &Discretization, tagging: &BoundaryTagging) -> Result<Vec<BoundaryFacet>> {
    let mesh = &disc.mesh;
    let dim = mesh.dim();
    let mut out = Vec::new();
    for c in mesh.active_cells() {
        for f in 0..n_facets(dim) {
            if mesh.face_neighbor(c, f) != Neighbor::Boundary {
                continue;
            }
            let v = &mesh.cell(c).vertices;
            let corners: Vec<Vec3> = facet_vertices(dim, f).iter().map(|&q| mesh.vertex(v[q])).collect();
            let tol = 1e-9 * mesh.cell_map(c).diameter();
            let kind = tagging.classify(&corners, tol).ok_or_else(|| {
                Error::Config(format!(
                    "boundary facet {f} of cell {c} at {:?} matches no boundary rule",
                    corners[0].as_slice()
                ))
            })?;
            out.push(BoundaryFacet { cell: c, facet: f, kind });
        }
    }
    Ok(out)
}

/// Surface measure of facet `f` at a point with Jacobian `jac`.
fn facet_measure(dim: usize, f: usize, jac: &crate::geometry::Mat3) -> f64 {
    let axes = facet_axes(dim, f);
    let a = jac.column(axes[0]).into_owned();
    if dim == 2 {
        a.norm()
    } else {
        a.cross(&jac.column(axes[1]).into_owned()).norm()
    }
}

fn n_quad(disc: &Discretization) -> usize {
    2 * (disc.element.degree() + 1)
}

#[allow(clippy::too_many_arguments)]
fn local_system(
    disc: &Discretization,
    cell: usize,
    coef: &CellCoef,
    source: Option<&VolumeSource>,
    facets: &[&BoundaryFacet],
    problem: Option<&MaxwellProblem>,
    qrule: &[([f64; 3], f64)],
    frule: &[(f64, f64, f64)],
) -> Result<LocalOutput> {
    let dim = disc.dim();
    let n = disc.element.n_dofs();
    let (a, b) = coef(cell)?;
    let map = disc.mesh.cell_map(cell);
    let orient = disc.orientation.get(cell);
    let mut mat = vec![ZERO; n * n];
    let mut vec = vec![ZERO; n];
    let mut shapes: Vec<ShapeValue> = Vec::with_capacity(n);
    let mut cc = vec![0.0; n * n];
    let mut mm = vec![0.0; n * n];
    for (xh, w) in qrule {
        let xh = to_vec3(*xh);
        let mp = map.at(&xh);
        disc.element.eval_physical(orient, &xh, &mp, &mut shapes);
        let jw = w * mp.det.abs();
        for i in 0..n {
            let (ci, vi) = (shapes[i].curl * jw, shapes[i].value * jw);
            for j in i..n {
                cc[i * n + j] += ci.dot(&shapes[j].curl);
                mm[i * n + j] += vi.dot(&shapes[j].value);
            }
        }
        if let Some(src) = source {
            let (g, h) = src(&mp.x);
            for i in 0..n {
                vec[i] += (dot3(&h, &shapes[i].curl) + dot3(&g, &shapes[i].value)) * jw;
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let v = a * cc[i * n + j] + b * mm[i * n + j];
            mat[i * n + j] = v;
            mat[j * n + i] = v;
        }
    }
    if let Some(problem) = problem {
        let mat_params = problem.material(disc.mesh.cell(cell).material)?;
        for bf in facets {
            let coef_abs = C64::new(0.0, 1.0) * mat_params.kappa * mat_params.omega;
            for &(s, t, w) in frule {
                let xh = facet_point(dim, bf.facet, s, t);
                let mp = map.at(&xh);
                let nrm = facet_normal(&mp.inv, bf.facet);
                let ds = w * facet_measure(dim, bf.facet, &mp.jac);
                disc.element.eval_physical(orient, &xh, &mp, &mut shapes);
                let tr: Vec<Vec3> = shapes
                    .iter()
                    .map(|s| s.value - nrm * s.value.dot(&nrm))
                    .collect();
                match bf.kind {
                    BoundaryKind::Absorbing => {
                        for i in 0..n {
                            for j in 0..n {
                                mat[i * n + j] += coef_abs * (tr[i].dot(&tr[j]) * ds);
                            }
                        }
                    }
                    BoundaryKind::Incident => {
                        if let Some(inc) = &problem.incident {
                            let u = inc.value(&mp.x, mat_params.omega, mat_params.kappa);
                            let un = dot3(&u, &nrm);
                            let ut = [u[0] - un * nrm.x, u[1] - un * nrm.y, u[2] - un * nrm.z];
                            for i in 0..n {
                                vec[i] += dot3(&ut, &tr[i]) * ds;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(LocalOutput {
        dofs: disc.dofs.cell_dofs(cell).to_vec(),
        mat,
        vec,
    })
}

fn assemble_generic(
    disc: &Discretization,
    coef: &CellCoef,
    source: Option<&VolumeSource>,
    problem: Option<&MaxwellProblem>,
) -> Result<MaxwellSystem> {
    let dim = disc.dim();
    let elim = Elimination::new(disc)?;
    let nf = elim.n_free();
    let bfacets = match problem {
        Some(p) => boundary_facets(disc, &p.boundary)?,
        None => Vec::new(),
    };
    let qrule = tensor_rule(dim, n_quad(disc))?;
    let frule = facet_rule(dim, n_quad(disc));
    let cells = disc.mesh.active_cells();
    let mut by_cell: BTreeMap<usize, Vec<&BoundaryFacet>> = BTreeMap::new();
    for bf in &bfacets {
        by_cell.entry(bf.cell).or_default().push(bf);
    }
    let mut acc = TripletAccumulator::new(nf);
    let mut rhs = vec![ZERO; nf];
    let mut rows: Vec<(usize, f64)> = Vec::new();
    let mut cols: Vec<(usize, f64)> = Vec::new();
    for chunk in cells.chunks(256) {
        let locals: Vec<Result<LocalOutput>> = chunk
            .par_iter()
            .map(|&c| {
                let facets = by_cell.get(&c).map(|v| v.as_slice()).unwrap_or(&[]);
                local_system(disc, c, coef, source, facets, problem, &qrule, &frule)
            })
            .collect();
        for loc in locals {
            let loc = loc?;
            let n = loc.dofs.len();
            for i in 0..n {
                rows.clear();
                elim.expand(loc.dofs[i], |m, w| rows.push((m, w)));
                if rows.is_empty() {
                    continue;
                }
                for &(r, wr) in &rows {
                    rhs[r] += loc.vec[i] * wr;
                }
                for j in 0..n {
                    let v = loc.mat[i * n + j];
                    if v == ZERO {
                        continue;
                    }
                    cols.clear();
                    elim.expand(loc.dofs[j], |m, w| cols.push((m, w)));
                    for &(r, wr) in &rows {
                        for &(c, wc) in &cols {
                            acc.push(r, c, v * (wr * wc));
                        }
                    }
                }
            }
        }
    }
    let incident_facets = bfacets.iter().filter(|b| b.kind == BoundaryKind::Incident).count();
    Ok(MaxwellSystem {
        matrix: acc.finish(),
        rhs,
        elimination: elim,
        incident_facets,
        absorbing_facets: bfacets.len() - incident_facets,
    })
}

/// Assemble the Maxwell system on a discretization.
pub fn assemble(disc: &Discretization, problem: &MaxwellProblem) -> Result<MaxwellSystem> {
    let coef = |c: usize| -> Result<(C64, C64)> {
        let m = problem.material(disc.mesh.cell(c).material)?;
        Ok((C64::new(1.0 / m.mu, 0.0), -m.epsilon * (m.omega * m.omega)))
    };
    assemble_generic(disc, &coef, None, Some(problem))
}

/// System of the `H(curl)` projection `(curl u, curl φ) + (u, φ) = (curl f, curl φ) + (f, φ)`.
pub fn assemble_projection<F>(disc: &Discretization, field: F) -> Result<MaxwellSystem>
where
    F: Fn(&Vec3) -> ([C64; 3], [C64; 3]) + Sync,
{
    let one = C64::new(1.0, 0.0);
    let coef = |_c: usize| -> Result<(C64, C64)> { Ok((one, one)) };
    assemble_generic(disc, &coef, Some(&field), None)
}

/// `H(curl)` projection of an analytic field given as `x ↦ (value, curl)`.
///
/// Returns the full coefficient vector with constrained DoFs reconstructed.
pub fn project_field<F>(disc: &Discretization, field: F) -> Result<Vec<C64>>
where
    F: Fn(&Vec3) -> ([C64; 3], [C64; 3]) + Sync,
{
    let sys = assemble_projection(disc, field)?;
    Ok(crate::solver_goals::solve_system(disc, &sys)?.coefficients)
}

/// `L²` norms of `u_h − f` and of `curl u_h − curl f`.
pub fn field_errors<F>(disc: &Discretization, u: &[C64], field: F) -> Result<(f64, f64)>
where
    F: Fn(&Vec3) -> ([C64; 3], [C64; 3]),
{
    let qrule = tensor_rule(disc.dim(), n_quad(disc) + 1)?;
    let mut shapes = Vec::new();
    let (mut ev, mut ec) = (0.0, 0.0);
    for c in disc.mesh.active_cells() {
        let map = disc.mesh.cell_map(c);
        for (xh, w) in &qrule {
            let xh = to_vec3(*xh);
            let mp = map.at(&xh);
            disc.element
                .eval_physical(disc.orientation.get(c), &xh, &mp, &mut shapes);
            let uh = crate::discretization::combine(&shapes, disc.dofs.cell_dofs(c), u);
            let (g, h) = field(&mp.x);
            let jw = w * mp.det.abs();
            for k in 0..3 {
                ev += (uh.value[k] - g[k]).norm_sqr() * jw;
                ec += (uh.curl[k] - h[k]).norm_sqr() * jw;
            }
        }
    }
    Ok((ev.sqrt(), ec.sqrt()))
}

/// Unconstrained element curl-curl and mass matrices of one cell.
pub fn element_matrices(disc: &Discretization, cell: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = disc.element.n_dofs();
    let qrule = tensor_rule(disc.dim(), n_quad(disc))?;
    let map = disc.mesh.cell_map(cell);
    let mut k = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    let mut shapes = Vec::new();
    for (xh, w) in &qrule {
        let xh = to_vec3(*xh);
        let mp = map.at(&xh);
        disc.element
            .eval_physical(disc.orientation.get(cell), &xh, &mp, &mut shapes);
        let jw = w * mp.det.abs();
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] += shapes[i].curl.dot(&shapes[j].curl) * jw;
                m[(i, j)] += shapes[i].value.dot(&shapes[j].value) * jw;
            }
        }
    }
    Ok((k, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::RefinedMesh;
    use crate::poly1d::PolynomialDegree;

    fn disc(dim: usize, n: usize, p: u32) -> Discretization {
        let mesh = RefinedMesh::cube(dim, n, 1.0).unwrap();
        Discretization::new(mesh, PolynomialDegree::new(p).unwrap()).unwrap()
    }

    #[test]
    fn material_invariants() {
        let m = MaterialParams::new(1.0, C64::new(4.0, 0.0), 0.5).unwrap();
        assert!((m.omega * m.lambda_wavelength - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((m.kappa - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(MaterialParams::new(0.0, C64::new(1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn incident_wave_requires_orthogonal_polarization() {
        let e = IncidentWave::new(Vec3::x(), Vec3::new(1.0, 1.0, 0.0), C64::new(1.0, 0.0));
        assert!(e.is_err());
    }

    #[test]
    fn untagged_boundary_is_rejected() {
        let d = disc(2, 1, 1);
        let problem = MaxwellProblem {
            materials: [(0, MaterialParams::new(1.0, C64::new(1.0, 0.0), 1.0).unwrap())].into(),
            incident: None,
            boundary: BoundaryTagging::default(),
        };
        assert!(matches!(assemble(&d, &problem), Err(Error::Config(_))));
    }

    #[test]
    fn matrix_is_complex_symmetric() {
        let mut mesh = RefinedMesh::cube(3, 2, 1.0).unwrap();
        mesh.refine_cells(&[0]).unwrap();
        let d = Discretization::new(mesh, PolynomialDegree::new(2).unwrap()).unwrap();
        let problem = MaxwellProblem {
            materials: [(0, MaterialParams::new(1.0, C64::new(2.0, 0.1), 1.0).unwrap())].into(),
            incident: None,
            boundary: BoundaryTagging::all(BoundaryKind::Absorbing),
        };
        let sys = assemble(&d, &problem).unwrap();
        assert_eq!(sys.dof_count(), d.n_dofs() - d.constraints.n_constrained());
        assert!(sys.matrix.symmetry_defect() < 1e-12);
    }
}
