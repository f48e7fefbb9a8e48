//! Mesh + orientation + element + DoFs + constraints, and field evaluation.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::constraints::{build_constraints, ConstraintSet};
use crate::dofs::{distribute_dofs, DofHandler};
use crate::error::Result;
use crate::geometry::Vec3;
use crate::mesh::RefinedMesh;
use crate::nedelec_basis::{NedelecElement, ShapeValue};
use crate::orientation::{orient_mesh, OrientationAssignment};
use crate::poly1d::PolynomialDegree;

/// Coefficient type of a discrete field.
pub trait FieldScalar:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + 'static
{
    fn modulus(self) -> f64;
}

impl FieldScalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl FieldScalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Value and curl of a discrete field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue<T> {
    pub value: [T; 3],
    pub curl: [T; 3],
}

impl<T: FieldScalar> FieldValue<T> {
    /// Tangential part `v - (v·n)n` for a unit real normal.
    pub fn tangential(&self, n: &Vec3) -> [T; 3] {
        let v = self.value;
        let vn = v[0] * n.x + v[1] * n.y + v[2] * n.z;
        [v[0] - vn * n.x, v[1] - vn * n.y, v[2] - vn * n.z]
    }
}

pub fn norm3<T: FieldScalar>(v: &[T; 3]) -> f64 {
    v.iter().map(|c| c.modulus().powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: RefinedMesh,
    pub orientation: OrientationAssignment,
    pub element: NedelecElement,
    pub dofs: DofHandler,
    pub constraints: ConstraintSet,
}

impl Discretization {
    pub fn new(mesh: RefinedMesh, p: PolynomialDegree) -> Result<Self> {
        let orientation = orient_mesh(&mesh);
        orientation.check_consistency(&mesh)?;
        let element = NedelecElement::new(mesh.dim(), p)?;
        let dofs = distribute_dofs(&mesh, &element);
        let constraints = build_constraints(&mesh, &orientation, &dofs)?;
        Ok(Self {
            mesh,
            orientation,
            element,
            dofs,
            constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    /// Physical shape values of `cell` at reference point `xh`.
    pub fn shapes(&self, cell: usize, xh: &Vec3, out: &mut Vec<ShapeValue>) {
        let map = self.mesh.cell_map(cell);
        let mp = map.at(xh);
        self.element
            .eval_physical(self.orientation.get(cell), xh, &mp, out);
    }

    /// Field with global coefficients `u` (constraints already distributed).
    pub fn eval<T: FieldScalar>(&self, u: &[T], cell: usize, xh: &Vec3) -> FieldValue<T> {
        let mut buf = Vec::new();
        self.shapes(cell, xh, &mut buf);
        combine(&buf, self.dofs.cell_dofs(cell), u)
    }

    /// Random coefficient vector that satisfies the constraints.
    pub fn random_conforming(&self, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut u: Vec<f64> = (0..self.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        self.constraints.distribute(&mut u);
        u
    }
}

pub fn combine<T: FieldScalar>(shapes: &[ShapeValue], dofs: &[usize], u: &[T]) -> FieldValue<T> {
    let mut value = [T::default(); 3];
    let mut curl = [T::default(); 3];
    for (s, &d) in shapes.iter().zip(dofs) {
        let c = u[d];
        for a in 0..3 {
            value[a] = value[a] + c * s.value[a];
            curl[a] = curl[a] + c * s.curl[a];
        }
    }
    FieldValue { value, curl }
}
