//! Multilinear cell maps from the reference cell `[0,1]^dim`.
//!
//! Two-dimensional cells are embedded in 3D with a unit `z` column so that
//! the same Piola formulas serve both dimensions.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Multilinear (bilinear/trilinear) map of one cell.
#[derive(Debug, Clone)]
pub struct CellMap {
    dim: usize,
    nodes: Vec<Vec3>,
}

/// Map data at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct MapPoint {
    pub x: Vec3,
    pub jac: Mat3,
    pub det: f64,
    pub inv: Mat3,
}

impl CellMap {
    /// `coords` are the cell vertices in lexicographic order.
    pub fn new(dim: usize, coords: &[[f64; 3]]) -> Self {
        assert_eq!(coords.len(), 1 << dim);
        Self {
            dim,
            nodes: coords.iter().map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    fn shape(&self, v: usize, xh: &Vec3) -> (f64, Vec3) {
        let mut val = 1.0;
        let mut f = [0.0; 3];
        let mut df = [0.0; 3];
        for a in 0..self.dim {
            if (v >> a) & 1 == 1 {
                f[a] = xh[a];
                df[a] = 1.0;
            } else {
                f[a] = 1.0 - xh[a];
                df[a] = -1.0;
            }
            val *= f[a];
        }
        let mut grad = Vec3::zeros();
        for a in 0..self.dim {
            let mut g = df[a];
            for b in 0..self.dim {
                if b != a {
                    g *= f[b];
                }
            }
            grad[a] = g;
        }
        (val, grad)
    }

    pub fn point(&self, xh: &Vec3) -> Vec3 {
        let mut x = Vec3::zeros();
        for (v, node) in self.nodes.iter().enumerate() {
            x += node * self.shape(v, xh).0;
        }
        x
    }

    /// `F[i][j] = d x_i / d xh_j`.
    pub fn jacobian(&self, xh: &Vec3) -> Mat3 {
        let mut f = Mat3::zeros();
        for (v, node) in self.nodes.iter().enumerate() {
            let g = self.shape(v, xh).1;
            f += node * g.transpose();
        }
        if self.dim == 2 {
            f[(2, 2)] = 1.0;
        }
        f
    }

    pub fn at(&self, xh: &Vec3) -> MapPoint {
        let jac = self.jacobian(xh);
        let det = jac.determinant();
        let inv = jac.try_inverse().unwrap_or_else(Mat3::zeros);
        MapPoint {
            x: self.point(xh),
            jac,
            det,
            inv,
        }
    }

    /// Reference coordinates of a physical point by Newton iteration.
    ///
    /// The result may lie outside the reference cell; callers decide on
    /// containment with [`contains_reference`].
    pub fn inverse(&self, x: &Vec3) -> Option<Vec3> {
        let mut xh = Vec3::new(0.5, 0.5, if self.dim == 3 { 0.5 } else { 0.0 });
        let scale = self.diameter().max(1e-300);
        for _ in 0..50 {
            let mut r = self.point(&xh) - x;
            if self.dim == 2 {
                r[2] = 0.0;
            }
            if r.norm() <= 1e-15 * scale {
                return Some(xh);
            }
            let jinv = self.jacobian(&xh).try_inverse()?;
            let mut dx = jinv * r;
            if self.dim == 2 {
                dx[2] = 0.0;
            }
            xh -= dx;
            if dx.norm() < 1e-15 {
                return Some(xh);
            }
        }
        let mut r = self.point(&xh) - x;
        if self.dim == 2 {
            r[2] = 0.0;
        }
        (r.norm() < 1e-10 * scale).then_some(xh)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.nodes {
            for b in &self.nodes {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn center(&self) -> Vec3 {
        self.nodes.iter().sum::<Vec3>() / self.nodes.len() as f64
    }
}

pub fn contains_reference(dim: usize, xh: &Vec3, tol: f64) -> bool {
    (0..dim).all(|a| xh[a] >= -tol && xh[a] <= 1.0 + tol)
}

pub fn to_vec3(c: [f64; 3]) -> Vec3 {
    Vec3::new(c[0], c[1], c[2])
}
