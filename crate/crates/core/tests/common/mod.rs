#![allow(dead_code)]

use std::path::PathBuf;

use hpnedelec::continuity::max_tangential_jump;
use hpnedelec::discretization::Discretization;
use hpnedelec::geometry::Vec3;
use hpnedelec::mesh::{MeshFile, RefinedMesh};
use hpnedelec::poly1d::PolynomialDegree;
use hpnedelec::solver_goals::point_value;
use num_complex::Complex64;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_mesh(name: &str) -> RefinedMesh {
    MeshFile::load(&fixture(name)).unwrap().build().unwrap()
}

pub fn deg(p: u32) -> PolynomialDegree {
    PolynomialDegree::new(p).unwrap()
}

/// Two root cells side by side, the first one refined: one hanging facet.
pub fn one_hanging_interface(dim: usize) -> RefinedMesh {
    let mut m = RefinedMesh::brick(dim, [2, 1, 1], [0.0; 3], [2.0, 1.0, 1.0]).unwrap();
    m.refine_cells(&[0]).unwrap();
    m
}

/// `mesh` with vertex ids shuffled by `seed` (seed 0 keeps the numbering).
pub fn permuted(mesh: &RefinedMesh, seed: u64) -> RefinedMesh {
    if seed == 0 {
        mesh.clone()
    } else {
        mesh.permute_vertex_numbering(&mesh.random_permutation(seed)).unwrap()
    }
}

/// Largest tangential jump of a random conforming field, plus the number of hanging facets seen.
pub fn random_field_jump(mesh: RefinedMesh, p: u32, seed: u64) -> (f64, usize) {
    let disc = Discretization::new(mesh, deg(p)).unwrap();
    let u = disc.random_conforming(seed ^ 0x5eed);
    let r = max_tangential_jump(&disc, &u, p as usize + 2);
    (r.max_jump, r.hanging_facets)
}

/// Max over a lattice of points of the componentwise difference of two fields.
pub fn field_difference(
    a: (&Discretization, &[Complex64]),
    b: (&Discretization, &[Complex64]),
    lower: Vec3,
    upper: Vec3,
    n: usize,
) -> f64 {
    let dim = a.0.dim();
    let nz = if dim == 3 { n } else { 1 };
    let mut worst = 0.0f64;
    for k in 0..nz {
        for j in 0..n {
            for i in 0..n {
                let t = Vec3::new(i as f64, j as f64, k as f64) / (n - 1) as f64;
                let mut x = lower + (upper - lower).component_mul(&t);
                if dim == 2 {
                    x.z = 0.0;
                }
                let fa = point_value(a.0, a.1, &x).unwrap();
                let fb = point_value(b.0, b.1, &x).unwrap();
                for d in 0..3 {
                    worst = worst.max((fa.value[d] - fb.value[d]).norm());
                    worst = worst.max((fa.curl[d] - fb.curl[d]).norm());
                }
            }
        }
    }
    worst
}

/// Monomial coefficients of the Legendre polynomial `l_n` from Rodrigues' formula:
/// `l_n(x) = 2^-n Σ_k (-1)^k C(n,k) C(2n-2k, n) x^(n-2k)`.
pub fn rodrigues_coefficients(n: usize) -> Vec<f64> {
    let binom = |a: usize, b: usize| -> f64 {
        (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
    };
    let mut c = vec![0.0; n + 1];
    for k in 0..=n / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c[n - 2 * k] = sign * binom(n, k) * binom(2 * n - 2 * k, n) / 2f64.powi(n as i32);
    }
    c
}

pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}
