//! Legacy ASCII VTK export of a complex field.
//!
//! Each active cell is split into `s^dim` sub-cells with their own copies of
//! the corner points, so fields that are discontinuous across cells (the
//! normal component) are shown as computed. Point data: real part, imaginary
//! part and intensity `|u|²`; cell data: material id and refinement level.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::discretization::Discretization;
use crate::geometry::Vec3;

const VTK_QUAD: u8 = 9;
const VTK_HEXAHEDRON: u8 = 12;

/// Lexicographic corner bits in VTK's counter-clockwise order.
const VTK_CORNERS: [usize; 8] = [0, 1, 3, 2, 4, 5, 7, 6];

/// Render the field `u` (full coefficient vector) as a VTK legacy file.
pub fn write_vtk(disc: &Discretization, u: &[Complex64], subdivisions: usize) -> String {
    let dim = disc.dim();
    let s = subdivisions.max(1);
    let nv = 1 << dim;
    let cells = disc.mesh.active_cells();
    let per_cell = s.pow(dim as u32);
    let n_sub = cells.len() * per_cell;
    let mut points: Vec<Vec3> = Vec::with_capacity(n_sub * nv);
    let mut re: Vec<[f64; 3]> = Vec::with_capacity(n_sub * nv);
    let mut im: Vec<[f64; 3]> = Vec::with_capacity(n_sub * nv);
    let mut intensity = Vec::with_capacity(n_sub * nv);
    let mut cell_data = Vec::with_capacity(n_sub);
    let nz = if dim == 3 { s } else { 1 };
    for &c in &cells {
        let map = disc.mesh.cell_map(c);
        for k in 0..nz {
            for j in 0..s {
                for i in 0..s {
                    for &bits in &VTK_CORNERS[..nv] {
                        let mut xh = Vec3::new(
                            (i + (bits & 1)) as f64 / s as f64,
                            (j + ((bits >> 1) & 1)) as f64 / s as f64,
                            0.0,
                        );
                        if dim == 3 {
                            xh.z = (k + ((bits >> 2) & 1)) as f64 / s as f64;
                        }
                        let f = disc.eval(u, c, &xh);
                        points.push(map.point(&xh));
                        re.push(f.value.map(|v| v.re));
                        im.push(f.value.map(|v| v.im));
                        intensity.push(f.value.iter().map(|v| v.norm_sqr()).sum::<f64>());
                    }
                    let cell = disc.mesh.cell(c);
                    cell_data.push((cell.material, cell.level));
                }
            }
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nhpnedelec field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(out, "{:.9e} {:.9e} {:.9e}", p.x, p.y, p.z);
    }
    let _ = writeln!(out, "CELLS {} {}", n_sub, n_sub * (nv + 1));
    for q in 0..n_sub {
        out.push_str(&nv.to_string());
        for v in 0..nv {
            let _ = write!(out, " {}", q * nv + v);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_TYPES {n_sub}");
    let t = if dim == 3 { VTK_HEXAHEDRON } else { VTK_QUAD };
    for _ in 0..n_sub {
        let _ = writeln!(out, "{t}");
    }
    let _ = writeln!(out, "POINT_DATA {}", points.len());
    for (name, data) in [("re_u", &re), ("im_u", &im)] {
        let _ = writeln!(out, "VECTORS {name} double");
        for v in data {
            let _ = writeln!(out, "{:.9e} {:.9e} {:.9e}", v[0], v[1], v[2]);
        }
    }
    out.push_str("SCALARS intensity double 1\nLOOKUP_TABLE default\n");
    for v in &intensity {
        let _ = writeln!(out, "{v:.9e}");
    }
    let _ = writeln!(out, "CELL_DATA {n_sub}");
    out.push_str("SCALARS material int 1\nLOOKUP_TABLE default\n");
    for (m, _) in &cell_data {
        let _ = writeln!(out, "{m}");
    }
    out.push_str("SCALARS level int 1\nLOOKUP_TABLE default\n");
    for (_, l) in &cell_data {
        let _ = writeln!(out, "{l}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::RefinedMesh;
    use crate::poly1d::PolynomialDegree;

    #[test]
    fn counts_match_headers() {
        let mesh = RefinedMesh::cube(3, 1, 1.0).unwrap();
        let d = Discretization::new(mesh, PolynomialDegree::new(1).unwrap()).unwrap();
        let u = vec![Complex64::new(1.0, 0.5); d.n_dofs()];
        let text = write_vtk(&d, &u, 2);
        assert!(text.contains("POINTS 64 double"));
        assert!(text.contains("CELLS 8 72"));
        assert!(text.contains("CELL_TYPES 8\n12\n"));
        assert_eq!(text, write_vtk(&d, &u, 2));
    }
}
