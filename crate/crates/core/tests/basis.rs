mod common;

use common::deg;
use hpnedelec::continuity::{facet_normal, facet_point};
use hpnedelec::geometry::{Mat3, Vec3};
use hpnedelec::mesh::{edges, facet_vertices, n_facets, vertex_bits};
use hpnedelec::nedelec_basis::{Entity, NedelecElement, ShapeValue};
use hpnedelec::orientation::CellOrientation;
use nalgebra::DMatrix;

fn reference(el: &NedelecElement, xh: &Vec3) -> Vec<ShapeValue> {
    let mut out = Vec::new();
    el.eval_reference(&CellOrientation::reference(el.dim()), xh, &mut out);
    out
}

#[test]
fn dof_counts_follow_closed_forms() {
    for p in 1..=6u32 {
        let n = p as usize;
        assert_eq!(NedelecElement::new(2, deg(p)).unwrap().n_dofs(), 2 * n * (n + 1));
        assert_eq!(NedelecElement::new(3, deg(p)).unwrap().n_dofs(), 3 * n * (n + 1) * (n + 1));
    }
}

#[test]
fn reference_curls_match_finite_differences() {
    let h = 1e-6;
    for dim in [2, 3] {
        let el = NedelecElement::new(dim, deg(4)).unwrap();
        let xh = if dim == 3 { Vec3::new(0.31, 0.62, 0.47) } else { Vec3::new(0.31, 0.62, 0.0) };
        let exact = reference(&el, &xh);
        let mut d = Vec::new();
        for j in 0..3 {
            if j >= dim {
                d.push(vec![Vec3::zeros(); exact.len()]);
                continue;
            }
            let mut e = Vec3::zeros();
            e[j] = h;
            let (a, b) = (reference(&el, &(xh + e)), reference(&el, &(xh - e)));
            d.push(a.iter().zip(&b).map(|(a, b)| (a.value - b.value) / (2.0 * h)).collect());
        }
        for (s, ex) in exact.iter().enumerate() {
            let fd = Vec3::new(
                d[1][s].z - d[2][s].y,
                d[2][s].x - d[0][s].z,
                d[0][s].y - d[1][s].x,
            );
            assert!((fd - ex.curl).norm() < 1e-7 * ex.curl.norm().max(1.0), "{}: {fd} vs {}", el.layout()[s], ex.curl);
        }
    }
}

#[test]
fn gradient_families_are_curl_free() {
    let el = NedelecElement::new(3, deg(5)).unwrap();
    for xh in [Vec3::new(0.1, 0.5, 0.9), Vec3::new(0.7, 0.2, 0.4)] {
        for (id, s) in el.layout().iter().zip(reference(&el, &xh)) {
            if id.kind.is_gradient() {
                assert!(s.curl.norm() < 1e-12, "{id}");
            }
        }
    }
}

#[test]
fn reference_mass_matrix_is_positive_definite() {
    for dim in [2, 3] {
        for p in 1..=4 {
            let el = NedelecElement::new(dim, deg(p)).unwrap();
            let n = el.n_dofs();
            let rule = hpnedelec::poly1d::tensor_rule(dim, p as usize + 2).unwrap();
            let mut m = DMatrix::<f64>::zeros(n, n);
            for (x, w) in &rule {
                let s = reference(&el, &Vec3::new(x[0], x[1], x[2]));
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] += w * s[i].value.dot(&s[j].value);
                    }
                }
            }
            let eig = m.symmetric_eigenvalues();
            let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(lo > 1e-10, "dim {dim} p {p}: smallest eigenvalue {lo}");
        }
    }
}

/// Unit tangent along reference edge `e`.
fn edge_tangent(dim: usize, e: usize) -> (Vec3, Vec3) {
    let [a, b] = edges(dim)[e];
    let pa = vertex_bits(a).map(|v| v as f64);
    let pb = vertex_bits(b).map(|v| v as f64);
    let (pa, pb) = (Vec3::from(pa), Vec3::from(pb));
    (pa, (pb - pa).normalize())
}

#[test]
fn tangential_traces_vanish_off_their_entity() {
    // Edge functions have no tangential trace on other edges; face
    // functions none on any edge or other face; interior functions none on
    // any facet.
    let dim = 3;
    let el = NedelecElement::new(dim, deg(3)).unwrap();
    let layout = el.layout();
    for e in 0..edges(dim).len() {
        let (a, t) = edge_tangent(dim, e);
        for s in [0.2, 0.55, 0.9] {
            let x = a + t * s;
            for (id, v) in layout.iter().zip(reference(&el, &x)) {
                if id.entity != Entity::Edge(e) {
                    assert!(v.value.dot(&t).abs() < 1e-13, "{id} on edge {e}");
                }
            }
        }
    }
    for f in 0..n_facets(dim) {
        let n = facet_normal(&Mat3::identity(), f);
        for (s, t) in [(0.3, 0.6), (0.8, 0.15)] {
            let x = facet_point(dim, f, s, t);
            for (id, v) in layout.iter().zip(reference(&el, &x)) {
                if matches!(id.entity, Entity::Cell) || matches!(id.entity, Entity::Face(g) if g != f) {
                    assert!(n.cross(&v.value).norm() < 1e-13, "{id} on face {f}");
                }
            }
        }
    }
    assert_eq!(facet_vertices(dim, 0).len(), 4);
}

#[test]
fn lowest_edge_functions_have_unit_circulation() {
    for dim in [2, 3] {
        let el = NedelecElement::new(dim, deg(2)).unwrap();
        let rule = hpnedelec::poly1d::gauss_rule(4, [0.0, 1.0]).unwrap();
        for e in 0..edges(dim).len() {
            let (a, t) = edge_tangent(dim, e);
            let k = el.find(&format!("edge{e}.lowest")).unwrap();
            let circ = rule.integrate(|s| reference(&el, &(a + t * s))[k].value.dot(&t));
            assert!((circ.abs() - 1.0).abs() < 1e-13, "edge {e}: {circ}");
        }
    }
}
