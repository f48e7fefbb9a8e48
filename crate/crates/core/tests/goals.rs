mod common;

use common::*;
use hpnedelec::discretization::Discretization;
use hpnedelec::maxwell_assembly::project_field;
use hpnedelec::mesh::RefinedMesh;
use hpnedelec::solver_goals::{evaluate_goal, GoalFunctionalSpec};
use num_complex::Complex64 as C64;
use serde_json::json;

fn goal(v: serde_json::Value) -> GoalFunctionalSpec {
    serde_json::from_value(v).unwrap()
}

fn setup() -> (Discretization, Vec<C64>) {
    let mut mesh = RefinedMesh::cube(3, 2, 1.0).unwrap();
    mesh.refine_cells(&[7]).unwrap();
    for c in mesh.active_cells() {
        let x = mesh.cell_center(c);
        if x.x < 0.5 && x.y < 0.5 && x.z < 0.5 {
            mesh.set_material(c, 1);
        }
    }
    let d = Discretization::new(permuted(&mesh, 4), deg(1)).unwrap();
    let k = [C64::new(1.0, 0.5), C64::new(2.0, 0.0), C64::new(0.0, -1.0)];
    let u = project_field(&d, |_| (k, [C64::new(0.0, 0.0); 3])).unwrap();
    (d, u)
}

fn close(a: C64, b: C64) -> bool {
    (a - b).norm() < 1e-11
}

#[test]
fn constant_field_goals_have_closed_forms() {
    let (d, u) = setup();
    let vol = 0.125;
    let jd = evaluate_goal(&d, &u, &goal(json!({"name": "J_D", "kind": "domain_integral", "material": 1, "component": "x"}))).unwrap();
    assert!(close(jd, C64::new(1.0, 0.5) * vol), "{jd}");
    let ji = evaluate_goal(&d, &u, &goal(json!({"name": "I", "kind": "domain_integral", "material": 1, "component": "intensity"}))).unwrap();
    assert!(close(ji, C64::new((1.25 + 4.0 + 1.0) * vol, 0.0)), "{ji}");

    let jp = evaluate_goal(&d, &u, &goal(json!({"name": "J_P", "kind": "point_value", "point": [0.6, 0.8, 0.9], "component": "z"}))).unwrap();
    assert!(close(jp, C64::new(0.0, -1.0)), "{jp}");

    // Rectangle of area 0.25 on an interior plane, on a cell boundary and on the domain boundary.
    for value in [0.3, 0.5, 1.0] {
        let jf = evaluate_goal(
            &d,
            &u,
            &goal(json!({"name": "J_F", "kind": "face_integral", "axis": 0, "value": value,
                         "lower": [0, 0.25, 0.25], "upper": [0, 0.75, 0.75], "component": "y"})),
        )
        .unwrap();
        assert!(close(jf, C64::new(0.5, 0.0)), "x = {value}: {jf}");
    }
}

#[test]
fn component_goals_are_linear() {
    let (d, _) = setup();
    let a: Vec<C64> = d.random_conforming(1).into_iter().map(|v| C64::new(v, 0.0)).collect();
    let b: Vec<C64> = d.random_conforming(2).into_iter().map(|v| C64::new(0.0, v)).collect();
    let (s, t) = (C64::new(0.7, -0.2), C64::new(-1.3, 0.4));
    let mix: Vec<C64> = a.iter().zip(&b).map(|(x, y)| s * x + t * y).collect();
    let goals = [
        json!({"name": "p", "kind": "point_value", "point": [0.21, 0.77, 0.4], "component": "x"}),
        json!({"name": "f", "kind": "face_integral", "axis": 2, "value": 0.6, "lower": [0.1, 0.1, 0], "upper": [0.9, 0.7, 0], "component": "y"}),
        json!({"name": "d", "kind": "domain_integral", "material": 0, "component": "z"}),
    ];
    for g in goals {
        let g = goal(g);
        let lhs = evaluate_goal(&d, &mix, &g).unwrap();
        let rhs = s * evaluate_goal(&d, &a, &g).unwrap() + t * evaluate_goal(&d, &b, &g).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0), "{}", g.name);
    }
}

#[test]
fn bad_goals_are_config_errors() {
    let (d, u) = setup();
    for g in [
        json!({"name": "p", "kind": "point_value", "point": [2.0, 0.5, 0.5], "component": "x"}),
        json!({"name": "d", "kind": "domain_integral", "material": 9, "component": "x"}),
        json!({"name": "f", "kind": "face_integral", "axis": 0, "value": 3.0, "lower": [0, 0, 0], "upper": [0, 1, 1], "component": "x"}),
    ] {
        let e = evaluate_goal(&d, &u, &goal(g)).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
