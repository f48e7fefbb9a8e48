mod common;

use std::process::{Command, Output};

use common::fixture;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpnedelec")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_lines(o: &Output) -> Vec<serde_json::Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn conforming_mesh_continuity() {
    let dir = std::env::temp_dir().join(format!("hpn-cli-{}", std::process::id()));
    let out = run(&["mesh", "gen", "--dim", "3", "--counts", "2,2,1", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let mesh = dir.join("mesh.json");
    let o = run(&["check-continuity", "--mesh", mesh.to_str().unwrap(), "--degree", "3", "--seed", "4"]);
    assert!(o.status.success());
    let v = &json_lines(&o)[0];
    assert!(v["max_jump"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["hanging_facets"], 0);

    let o = run(&["mesh", "refine", "--mesh", mesh.to_str().unwrap(), "--cells", "0", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(json_lines(&o)[0]["active_cells"], 11);
    let o = run(&["orient", "dump", "--mesh", mesh.to_str().unwrap()]);
    assert_eq!(json_lines(&o).len(), 11);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fig13_fixture_dump() {
    let o = run(&["constraints", "dump", "--degree", "2", "--mesh", &path("fig13_flipped_2d.json")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("C(0,0) rows [24, 25] cols [0, 1]\n  0.5 0.5\n  0 0.25\n"), "{text}");
    assert!(text.contains("C(1,0) rows [44, 45] cols [0, 1]\n  0.5 -0.5\n  0 0.25\n"), "{text}");
}

#[test]
fn canonical_dump_and_basis_eval() {
    let o = run(&["constraints", "dump", "--canonical", "--dim", "3", "--degree", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("canonical dim 3 degree 1\n"));
    let o = run(&["basis", "eval", "--dim", "2", "--degree", "1", "--name", "edge0.lowest", "--point", "0.25,0.5"]);
    assert!(o.status.success());
    let o2 = run(&["basis", "eval", "--dim", "2", "--degree", "1", "--name", "edge0.lowest", "--point", "0.25,0.5"]);
    assert_eq!(o.stdout, o2.stdout);
    let o = run(&["basis", "eval", "--dim", "2", "--degree", "1", "--name", "nope", "--point", "0.25,0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let cfg = path("minimal_cube.json");
    let a = run(&["solve", "--config", &cfg, "--seed", "3", "--threads", "1"]);
    let b = run(&["solve", "--config", &cfg, "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let g1 = run(&["goals", "--config", &cfg]);
    let g2 = run(&["goals", "--config", &cfg]);
    assert_eq!(g1.stdout, g2.stdout);
    assert_eq!(json_lines(&g1).len(), 3);
}

#[test]
fn study_writes_csv() {
    let dir = std::env::temp_dir().join(format!("hpn-study-{}", std::process::id()));
    let o = run(&["goals", "--config", &path("dielectric_2d.json"), "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("goals.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,dofs,J_P_err,J_F_err,J_D_err"));
    assert_eq!(lines.count(), 3);
    assert_eq!(json_lines(&o).len(), 3);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["solve"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--config", "/definitely/missing.json"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));

    let dir = std::env::temp_dir().join(format!("hpn-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"mesh": {"generate": {"dim": 3, "counts": [1,1,1], "lower": [0,0,0], "upper": [1,1,1]}}, "degree": 2, "wavelength": 1.0, "materials": {"0": {}}, "colour": 1}"#).unwrap();
    let o = run(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    // A negative tolerance cannot be met: invariant violation.
    let o = run(&["check-continuity", "--mesh", &path("fig10.json"), "--degree", "1", "--tolerance=-1"]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}
