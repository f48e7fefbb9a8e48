//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines appear in order and
//! uncaptured. Exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};

use hpnedelec::constraints::{adapt_edge_constraints, reference_constraint_weights};
use hpnedelec::discretization::Discretization;
use hpnedelec::geometry::{CellMap, Vec3};
use hpnedelec::mesh::{edge_on_parent_edge, RefinedMesh};
use hpnedelec::nedelec_basis::ShapeValue;
use hpnedelec::poly1d::{gauss_rule, legendre};
use hpnedelec::scenario::{run_study, solve_on, ScenarioConfig};

use common::*;

type Check = fn() -> Result<String, String>;

fn main() {
    let checks: [(u32, &str, Check); 10] = [
        (1, "Legendre orthogonality", c1_legendre),
        (2, "hanging edge p=1 weights", c2_fig11),
        (3, "hanging edge p=2 matrix after parity rule", c3_fig13),
        (4, "parity law on random edge blocks", c4_parity),
        (5, "trace reproduction under random numbering", c5_trace),
        (6, "solved-field continuity, minimal cube", c6_continuity),
        (7, "orientation independence of the solution", c7_independence),
        (8, "goal-error decay, dielectric inclusion", c8_study),
        (9, "Piola curls vs finite differences", c9_piola),
        (10, "edge-only hanging edge fixture", c10_edge_only),
    ];
    let mut failed = 0;
    for (n, name, f) in checks {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_legendre() -> Result<String, String> {
    let t = Instant::now();
    let rule = gauss_rule(12, [-1.0, 1.0]).map_err(|e| e.to_string())?;
    let mut ortho = 0.0f64;
    let mut oracle = 0.0f64;
    for i in 0..=8 {
        let c = rodrigues_coefficients(i);
        for k in 0..=20 {
            let x = -1.0 + k as f64 / 10.0;
            oracle = oracle.max((legendre(i, x) - horner(&c, x)).abs());
        }
        for j in 0..=8 {
            let got = rule.integrate(|x| legendre(i, x) * legendre(j, x));
            let want = if i == j { 2.0 / (2 * i + 1) as f64 } else { 0.0 };
            ortho = ortho.max((got - want).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(
        ortho < 1e-12 && oracle < 1e-12 && secs < 1.0,
        format!("max defect {ortho:.1e}, recurrence vs Rodrigues {oracle:.1e}, {secs:.3} s"),
    )
}

fn c2_fig11() -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for mesh in [one_hanging_interface(2), load_mesh("fig13_flipped_2d.json")] {
        let disc = Discretization::new(mesh, deg(1)).map_err(|e| e.to_string())?;
        for masters in disc.constraints.entries.values() {
            if masters.len() != 1 {
                return Err(format!("slave with {} masters", masters.len()));
            }
            worst = worst.max((masters[0].1.abs() - 0.5).abs());
            count += 1;
        }
        let ic = &disc.constraints.interfaces[0];
        for b in &ic.blocks {
            worst = worst.max((b.weights[(0, 0)] - 0.5).abs());
        }
    }
    ensure(
        count == 4 && worst < 1e-13,
        format!("{count} constrained DoFs, max |w - 1/2| = {worst:.1e}"),
    )
}

fn c3_fig13() -> Result<String, String> {
    let expected = DMatrix::from_row_slice(4, 2, &[0.5, 0.5, 0.0, 0.25, 0.5, -0.5, 0.0, 0.25]);
    let mesh = load_mesh("fig13_flipped_2d.json");
    let disc = Discretization::new(mesh, deg(2)).map_err(|e| e.to_string())?;
    let ic = &disc.constraints.interfaces[0];
    let [a, b] = [ic.interface.corners[0], ic.interface.corners[1]];
    if a < b {
        return Err("fixture's coarse edge is not reversed".into());
    }

    // The parity rule on the canonical blocks, with the coarse edge reversed.
    let canon = reference_constraint_weights(2, deg(2)).map_err(|e| e.to_string())?;
    let mut adapted = DMatrix::zeros(4, 2);
    let mut on_mesh = DMatrix::zeros(4, 2);
    for k in 0..2 {
        let blk = &canon.blocks()[k];
        adapted
            .view_mut((2 * k, 0), (2, 2))
            .copy_from(&adapt_edge_constraints(&blk.weights, true, false));
        on_mesh.view_mut((2 * k, 0), (2, 2)).copy_from(&ic.blocks[k].weights);
    }
    let d_alg = (&adapted - &expected).amax();
    let d_mesh = (&on_mesh - &expected).amax();

    let out = Command::new(env!("CARGO_BIN_EXE_hpnedelec"))
        .args(["constraints", "dump", "--degree", "2", "--mesh"])
        .arg(fixture("fig13_flipped_2d.json"))
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let cli_ok = out.status.success()
        && text.contains("  0.5 0.5\n  0 0.25\n")
        && text.contains("  0.5 -0.5\n  0 0.25\n");
    ensure(
        d_alg < 1e-13 && d_mesh < 1e-13 && cli_ok,
        format!(
            "parity rule {d_alg:.1e}, mesh blocks {d_mesh:.1e}, dump text {}",
            if cli_ok { "matches" } else { "differs" }
        ),
    )
}

fn c4_parity() -> Result<String, String> {
    let mut runner = TestRunner::new(PtConfig {
        cases: 100,
        failure_persistence: None,
        ..PtConfig::default()
    });
    let strategy = (1usize..=5, any::<bool>(), any::<bool>()).prop_flat_map(|(p, pr, cr)| {
        (
            Just(p),
            Just(pr),
            Just(cr),
            prop::collection::vec(-10.0f64..10.0, p * p),
        )
    });
    runner
        .run(&strategy, |(p, pr, cr, vals)| {
            let m = DMatrix::from_row_slice(p, p, &vals);
            let a = adapt_edge_constraints(&m, pr, cr);
            for i in 0..p {
                for j in 0..p {
                    let flip = pr != cr && (i + j) % 2 == 1;
                    let want = if flip { -m[(i, j)] } else { m[(i, j)] };
                    prop_assert_eq!(a[(i, j)], want);
                }
            }
            prop_assert_eq!(adapt_edge_constraints(&a, pr, cr), m);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("100 random blocks, p <= 5".into())
}

fn c5_trace() -> Result<String, String> {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut runs = 0;
    for dim in [2, 3] {
        let base = one_hanging_interface(dim);
        for seed in 0..50u64 {
            let mesh = permuted(&base, seed + 1);
            for p in 1..=4 {
                let (jump, hanging) = random_field_jump(mesh.clone(), p, seed);
                if hanging == 0 {
                    return Err("no hanging facet found".into());
                }
                worst = worst.max(jump);
                runs += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(
        worst < 1e-10 && secs < 120.0,
        format!("{runs} runs (2D/3D x 50 numberings x p 1..4), max jump {worst:.1e}, {secs:.1} s"),
    )
}

fn c6_continuity() -> Result<String, String> {
    let mut jumps = Vec::new();
    for p in 1..=3 {
        let out = Command::new(env!("CARGO_BIN_EXE_hpnedelec"))
            .args(["check-continuity", "--tolerance", "1e-8", "--degree", &p.to_string(), "--config"])
            .arg(fixture("minimal_cube.json"))
            .output()
            .map_err(|e| e.to_string())?;
        let line = String::from_utf8_lossy(&out.stdout);
        let v: serde_json::Value = serde_json::from_str(line.trim())
            .map_err(|e| format!("p = {p}: bad output {line:?}: {e}"))?;
        let jump = v["max_jump"].as_f64().unwrap_or(f64::INFINITY);
        if !out.status.success() || v["hanging_facets"].as_u64() == Some(0) {
            return Err(format!("p = {p}: exit {:?}, {line}", out.status.code()));
        }
        jumps.push(jump);
    }
    let worst = jumps.iter().cloned().fold(0.0, f64::max);
    ensure(
        worst < 1e-8,
        format!(
            "max jump per p = 1, 2, 3: {}",
            jumps.iter().map(|j| format!("{j:.1e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c7_independence() -> Result<String, String> {
    let mut cfg = ScenarioConfig::load(&fixture("minimal_cube.json")).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for p in 1..=3 {
        cfg.degree = p;
        cfg.permutation_seed = None;
        let a = solve_on(&cfg, cfg.mesh().unwrap()).map_err(|e| e.to_string())?;
        for seed in [11, 12] {
            cfg.permutation_seed = Some(seed);
            let b = solve_on(&cfg, cfg.mesh().unwrap()).map_err(|e| e.to_string())?;
            let d = field_difference(
                (&a.disc, &a.solution.coefficients),
                (&b.disc, &b.solution.coefficients),
                Vec3::zeros(),
                Vec3::repeat(1.0),
                7,
            );
            worst = worst.max(d);
        }
    }
    ensure(
        worst < 1e-10,
        format!("p 1..3, two numberings each, max difference of field and curl {worst:.1e}"),
    )
}

fn c8_study() -> Result<String, String> {
    let cfg = ScenarioConfig::load(&fixture("dielectric_3d.json")).map_err(|e| e.to_string())?;
    let rows = run_study(&cfg).map_err(|e| e.to_string())?;
    if rows.len() != 3 {
        return Err(format!("{} levels", rows.len()));
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, spec) in cfg.goals.iter().enumerate() {
        let e: Vec<f64> = rows.iter().map(|r| r.errors[g]).collect();
        let monotone = e.windows(2).all(|w| w[1] < w[0]);
        let reduction = e[0] / e[2];
        ok &= monotone && reduction >= 10.0;
        parts.push(format!(
            "{} {:.2e} -> {:.2e} -> {:.2e} (x{:.0})",
            spec.name, e[0], e[1], e[2], reduction
        ));
    }
    let dofs: Vec<String> = rows.iter().map(|r| r.dofs.to_string()).collect();
    ensure(ok, format!("dofs {}; {}", dofs.join("/"), parts.join("; ")))
}

fn c9_piola() -> Result<String, String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for cell in 0..20 {
        let coords: Vec<[f64; 3]> = (0..8)
            .map(|v| {
                let mut x = [(v & 1) as f64, ((v >> 1) & 1) as f64, ((v >> 2) & 1) as f64];
                for c in &mut x {
                    *c += rng.random_range(-0.2..0.2);
                }
                x
            })
            .collect();
        // Random vertex ids so edge and face orientations vary between cells.
        let mut ids: Vec<usize> = (0..8).collect();
        for i in (1..8).rev() {
            ids.swap(i, rng.random_range(0..=i));
        }
        let mut vertices = vec![[0.0; 3]; 8];
        for (v, &g) in ids.iter().enumerate() {
            vertices[g] = coords[v];
        }
        let mesh = RefinedMesh::from_roots(3, vertices, vec![ids.clone()], None).map_err(|e| e.to_string())?;
        let disc = Discretization::new(mesh, deg(3)).map_err(|e| e.to_string())?;
        let map = CellMap::new(3, &coords);
        let xh = Vec3::new(
            rng.random_range(0.2..0.8),
            rng.random_range(0.2..0.8),
            rng.random_range(0.2..0.8),
        );
        if map.at(&xh).det <= 0.0 {
            return Err(format!("cell {cell} is inverted"));
        }
        let x0 = map.point(&xh);
        let mut exact = Vec::new();
        disc.shapes(0, &xh, &mut exact);
        let h = 1e-5;
        let at = |x: Vec3| -> Vec<ShapeValue> {
            let yh = map.inverse(&x).expect("point maps back");
            let mut out = Vec::new();
            disc.shapes(0, &yh, &mut out);
            out
        };
        // d[j][s] = ∂_j u_s, by central differences.
        let d: Vec<Vec<Vec3>> = (0..3)
            .map(|j| {
                let mut e = Vec3::zeros();
                e[j] = h;
                let (p, m) = (at(x0 + e), at(x0 - e));
                p.iter().zip(&m).map(|(a, b)| (a.value - b.value) / (2.0 * h)).collect()
            })
            .collect();
        for (s, ex) in exact.iter().enumerate() {
            let fd = Vec3::new(
                d[1][s].z - d[2][s].y,
                d[2][s].x - d[0][s].z,
                d[0][s].y - d[1][s].x,
            );
            worst = worst.max((fd - ex.curl).norm() / ex.curl.norm().max(1.0));
        }
    }
    ensure(
        worst < 1e-5,
        format!("20 trilinear cells, p = 3, max curl mismatch {worst:.1e}"),
    )
}

fn c10_edge_only() -> Result<String, String> {
    let mesh = load_mesh("fig10.json");
    let disc = Discretization::new(mesh.clone(), deg(2)).map_err(|e| e.to_string())?;
    let levels: BTreeSet<u32> = mesh.active_cells().iter().map(|&c| mesh.cell(c).level).collect();
    let mut coarse_edges = BTreeSet::new();
    for (c, e) in disc.orientation.edge_only_edges() {
        let cell = mesh.cell(c);
        let parent = cell.parent.ok_or("edge-only edge on a root cell")?;
        if !edge_on_parent_edge(3, cell.child_index, e) {
            return Err(format!("cell {c} edge {e} is not half of a parent edge"));
        }
        let mut g = mesh.edge_global(parent, e);
        g.sort();
        coarse_edges.insert(g);
    }
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let m = permuted(&mesh, seed);
        for p in 1..=4 {
            worst = worst.max(random_field_jump(m.clone(), p, seed).0);
        }
    }
    let edge_count_ok = coarse_edges.len() == 1;
    ensure(
        edge_count_ok && worst < 1e-10 && levels.len() == 3,
        format!(
            "{} levels, edge-only handling on coarse edges {:?}, max jump {worst:.1e} (10 numberings x p 1..4)",
            levels.len(),
            coarse_edges
        ),
    )
}
