//! Solve the minimal-cube scenario under two vertex numberings.
//!
//! The fields must agree pointwise no matter how vertices are numbered.
//!
//! ```text
//! cargo run --release --example minimal_cube [degree]
//! ```

use hpnedelec::geometry::Vec3;
use hpnedelec::scenario::{solve_on, ScenarioConfig};
use hpnedelec::solver_goals::point_value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/minimal_cube.json");
    let mut cfg = ScenarioConfig::load(path.as_ref())?;
    if let Some(p) = std::env::args().nth(1) {
        cfg.degree = p.parse()?;
    }

    let canonical = solve_on(&cfg, cfg.mesh()?)?;
    cfg.permutation_seed = Some(7);
    let permuted = solve_on(&cfg, cfg.mesh()?)?;

    for (name, out) in [("canonical", &canonical), ("permuted", &permuted)] {
        let s = out.summary();
        println!(
            "{name:>9}: {} DoFs, {} constrained, residual {:.1e}",
            s.dofs, s.constrained, s.solver.relative_residual
        );
        for g in &s.goals {
            println!("           {} = {:+.12} {:+.12}i", g.name, g.re, g.im);
        }
    }

    let mut worst = 0.0f64;
    for i in 0..7 {
        for j in 0..7 {
            for k in 0..7 {
                let x = Vec3::new(i as f64, j as f64, k as f64) / 6.0;
                let a = point_value(&canonical.disc, &canonical.solution.coefficients, &x)?;
                let b = point_value(&permuted.disc, &permuted.solution.coefficients, &x)?;
                for d in 0..3 {
                    worst = worst.max((a.value[d] - b.value[d]).norm());
                }
            }
        }
    }
    println!("max field difference on a 7^3 grid: {worst:.2e}");
    Ok(())
}
