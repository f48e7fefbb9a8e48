//! Solve a scenario and write the field as a legacy VTK file.
//!
//! ```text
//! cargo run --release --example vtk_export [scenario.json] [out.vtk]
//! ```

use hpnedelec::scenario::{solve, ScenarioConfig};
use hpnedelec::vtk::write_vtk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let cfg_path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/minimal_cube.json").into());
    let out_path = args
        .next()
        .unwrap_or_else(|| std::env::temp_dir().join("hpnedelec.vtk").display().to_string());

    let cfg = ScenarioConfig::load(cfg_path.as_ref())?;
    let out = solve(&cfg)?;
    let text = write_vtk(&out.disc, &out.solution.coefficients, out.disc.element.degree() + 1);
    std::fs::write(&out_path, &text)?;
    println!(
        "wrote {out_path}: {} active cells, {} bytes",
        out.disc.mesh.n_active(),
        text.len()
    );
    Ok(())
}
