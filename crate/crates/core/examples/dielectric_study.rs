//! Goal-functional study for a dielectric inclusion.
//!
//! Runs the refinement study of a scenario and prints the error table as
//! CSV. Defaults to the 2D fixture, which finishes in seconds; pass
//! `fixtures/dielectric_3d.json` for the 3D study (a few minutes).
//!
//! ```text
//! cargo run --release --example dielectric_study [scenario.json]
//! ```

use hpnedelec::scenario::{run_study, ScenarioConfig};
use hpnedelec::solver_goals::study_csv;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/dielectric_2d.json").into());
    let cfg = ScenarioConfig::load(path.as_ref())?;
    let t = std::time::Instant::now();
    let rows = run_study(&cfg)?;
    let names: Vec<String> = cfg.goals.iter().map(|g| g.name.clone()).collect();
    print!("{}", study_csv(&names, &rows));
    eprintln!("study took {:.1} s", t.elapsed().as_secs_f64());
    Ok(())
}
