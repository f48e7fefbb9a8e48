//! Build a box mesh, refine it locally and list the hanging interfaces.
//!
//! Refining one cell of a 3x3x3 brick makes its face neighbours see a
//! hanging face each; refining a child again triggers 2:1 balancing.
//!
//! ```text
//! cargo run --example refine_mesh
//! ```

use hpnedelec::mesh::RefinedMesh;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut mesh = RefinedMesh::brick(3, [3, 3, 3], [0.0; 3], [3.0; 3])?;
    let centre = 13;
    mesh.refine_cells(&[centre])?;
    println!("after one refinement: {} active cells", mesh.n_active());

    // The corner child of the centre cell touches coarse neighbours on
    // three sides; refining it forces neighbours to split as well.
    let child = mesh.cell(centre).children[0];
    let added = mesh.refine_cells(&[child])?;
    println!(
        "refining child {child}: {added} cells refined in total, balanced = {}",
        mesh.is_balanced()
    );

    let mut per_level = std::collections::BTreeMap::new();
    for c in mesh.active_cells() {
        *per_level.entry(mesh.cell(c).level).or_insert(0usize) += 1;
    }
    for (level, n) in &per_level {
        println!("  level {level}: {n} active cells");
    }

    let interfaces = mesh.interface_descriptors()?;
    println!("{} hanging faces", interfaces.len());
    for d in interfaces.iter().take(4) {
        println!(
            "  coarse cell {} facet {} corners {:?}, {} fine cells",
            d.coarse_cell,
            d.coarse_facet,
            d.corners,
            d.fine_cells.len()
        );
    }
    Ok(())
}
