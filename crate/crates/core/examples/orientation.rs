//! Edge and face orientations derived from global vertex ids.
//!
//! Uses the three-level mesh in `fixtures/fig10.json`, where one coarse
//! edge is touched by fine cells whose face neighbours are all fine. Those
//! cells still inherit the coarse edge's direction.
//!
//! ```text
//! cargo run --example orientation
//! ```

use hpnedelec::mesh::MeshFile;
use hpnedelec::orientation::{orient_mesh, EdgeSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig10.json");
    let mesh = MeshFile::load(path.as_ref())?.build()?;
    let orient = orient_mesh(&mesh);
    orient.check_consistency(&mesh)?;

    let mut counts = [0usize; 3];
    for c in mesh.active_cells() {
        for e in &orient.get(c).edges {
            counts[e.source as usize] += 1;
        }
    }
    println!(
        "edge orientations: {} own, {} from a hanging face, {} edge-only",
        counts[0], counts[1], counts[2]
    );

    for (cell, e) in orient.edge_only_edges() {
        let oe = &orient.get(cell).edges[e];
        assert_eq!(oe.source, EdgeSource::EdgeOnly);
        println!(
            "cell {cell} local edge {e}: runs {} -> {} (flipped: {})",
            oe.global[0], oe.global[1], oe.flipped
        );
    }

    // Face classes of one fine cell.
    let c = mesh.active_cells()[0];
    for (f, face) in orient.get(c).faces.iter().enumerate() {
        println!("cell {c} face {f}: tuple {:?} class {:?}", face.tuple, face.class);
    }
    Ok(())
}
