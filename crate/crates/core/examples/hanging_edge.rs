//! Hanging-edge constraints in 2D.
//!
//! The coarse edge of `fixtures/fig13_flipped_2d.json` runs against the
//! reference direction of its cell. Shown: the degree-1 and degree-2 blocks
//! on that mesh, the canonical blocks, and the parity rule mapping one onto
//! the other.
//!
//! ```text
//! cargo run --example hanging_edge
//! ```

use hpnedelec::cli::format_block;
use hpnedelec::constraints::{adapt_edge_constraints, reference_constraint_weights};
use hpnedelec::discretization::Discretization;
use hpnedelec::mesh::MeshFile;
use hpnedelec::poly1d::PolynomialDegree;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig13_flipped_2d.json");
    let file = MeshFile::load(path.as_ref())?;

    for p in [1, 2] {
        let p = PolynomialDegree::new(p)?;
        let disc = Discretization::new(file.build()?, p)?;
        let ic = &disc.constraints.interfaces[0];
        let [a, b] = [ic.interface.corners[0], ic.interface.corners[1]];
        println!("degree {}: coarse edge ({a}, {b})", p.get());
        for blk in &ic.blocks {
            print!("{}", format_block(blk));
        }

        let canon = reference_constraint_weights(2, p)?;
        println!("canonical blocks, then adapted with the coarse edge reversed:");
        for blk in canon.blocks() {
            print!("{}", format_block(&blk));
            let adapted = adapt_edge_constraints(&blk.weights, a > b, false);
            let mut shown = blk.clone();
            shown.weights = adapted;
            print!("{}", format_block(&shown));
        }
        println!();
    }
    Ok(())
}
