//! Hanging-face constraints under arbitrary vertex numbering.
//!
//! One cell of a 2x2x2 cube is refined. For several random renumberings of
//! the vertices a random conforming field is drawn and the largest
//! tangential jump over all interior faces is reported.
//!
//! ```text
//! cargo run --example hanging_face
//! ```

use hpnedelec::constraints::reference_constraint_weights;
use hpnedelec::continuity::max_tangential_jump;
use hpnedelec::discretization::Discretization;
use hpnedelec::mesh::RefinedMesh;
use hpnedelec::orientation::FaceClass;
use hpnedelec::poly1d::PolynomialDegree;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = PolynomialDegree::new(3)?;
    let canon = reference_constraint_weights(3, p)?;
    println!(
        "canonical weights for p = 3: {} x {} ({} nonzero blocks)",
        canon.matrix.nrows(),
        canon.matrix.ncols(),
        canon.blocks().iter().filter(|b| !b.is_zero()).count()
    );

    let mut base = RefinedMesh::cube(3, 2, 1.0)?;
    base.refine_cells(&[0])?;
    for seed in 0..6 {
        let mesh = if seed == 0 {
            base.clone()
        } else {
            base.permute_vertex_numbering(&base.random_permutation(seed))?
        };
        let disc = Discretization::new(mesh, p)?;
        let classes: std::collections::BTreeSet<String> = disc
            .mesh
            .active_cells()
            .iter()
            .flat_map(|&c| disc.orientation.get(c).faces.iter().map(|f| f.class))
            .filter(|&g| g != FaceClass::IDENTITY)
            .map(|g| format!("{g:?}"))
            .collect();
        let u = disc.random_conforming(seed);
        let report = max_tangential_jump(&disc, &u, 6);
        println!(
            "seed {seed}: {} constrained DoFs, {} non-identity face classes, max jump {:.2e}",
            disc.constraints.n_constrained(),
            classes.len(),
            report.max_jump
        );
    }
    Ok(())
}
