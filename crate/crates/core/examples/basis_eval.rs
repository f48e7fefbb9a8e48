//! Evaluate every shape function of a degree-2 hexahedral element.
//!
//! ```text
//! cargo run --example basis_eval
//! ```

use hpnedelec::geometry::{CellMap, Vec3};
use hpnedelec::nedelec_basis::NedelecElement;
use hpnedelec::orientation::CellOrientation;
use hpnedelec::poly1d::PolynomialDegree;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let el = NedelecElement::new(3, PolynomialDegree::new(2)?)?;
    println!(
        "{} shape functions: {} per edge, {} per face, {} interior",
        el.n_dofs(),
        el.dofs_per_edge(),
        el.dofs_per_face(),
        el.dofs_per_cell()
    );

    // A stretched, sheared cell; shape values follow the covariant Piola map.
    let nodes = [
        [0.0, 0.0, 0.0],
        [2.0, 0.0, 0.0],
        [0.3, 1.0, 0.0],
        [2.3, 1.0, 0.0],
        [0.0, 0.0, 0.5],
        [2.0, 0.0, 0.5],
        [0.3, 1.0, 0.5],
        [2.3, 1.0, 0.5],
    ];
    let map = CellMap::new(3, &nodes);
    let xh = Vec3::new(0.25, 0.5, 0.75);
    let mp = map.at(&xh);
    let mut shapes = Vec::new();
    el.eval_physical(&CellOrientation::reference(3), &xh, &mp, &mut shapes);

    println!("{:<14} {:>30} {:>30}", "name", "value", "curl");
    for (id, s) in el.layout().iter().zip(&shapes).step_by(6) {
        println!(
            "{:<14} {:>9.4} {:>9.4} {:>9.4}   {:>9.4} {:>9.4} {:>9.4}",
            id.to_string(),
            s.value.x,
            s.value.y,
            s.value.z,
            s.curl.x,
            s.curl.y,
            s.curl.z
        );
    }
    let gradients = el.layout().iter().filter(|id| id.kind.is_gradient()).count();
    println!("{gradients} of them are gradients (curl identically zero)");
    Ok(())
}
