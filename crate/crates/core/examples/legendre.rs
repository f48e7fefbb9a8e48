//! Legendre and integrated Legendre polynomials plus Gauss rules.
//!
//! ```text
//! cargo run --example legendre
//! ```

use hpnedelec::poly1d::{gauss_rule, integrated_legendre, legendre};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("    x      l_1      l_2      l_3      L_2      L_3");
    for k in 0..=4 {
        let x = -1.0 + k as f64 / 2.0;
        println!(
            "{x:5.2} {:8.4} {:8.4} {:8.4} {:8.4} {:8.4}",
            legendre(1, x),
            legendre(2, x),
            legendre(3, x),
            integrated_legendre(2, x)?,
            integrated_legendre(3, x)?,
        );
    }

    // 9 points integrate degree 17 exactly, enough for l_8 * l_8.
    let rule = gauss_rule(9, [-1.0, 1.0])?;
    let mut worst = 0.0f64;
    for i in 0..=8 {
        for j in 0..=8 {
            let got = rule.integrate(|x| legendre(i, x) * legendre(j, x));
            let want = if i == j { 2.0 / (2 * i + 1) as f64 } else { 0.0 };
            worst = worst.max((got - want).abs());
        }
    }
    println!("\northogonality defect for 0 <= i, j <= 8: {worst:.2e}");

    let unit = gauss_rule(3, [0.0, 1.0])?;
    println!("3-point rule on [0, 1]:");
    for (x, w) in unit.points.iter().zip(&unit.weights) {
        println!("  x = {x:.15}  w = {w:.15}");
    }
    Ok(())
}
