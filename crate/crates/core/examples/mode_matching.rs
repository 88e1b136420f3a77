//! Polarization matching inside the loop as the input half-wave plate turns.
//!
//! With the polarization controller at its quadrature point, a horizontally
//! polarized pump matches itself after one round trip. Turning the plate
//! rotates the pump, the two counter-propagating replicas drift apart in
//! polarization, and their overlap `p` follows `cos^2(4 theta)`. The power
//! transmitted by the loop does not change.
//!
//! Run with `cargo run --example mode_matching`.

use sagnac_pairs::polarization::{
    analyze_loop, check_match_conditions, hwp_matrix, matched_input, orthogonal_input, HwpAngle, JonesMatrix,
    JonesVector,
};

fn show(m: &JonesMatrix) -> String {
    let c = |z: sagnac_pairs::c64| format!("{:+.4}{:+.4}i", z.re, z.im);
    format!("[[{}, {}], [{}, {}]]", c(m.jxx), c(m.jxy), c(m.jyx), c(m.jyy))
}

fn main() -> sagnac_pairs::Result<()> {
    let fpc = JonesMatrix::quadrature_point();
    let stack = JonesMatrix::retarder_stack(45f64.to_radians(), 22.5f64.to_radians(), 135f64.to_radians());
    println!("quadrature controller {}", show(&fpc));
    println!("quarter/half/quarter stack at 45/22.5/135 deg {}", show(&stack));

    println!("\n{:>7} {:>14} {:>8} {:>9} {:>12}", "hwp deg", "condition", "p", "cos^2 4t", "transmission");
    for k in 0..=8 {
        let deg = 11.25 * k as f64;
        let angle = HwpAngle::from_degrees(deg);
        let e_in = hwp_matrix(angle).apply(&JonesVector::real(1.0, 0.0));
        let r = analyze_loop(&fpc, &e_in)?;
        println!(
            "{deg:>7.2} {:>14} {:>8.4} {:>9.4} {:>12.6}",
            format!("{:?}", r.condition),
            r.purity,
            (4.0 * angle.radians()).cos().powi(2),
            r.transmission
        );
    }

    // For a generic controller, solve for the input that matches the pumps.
    let generic = JonesMatrix::retarder_stack(0.3, 1.1, -0.4);
    if let Some(e) = matched_input(&generic) {
        let orth = orthogonal_input(&e)?;
        println!("\ngeneric controller: matched input ({:.4}, {:.4})", e.ex, e.ey);
        println!("  classification {:?}", check_match_conditions(&generic, &e)?);
        println!("  orthogonal input classification {:?}", check_match_conditions(&generic, &orth)?);
        println!("  purity for the matched input {:.6}", analyze_loop(&generic, &e)?.purity);
    }
    Ok(())
}
