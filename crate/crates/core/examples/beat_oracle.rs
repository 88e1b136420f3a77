//! Brute-force coincidence probabilities next to the closed-form beat laws.
//!
//! The oracle expands the detector fields through the delay line and the
//! second coupler and projects onto the pair state, without using any of the
//! closed forms. The entangled state beats at the difference frequency; the
//! state with both photons in the same port beats at the sum frequency, far
//! too fast for any stage to resolve.
//!
//! Run with `cargo run --example beat_oracle`.

use sagnac_pairs::interference::{mixed_beat_p2, oracle_p2, oracle_p2_pure, spatial_beat_p2, Delay};
use sagnac_pairs::state::{mix_with_background, FrequencyPair, TwoPhotonState};

fn main() -> sagnac_pairs::Result<()> {
    let f = FrequencyPair::from_pump_and_difference(1538.2, 1.58e12)?;
    println!("beat period {:.5} mm of stage travel", f.beat_period_mm());

    let psi2 = TwoPhotonState::psi2();
    let rho = mix_with_background(&psi2, 0.95)?;
    println!("\n{:>9} {:>10} {:>10} {:>10} {:>10}", "stage mm", "oracle", "pure law", "oracle", "p=0.95 law");
    for k in 0..=8 {
        let l = f.beat_period_mm() * k as f64 / 8.0;
        let d = Delay::from_stage_mm(l);
        println!(
            "{l:>9.5} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            oracle_p2_pure(d, &psi2, &f),
            spatial_beat_p2(d, &f),
            oracle_p2(d, &rho, &f),
            mixed_beat_p2(d, &f, 0.95)?
        );
    }

    let psi1 = TwoPhotonState::psi1();
    let sum = f.omega_s + f.omega_i;
    println!("\nsame-port pairs over 2 fs of delay (sum-frequency beat):");
    for k in 0..=4 {
        let d = Delay::from_seconds(0.5e-15 * k as f64);
        println!("  {:>5.1} fs  oracle {:.6}  1 - cos {:.6}", 1e15 * d.delta_tau, oracle_p2_pure(d, &psi1, &f), 1.0 - (sum * d.delta_tau).cos());
    }
    Ok(())
}
