//! Output of the loop as the pump phase difference moves from 0 to pi/2.
//!
//! At zero phase both photons of a pair leave through the same coupler port;
//! at a quarter turn they always split and the pair is frequency entangled.
//! The coherent weight `p` then mixes the pure output with the cross-mode
//! background, which is what an imperfect polarization match does.
//!
//! Run with `cargo run --example state_evolution`.

use std::f64::consts::FRAC_PI_2;

use sagnac_pairs::c64;
use sagnac_pairs::state::{fidelity, mix_with_background, sagnac_output, LoopPhase, PairKet, SfwmGain, TwoPhotonState};

fn main() -> sagnac_pairs::Result<()> {
    let eta = SfwmGain::from_pump_power(0.8, 0.1)?;
    println!("gain {:.3}, pair probability {:.4} per pulse", eta.eta().re, eta.pair_probability());

    println!("\n{:>8} {:>10} {:>10} {:>10} {:>10} {:>9}", "phi/pi", "|cc|^2", "|dd|^2", "|s_c i_d|^2", "|i_c s_d|^2", "F(psi2)");
    let target = TwoPhotonState::psi2();
    for k in 0..=8 {
        let phi = FRAC_PI_2 * k as f64 / 8.0;
        let out = sagnac_output(eta, LoopPhase::new(phi))?;
        let p = |ket| out.amplitude(ket).norm_sqr();
        let overlap = target.inner(&out).norm_sqr();
        println!(
            "{:>8.4} {:>10.4} {:>10.4} {:>11.4} {:>11.4} {:>9.4}",
            phi / std::f64::consts::PI,
            p(PairKet::BothC),
            p(PairKet::BothD),
            p(PairKet::SignalC),
            p(PairKet::IdlerC),
            overlap
        );
    }

    println!("\nmixture with the cross-mode background at phi = pi/2:");
    for p in [1.0, 0.95, 0.8, 0.5, 0.0] {
        let rho = mix_with_background(&target, p)?;
        println!("  p = {p:<4}  fidelity {:.4}", fidelity(&rho, &target));
    }

    // The global phase does not change the physical state.
    let turned = TwoPhotonState::from_pair_amplitudes(target.pair_amplitudes().map(|a| a * c64::new(0.0, 1.0)));
    println!("\npsi2 and i*psi2 are the same ray: {}", turned.same_ray(&target, 1e-12));
    Ok(())
}
