//! Solves for the Raman coefficients behind each preset scenario.
//!
//! The measured ratios fix the background: a coincidence to accidental ratio
//! of about 16 at 0.18 mW with a polarizer, about 13 without one, and a band
//! occupation of 0.02 photons per pulse at 0.1 mW next to 0.013 pairs.
//!
//! Run with `cargo run --example raman_calibration`.

use sagnac_pairs::counting::{
    calibrate_raman_for_ratio, raman_for_band_total, ClickProbabilities, DetectorConfig, PumpConfig, Routing,
    ScatterModel,
};

fn main() -> sagnac_pairs::Result<()> {
    let det = DetectorConfig::default();
    let pair_coeff = 0.013 / (0.1f64 * 0.1);
    println!("pair coefficient: {pair_coeff:.4} pairs/pulse/mW^2");

    let bright = PumpConfig::default().with_power(0.18);
    let selected = ScatterModel {
        pair_coeff,
        co_polarized_selection: true,
        ..Default::default()
    };
    let co = calibrate_raman_for_ratio(16.0, &bright, &det, &det, &selected, &Routing::CD)?;
    println!("co-polarized Raman for ratio 16 at 0.18 mW: {co:.6} photons/pulse/mW/band");

    // Without the polarizer the cross-polarized light adds to the same
    // co-polarized background; solve for the total and take the difference.
    let total = calibrate_raman_for_ratio(13.0, &bright, &det, &det, &selected, &Routing::CD)?;
    println!("cross-polarized Raman for ratio 13: {:.6} photons/pulse/mW/band", total - co);
    let unselected = ScatterModel {
        raman_coeff_co: co,
        raman_coeff_cross: total - co,
        co_polarized_selection: false,
        ..selected
    };
    let check = ClickProbabilities::from_config(&bright, &det, &det, &unselected, &Routing::CD)?;
    println!("  check: ratio without polarizer {:.4}", check.coincidence_to_accidental());

    let raman = raman_for_band_total(0.02, 0.013)?;
    println!("Raman at 0.1 mW from band bookkeeping: {:.6} photons/pulse/mW/band", raman / 0.1);
    Ok(())
}
