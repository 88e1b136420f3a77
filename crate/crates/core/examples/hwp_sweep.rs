//! Coincidences while the pump polarization rotates, for both port pairs.
//!
//! Uses the `fig4` preset. Detectors on ports d/d see true coincidences only
//! where the pumps are mismatched; detectors on c/d see the inverse pattern,
//! with the matched angles about twice as bright as the fully mismatched ones.
//!
//! Run with `cargo run --release --example hwp_sweep`.

use sagnac_pairs::counting::{hwp_sweep, HwpRouting};
use sagnac_pairs::scenario::ScenarioFile;

fn main() -> sagnac_pairs::Result<()> {
    let sc = ScenarioFile::preset("fig4")?;
    let angles = sc.hwp_angles()?;
    let base = sc.experiment()?;
    let fpc = sc.fpc_matrix()?;
    let err = sc.fpc.hwp_retardance_error_rad;
    let n = sc.scan.n_gates;

    let dd = hwp_sweep(&angles, &base, &fpc, err, HwpRouting::DD, n, sc.run.seed)?;
    let cd = hwp_sweep(&angles, &base, &fpc, err, HwpRouting::CD, n, sc.run.seed + 1)?;

    println!("{n} gates per angle at {} mW", sc.pump.power_mw);
    println!("{:>7} {:>8} {:>9} {:>9} {:>8} {:>9} {:>9}", "hwp", "dd coinc", "dd acc", "dd true", "cd coinc", "cd acc", "cd true");
    for (a, b) in dd.iter().zip(&cd) {
        println!(
            "{:>7.2} {:>8} {:>9.1} {:>9.1} {:>8} {:>9.1} {:>9.1}",
            a.setting,
            a.coincidences,
            a.accidentals_est,
            a.true_coincidences(),
            b.coincidences,
            b.accidentals_est,
            b.true_coincidences()
        );
    }
    let family = |offset: f64| {
        let v: Vec<f64> = cd
            .iter()
            .filter(|r| ((r.setting - offset).rem_euclid(45.0)).min(45.0 - (r.setting - offset).rem_euclid(45.0)) < 1e-9)
            .map(|r| r.true_coincidences())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    println!("\nc/d matched to mismatched ratio: {:.3}", family(0.0) / family(22.5));
    Ok(())
}
