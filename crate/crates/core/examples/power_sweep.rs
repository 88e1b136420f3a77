//! Coincidence to accidental ratio and pair scaling against pump power.
//!
//! Uses the `fig5` preset with a polarizer that keeps only co-polarized
//! Raman photons. True coincidences grow with the square of the pump power
//! while accidentals grow faster, so the ratio falls as the power rises.
//!
//! At the preset acquisition the d/d port pair shows a small excess at the
//! highest powers. It comes from multi-pair emission and scales as the
//! fourth power of the pump; at one second of acquisition it stays inside
//! the counting noise.
//!
//! Run with `cargo run --release --example power_sweep`.

use sagnac_pairs::counting::{power_sweep, Routing};
use sagnac_pairs::fitting::loglog_slope;
use sagnac_pairs::scenario::ScenarioFile;

fn main() -> sagnac_pairs::Result<()> {
    let sc = ScenarioFile::preset("fig5")?;
    let powers = sc.powers()?;
    let base = sc.experiment()?;
    let cd = power_sweep(&powers, &base, &Routing::CD, sc.scan.n_gates, sc.run.seed)?;
    let dd = power_sweep(&powers, &base, &Routing::DD, sc.scan.n_gates, sc.run.seed + 1)?;

    println!("{:>8} {:>9} {:>10} {:>8} {:>9} {:>10}", "mW", "cd true", "+-", "cd C/A", "dd true", "+-");
    for (c, d) in cd.iter().zip(&dd) {
        println!(
            "{:>8.4} {:>9.1} {:>10.1} {:>8.2} {:>9.1} {:>10.1}",
            c.setting,
            c.true_coincidences(),
            c.true_coincidences_std(),
            c.coincidence_to_accidental(),
            d.true_coincidences(),
            d.true_coincidences_std()
        );
    }
    let y: Vec<f64> = cd.iter().map(|r| r.true_coincidences()).collect();
    let sy: Vec<f64> = cd.iter().map(|r| r.true_coincidences_std()).collect();
    let (slope, err) = loglog_slope(&powers, &y, &sy)?;
    println!("\nlog-log slope of c/d true coincidences: {slope:.3} +- {err:.3}");
    Ok(())
}
