//! Fits a stage-scan CSV written by `sagnac scan --kind stage`.
//!
//! Without an argument a short scan is simulated and saved to a temporary
//! file first, so the example is self-contained.
//!
//! Run with `cargo run --release --example fit_from_csv -- [scan.csv]`.

use std::path::PathBuf;

use sagnac_pairs::counting::stage_scan;
use sagnac_pairs::fitting::{extract_period, fit_beat};
use sagnac_pairs::report::{coincidence_curve, read_scan_csv, save_scan_csv};
use sagnac_pairs::scenario::ScenarioFile;
use sagnac_pairs::state::FrequencyPair;

fn main() -> sagnac_pairs::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let mut sc = ScenarioFile::preset("fig6")?;
            sc.scan.n_gates = 20_000_000;
            let scan = stage_scan(
                &sc.stage_positions()?,
                &sc.experiment()?,
                &sc.beat_optics()?,
                sc.scan.n_gates,
                sc.run.seed,
            )?;
            let path = std::env::temp_dir().join("sagnac_stage_scan.csv");
            save_scan_csv(&path, &scan.results)?;
            println!("simulated scan saved to {}", path.display());
            path
        }
    };

    let results = read_scan_csv(&path)?;
    let curve = coincidence_curve(&results)?;
    let freq = FrequencyPair::from_pump_and_difference(1538.2, 1.58e12)?;
    println!("{} points, dominant period {:.5} mm", curve.len(), extract_period(&curve)?);

    let fit = fit_beat(&curve, &freq, None)?;
    println!("visibility {:.4} +- {:.4}", fit.params.visibility, fit.visibility_std_err);
    println!("fidelity   {:.4}", fit.fidelity());
    println!("converged  {}", fit.converged);
    Ok(())
}
