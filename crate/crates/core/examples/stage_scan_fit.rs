//! Spatial beating of the entangled pairs and its fit.
//!
//! Uses the `fig6` preset: a delay line on one output port is moved over
//! three beat periods and coincidences are recorded at each position. The
//! beat law with a filter envelope is then fitted for visibility, envelope
//! width and zero-delay position.
//!
//! Run with `cargo run --release --example stage_scan_fit`.

use sagnac_pairs::counting::stage_scan;
use sagnac_pairs::fitting::fit_beat;
use sagnac_pairs::scenario::ScenarioFile;

fn main() -> sagnac_pairs::Result<()> {
    let mut sc = ScenarioFile::preset("fig6")?;
    // A tenth of the preset acquisition keeps the example quick.
    sc.scan.n_gates /= 10;
    let positions = sc.stage_positions()?;
    let optics = sc.beat_optics()?;
    let scan = stage_scan(&positions, &sc.experiment()?, &optics, sc.scan.n_gates, sc.run.seed)?;

    println!("{:>10} {:>8} {:>10} {:>10}", "stage mm", "coinc", "dark-free", "singles 1");
    for (r, p) in scan.results.iter().zip(&scan.curve.points) {
        println!("{:>10.5} {:>8} {:>10.1} {:>10}", r.setting, r.coincidences, p.p2, r.singles_1);
    }

    let fit = fit_beat(&scan.curve, &optics.freq, None)?;
    let p = fit.params;
    println!("\nvisibility {:.4} +- {:.4}", p.visibility, fit.visibility_std_err);
    println!("fidelity   {:.4}", fit.fidelity());
    println!("sigma      2pi x {:.3e} Hz", p.sigma / std::f64::consts::TAU);
    println!("zero delay {:.5} mm", p.origin_l0);
    println!("period     {:.5} mm from the data, {:.5} mm expected", fit.fitted_period, fit.model_period);
    println!("reduced chi2 {:.2} after {} iterations", fit.reduced_chi2, fit.iterations);
    Ok(())
}
