//! Command-line front end: `state`, `jones`, `scan` and `fit`.
//!
//! Exit codes: 0 on success, 1 on any error, 2 on usage errors (from the
//! argument parser) and 3 when a fit runs out of iterations.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::counting::{hwp_sweep, power_sweep, stage_scan, ClickProbabilities, Experiment, HwpRouting, Routing, ScanResult};
use crate::error::{Error, Result};
use crate::fitting::{fit_beat, FitReport};
use crate::interference::{multimode_p2, Delay};
use crate::polarization::analyze_loop;
use crate::report::{
    coincidence_curve, read_scan_csv, save_json, save_plot_table, save_scan_csv, scan_rows, sibling, Overlay,
    OverlayPoint, SCAN_ROW_HEADER,
};
use crate::scenario::{ScanKind, ScenarioFile, SCENARIO_DIR_ENV};
use crate::state::{fidelity, mix_with_background, sagnac_output, FrequencyPair, LoopPhase, PairKet, SfwmGain, TwoPhotonState};

pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "sagnac", version, about = "Frequency-entangled pairs from a Sagnac fiber loop")]
pub struct Cli {
    /// Directory searched for scenario names that are not paths.
    #[arg(long, global = true, env = SCENARIO_DIR_ENV, value_name = "DIR")]
    pub scenario_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the post-selected loop output state and its fidelity.
    State {
        /// Loop phase difference between the pump replicas, rad.
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        /// Coherent weight of the mixture with the cross-mode background, 0..=1.
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Classify the polarization matching of a scenario's loop.
    Jones {
        /// Scenario file, name in the scenario directory, or preset (fig4, fig5, fig6).
        #[arg(long)]
        scenario: String,
    },
    /// Run a Monte-Carlo scan and write CSV, overlay JSON and plot data.
    Scan {
        #[arg(long)]
        scenario: String,
        /// Scan type; defaults to `scan.kind` in the scenario.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Output CSV path. HWP scans write `<stem>_dd.csv` and `<stem>_cd.csv`.
        #[arg(long)]
        out: PathBuf,
        /// Gates per scan point; overrides `scan.n_gates`.
        #[arg(long)]
        n_gates: Option<u64>,
        /// Overrides `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a stage-scan CSV to the broadband beat law.
    Fit {
        /// CSV written by `scan --kind stage` (setting in mm).
        #[arg(long)]
        csv: PathBuf,
        /// Idler minus signal frequency, Hz.
        #[arg(long, default_value_t = 1.58e12)]
        freq_diff_hz: f64,
        /// Pump wavelength, nm.
        #[arg(long, default_value_t = 1538.2)]
        pump_nm: f64,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Hwp,
    Power,
    Stage,
}

impl From<KindArg> for ScanKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Hwp => ScanKind::Hwp,
            KindArg::Power => ScanKind::Power,
            KindArg::Stage => ScanKind::Stage,
        }
    }
}

/// Parses the process arguments and runs the command.
pub fn main_entry() -> std::process::ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(code) => std::process::ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(EXIT_ERROR)
        }
    }
}

/// Runs one command, writing human-readable output to `out`. Returns the
/// exit code for completed commands.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::State { phi, p } => cmd_state(*phi, *p, out).map(|_| 0),
        Command::Jones { scenario } => cmd_jones(&load(cli, scenario)?, out).map(|_| 0),
        Command::Scan {
            scenario,
            kind,
            out: path,
            n_gates,
            seed,
        } => {
            let mut s = load(cli, scenario)?;
            if let Some(n) = n_gates {
                s.scan.n_gates = *n;
            }
            if let Some(seed) = seed {
                s.run.seed = *seed;
            }
            s.validate()?;
            let kind = kind
                .map(ScanKind::from)
                .or(s.scan.kind)
                .ok_or_else(|| Error::Config("no scan kind given on the command line or in the scenario".into()))?;
            cmd_scan(&s, kind, path, out).map(|_| 0)
        }
        Command::Fit {
            csv,
            freq_diff_hz,
            pump_nm,
            out: json_out,
        } => {
            let freq = FrequencyPair::from_pump_and_difference(*pump_nm, *freq_diff_hz)?;
            let report = cmd_fit(csv, &freq, json_out.as_deref(), out)?;
            Ok(if report.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
    }
}

fn load(cli: &Cli, name: &str) -> Result<ScenarioFile> {
    if let Some(dir) = &cli.scenario_dir {
        for candidate in [dir.join(name), dir.join(format!("{name}.toml"))] {
            if candidate.is_file() {
                return ScenarioFile::load(&candidate);
            }
        }
    }
    ScenarioFile::resolve(name)
}

pub fn cmd_state(phi: f64, p: f64, out: &mut dyn Write) -> Result<()> {
    if !phi.is_finite() {
        return Err(Error::Config(format!("phi must be finite, got {phi}")));
    }
    // Any nonzero gain gives the same post-selected state.
    let gain = SfwmGain::new(crate::c64::new(0.1, 0.0))?;
    let state = sagnac_output(gain, LoopPhase::new(phi))?;
    let rho = mix_with_background(&TwoPhotonState::psi2(), p)?;
    writeln!(out, "phi = {phi} rad")?;
    for (ket, label) in PairKet::ALL.iter().zip(["amp_cc", "amp_dd", "amp_sc_id", "amp_ic_sd"]) {
        let a = state.amplitude(*ket);
        writeln!(out, "{label:<10} = {:+.4} {:+.4}i   |a| = {:.4}", a.re, a.im, a.norm())?;
    }
    writeln!(out, "p = {p}")?;
    writeln!(out, "fidelity = {:.6}", fidelity(&rho, &TwoPhotonState::psi2()))?;
    Ok(())
}

pub fn cmd_jones(s: &ScenarioFile, out: &mut dyn Write) -> Result<()> {
    let jc = s.fpc_matrix()?;
    let e_in = s.input_polarization();
    let r = analyze_loop(&jc, &e_in)?;
    writeln!(out, "fpc = [[{}, {}], [{}, {}]]", jc.jxx, jc.jxy, jc.jyx, jc.jyy)?;
    writeln!(out, "input = ({}, {})", e_in.ex, e_in.ey)?;
    writeln!(out, "condition = {:?}", r.condition)?;
    writeln!(out, "transmission = {:.6}", r.transmission)?;
    writeln!(out, "p = {:.6}", r.purity)?;
    match r.loop_phase {
        Some(phi) => writeln!(out, "loop_phase = {phi:.6} rad")?,
        None => writeln!(out, "loop_phase = undefined (no overlap)")?,
    }
    if r.non_unitary {
        writeln!(out, "warning: FPC matrix is not unitary")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HwpOverlay {
    dd: Overlay,
    cd: Overlay,
}

fn overlay_point(exp: &Experiment, routing: &Routing, setting: f64, relative: f64, n_gates: u64) -> Result<OverlayPoint> {
    let p = ClickProbabilities::from_config(&exp.pump, &exp.det1, &exp.det2, &exp.scatter, routing)?;
    let n = n_gates as f64;
    Ok(OverlayPoint {
        setting,
        relative,
        expected_coincidences: n * p.coincidence,
        expected_accidentals: n * p.first * p.second,
    })
}

pub fn cmd_scan(s: &ScenarioFile, kind: ScanKind, path: &Path, out: &mut dyn Write) -> Result<()> {
    let n = s.scan.n_gates;
    let seed = s.run.seed;
    match kind {
        ScanKind::Hwp => {
            let base = s.experiment()?;
            let fpc = s.fpc_matrix()?;
            let angles = s.hwp_angles()?;
            let err = s.fpc.hwp_retardance_error_rad;
            let dd = hwp_sweep(&angles, &base, &fpc, err, HwpRouting::DD, n, seed)?;
            // The second routing uses an independent seed family.
            let cd = hwp_sweep(&angles, &base, &fpc, err, HwpRouting::CD, n, seed ^ 0xC0DE)?;
            let dd_path = sibling(path, "_dd.csv");
            let cd_path = sibling(path, "_cd.csv");
            save_scan_csv(&dd_path, &dd)?;
            save_scan_csv(&cd_path, &cd)?;
            let mut overlays = Vec::new();
            for routing in [Routing::DD, Routing::CD] {
                let points = angles
                    .iter()
                    .map(|&a| {
                        let e = base.with_hwp(&fpc, a, err)?;
                        let q = crate::counting::joint_routing_probability(&e.scatter.density()?, &routing);
                        overlay_point(&e, &routing, a.radians().to_degrees(), q, n)
                    })
                    .collect::<Result<Vec<_>>>()?;
                overlays.push(Overlay {
                    setting_label: "hwp_deg".into(),
                    points,
                });
            }
            let cd_overlay = overlays.pop().expect("two overlays");
            let dd_overlay = overlays.pop().expect("two overlays");
            save_json(&sibling(path, "_overlay.json"), &HwpOverlay { dd: dd_overlay, cd: cd_overlay })?;
            let rows: Vec<Vec<f64>> = dd
                .iter()
                .zip(&cd)
                .map(|(a, b)| {
                    vec![
                        a.setting,
                        a.true_coincidences(),
                        a.true_coincidences_std(),
                        a.accidentals_est,
                        b.true_coincidences(),
                        b.true_coincidences_std(),
                        b.accidentals_est,
                    ]
                })
                .collect();
            save_plot_table(
                &path.with_extension("dat"),
                &["hwp_deg", "dd_true", "dd_std", "dd_accidentals", "cd_true", "cd_std", "cd_accidentals"],
                &rows,
            )?;
            writeln!(out, "wrote {} and {} ({} angles)", dd_path.display(), cd_path.display(), dd.len())?;
        }
        ScanKind::Power => {
            let base = s.experiment()?;
            let routing = s.power_routing();
            let powers = s.powers()?;
            let results = power_sweep(&powers, &base, &routing, n, seed)?;
            finish_simple_scan(path, &results, out)?;
            let points = powers
                .iter()
                .map(|&p| {
                    let e = Experiment {
                        pump: base.pump.with_power(p),
                        ..base
                    };
                    overlay_point(&e, &routing, p, e.scatter.pair_mean(p), n)
                })
                .collect::<Result<Vec<_>>>()?;
            save_json(
                &sibling(path, "_overlay.json"),
                &Overlay {
                    setting_label: "power_mw".into(),
                    points,
                },
            )?;
        }
        ScanKind::Stage => {
            let base = s.experiment()?;
            let optics = s.beat_optics()?;
            let positions = s.stage_positions()?;
            let scan = stage_scan(&positions, &base, &optics, n, seed)?;
            finish_simple_scan(path, &scan.results, out)?;
            let v = base.scatter.purity_p;
            let points = positions
                .iter()
                .map(|&l| {
                    let routing = Routing::StageScan {
                        delta_l_mm: l,
                        optics,
                    };
                    let rel = multimode_p2(Delay::from_stage_mm(l), &optics.freq, v, &optics.filter)?;
                    overlay_point(&base, &routing, l, rel, n)
                })
                .collect::<Result<Vec<_>>>()?;
            save_json(
                &sibling(path, "_overlay.json"),
                &Overlay {
                    setting_label: "stage_mm".into(),
                    points,
                },
            )?;
            let rows: Vec<Vec<f64>> = scan
                .results
                .iter()
                .zip(&scan.curve.points)
                .map(|(r, c)| vec![r.setting, r.coincidences as f64, c.p2, r.singles_1 as f64, r.singles_2 as f64])
                .collect();
            save_plot_table(
                &sibling(path, "_curve.dat"),
                &["stage_mm", "coincidences", "dark_subtracted", "singles_1", "singles_2"],
                &rows,
            )?;
        }
    }
    Ok(())
}

fn finish_simple_scan(path: &Path, results: &[ScanResult], out: &mut dyn Write) -> Result<()> {
    save_scan_csv(path, results)?;
    save_plot_table(&path.with_extension("dat"), &SCAN_ROW_HEADER, &scan_rows(results))?;
    writeln!(out, "wrote {} ({} points)", path.display(), results.len())?;
    Ok(())
}

pub fn cmd_fit(csv: &Path, freq: &FrequencyPair, json_out: Option<&Path>, out: &mut dyn Write) -> Result<FitReport> {
    let results = read_scan_csv(csv)?;
    let curve = coincidence_curve(&results)?;
    let report = fit_beat(&curve, freq, None)?;
    let p = &report.params;
    let summary = format!(
        "V = {:.4} +/- {:.4}\nF = {:.4}\nperiod = {:.5} mm (model {:.5} mm)\nsigma = {:.4e} rad/s = 2pi x {:.4e} Hz\nl0 = {:.5} mm\nconverged = {}\n",
        p.visibility,
        report.visibility_std_err,
        report.fidelity(),
        report.fitted_period,
        report.model_period,
        p.sigma,
        p.sigma / std::f64::consts::TAU,
        p.origin_l0,
        report.converged
    );
    let no_beat = p.visibility < 2.0 * report.visibility_std_err || p.visibility < 1e-6;
    match json_out {
        Some(path) => {
            save_json(path, &report)?;
            out.write_all(summary.as_bytes())?;
            if no_beat {
                writeln!(out, "no beat detected: visibility is consistent with zero")?;
            }
        }
        None => {
            eprint!("{summary}");
            if no_beat {
                eprintln!("no beat detected: visibility is consistent with zero");
            }
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
    }
    Ok(report)
}
