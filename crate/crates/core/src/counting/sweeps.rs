//! The three scan experiments: pump polarization, pump power and stage delay.

use serde::{Deserialize, Serialize};

use super::{simulate_gates, BeatOptics, DetectorConfig, PumpConfig, Routing, ScanResult, ScatterModel};
use crate::error::Result;
use crate::interference::{BeatCurve, BeatPoint};
use crate::polarization::{analyze_loop, imperfect_hwp, HwpAngle, JonesMatrix, JonesVector};
use crate::state::LoopPhase;

/// Base configuration shared by all points of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Experiment {
    pub pump: PumpConfig,
    pub det1: DetectorConfig,
    pub det2: DetectorConfig,
    pub scatter: ScatterModel,
}

impl Experiment {
    pub fn simulate(&self, routing: &Routing, n_gates: u64, seed: u64) -> Result<ScanResult> {
        simulate_gates(&self.pump, &self.det1, &self.det2, &self.scatter, routing, n_gates, seed)
    }

    /// Sets the loop state from the FPC and the angle of the half-wave plate
    /// in front of the loop, which rotates a horizontally polarized pump.
    pub fn with_hwp(self, fpc: &JonesMatrix, angle: HwpAngle, retardance_error: f64) -> Result<Self> {
        let e_in = imperfect_hwp(angle, retardance_error).apply(&JonesVector::real(1.0, 0.0));
        let report = analyze_loop(fpc, &e_in)?;
        // With no overlap the coherent part has zero weight and its phase is moot.
        let phase = LoopPhase::new(report.loop_phase.unwrap_or(std::f64::consts::FRAC_PI_2));
        Ok(Self {
            scatter: ScatterModel {
                purity_p: report.purity,
                loop_phase: phase,
                ..self.scatter
            },
            ..self
        })
    }
}

/// Seed of scan point `index`, decorrelated from neighbouring points.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    // SplitMix64 finalizer.
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HwpRouting {
    DD,
    CD,
}

impl From<HwpRouting> for Routing {
    fn from(r: HwpRouting) -> Self {
        match r {
            HwpRouting::DD => Routing::DD,
            HwpRouting::CD => Routing::CD,
        }
    }
}

/// Rotates the pump polarization ahead of the loop. `setting` is the HWP
/// angle in degrees.
pub fn hwp_sweep(
    angles: &[HwpAngle],
    base: &Experiment,
    fpc: &JonesMatrix,
    retardance_error: f64,
    routing: HwpRouting,
    n_gates: u64,
    seed: u64,
) -> Result<Vec<ScanResult>> {
    angles
        .iter()
        .enumerate()
        .map(|(i, &angle)| {
            let exp = base.with_hwp(fpc, angle, retardance_error)?;
            let r = exp.simulate(&routing.into(), n_gates, point_seed(seed, i as u64))?;
            Ok(r.finish(angle.radians().to_degrees()))
        })
        .collect()
}

/// Varies the pump power; `setting` is the power in mW.
pub fn power_sweep(powers: &[f64], base: &Experiment, routing: &Routing, n_gates: u64, seed: u64) -> Result<Vec<ScanResult>> {
    powers
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let exp = Experiment {
                pump: base.pump.with_power(p),
                ..*base
            };
            Ok(exp.simulate(routing, n_gates, point_seed(seed, i as u64))?.finish(p))
        })
        .collect()
}

/// Raw counts of a stage scan and the coincidence curve with the
/// dark-count contribution removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageScan {
    pub results: Vec<ScanResult>,
    pub curve: BeatCurve,
}

/// Moves the translation stage; `setting` is the stage position in mm.
pub fn stage_scan(positions: &[f64], base: &Experiment, optics: &BeatOptics, n_gates: u64, seed: u64) -> Result<StageScan> {
    let (d1, d2) = (base.det1.dark_prob_per_gate, base.det2.dark_prob_per_gate);
    let mut results = Vec::with_capacity(positions.len());
    let mut points = Vec::with_capacity(positions.len());
    for (i, &l) in positions.iter().enumerate() {
        let routing = Routing::StageScan {
            delta_l_mm: l,
            optics: *optics,
        };
        let r = base.simulate(&routing, n_gates, point_seed(seed, i as u64))?.finish(l);
        // Coincidences in which at least one click is a dark count.
        let s1 = r.singles_1 as f64 / r.active_gates_1.max(1) as f64;
        let s2 = r.singles_2 as f64 / r.active_gates_2.max(1) as f64;
        let n = r.active_gates_1.min(r.active_gates_2) as f64;
        let dark = n * (d1 * s2 + d2 * s1 - d1 * d2).max(0.0);
        points.push(BeatPoint {
            delta_l_mm: l,
            p2: (r.coincidences as f64 - dark).max(0.0),
        });
        results.push(r);
    }
    Ok(StageScan {
        results,
        curve: BeatCurve::new(points)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interference::{FilterShape, FilterSpectrum};
    use crate::state::FrequencyPair;

    #[test]
    fn seeds_differ_per_point() {
        let s: Vec<u64> = (0..100).map(|i| point_seed(20081, i)).collect();
        let mut u = s.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), s.len());
        assert_eq!(point_seed(1, 2), point_seed(1, 2));
    }

    #[test]
    fn zero_power_gives_no_true_counts() {
        let base = Experiment {
            det1: DetectorConfig { dark_prob_per_gate: 0.0, ..Default::default() },
            det2: DetectorConfig { dark_prob_per_gate: 0.0, ..Default::default() },
            scatter: ScatterModel { raman_coeff_co: 0.1, ..Default::default() },
            ..Default::default()
        };
        let r = power_sweep(&[0.0], &base, &Routing::CD, 1_000_000, 1).unwrap();
        assert_eq!((r[0].singles_1, r[0].coincidences), (0, 0));
        assert_eq!(r[0].setting, 0.0);
    }

    #[test]
    fn hwp_sets_purity_from_jones_model() {
        let fpc = JonesMatrix::quadrature_point();
        let base = Experiment::default();
        let e0 = base.with_hwp(&fpc, HwpAngle::from_degrees(0.0), 0.0).unwrap();
        assert!((e0.scatter.purity_p - 1.0).abs() < 1e-12);
        assert!((e0.scatter.loop_phase.radians() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let e1 = base.with_hwp(&fpc, HwpAngle::from_degrees(22.5), 0.0).unwrap();
        assert!(e1.scatter.purity_p < 1e-12);
    }

    #[test]
    fn stage_scan_shapes() {
        let optics = BeatOptics {
            freq: FrequencyPair::from_pump_and_difference(1538.2, 1.58e12).unwrap(),
            filter: FilterSpectrum::new(FilterShape::Square, std::f64::consts::TAU * 1.09e11, 0.0).unwrap(),
        };
        let base = Experiment::default();
        let s = stage_scan(&[0.0, 0.0474], &base, &optics, 4_000_000, 3).unwrap();
        assert_eq!(s.results.len(), 2);
        assert!(s.curve.points[1].p2 > 5.0 * s.curve.points[0].p2);
    }
}
