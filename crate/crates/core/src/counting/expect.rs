//! Per-gate event probabilities and closed-form expectations without dead time.
//!
//! Thermal pair numbers have generating function `E[x^n] = 1/(1 + mu (1 - x))`,
//! so the probability that no pair photon reaches a set of detectors is
//! `1/(1 + mu r)` with `r` the per-pair probability of reaching any of them.

use serde::{Deserialize, Serialize};

use super::{joint_routing_probability, DetectorConfig, PumpConfig, Routing, ScatterModel};
use crate::error::{Error, Result};

/// Probabilities of the independent per-gate event sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GateModel {
    /// Mean number of pairs per gate that give at least one detection.
    pub relevant_pair_mean: f64,
    /// For a relevant pair: probability that both detectors see a photon.
    pub both: f64,
    /// For a relevant pair: probability that only detector 1 sees a photon.
    pub first_only: f64,
    /// Click probability from Raman photons, per detector.
    pub raman_click: [f64; 2],
    pub dark: [f64; 2],
}

impl GateModel {
    pub fn new(
        pump: &PumpConfig,
        det1: &DetectorConfig,
        det2: &DetectorConfig,
        scat: &ScatterModel,
        routing: &Routing,
    ) -> Result<Self> {
        pump.validate()?;
        det1.validate(pump)?;
        det2.validate(pump)?;
        scat.validate()?;
        let rho = scat.density()?;
        let q = joint_routing_probability(&rho, routing).clamp(0.0, 0.5);
        let (e1, e2) = (det1.efficiency, det2.efficiency);
        let both = q * e1 * e2;
        let first = 0.5 * e1 - both;
        let second = 0.5 * e2 - both;
        let relevant = both + first + second;
        let mu = scat.pair_mean(pump.avg_power);
        // Raman photons split evenly between the two output ports.
        let raman_per_port = 0.5 * scat.raman_per_band(pump.avg_power);
        let raman_click = [
            -(-e1 * raman_per_port).exp_m1(),
            -(-e2 * raman_per_port).exp_m1(),
        ];
        let (both, first_only) = if relevant > 0.0 {
            (both / relevant, first / relevant)
        } else {
            (0.0, 0.0)
        };
        Ok(Self {
            relevant_pair_mean: mu * relevant,
            both,
            first_only,
            raman_click,
            dark: [det1.dark_prob_per_gate, det2.dark_prob_per_gate],
        })
    }

    /// Probability that each source contributes nothing, in sampling order:
    /// pairs, Raman 1, Raman 2, dark 1, dark 2.
    pub fn quiet_probabilities(&self) -> [f64; 5] {
        [
            1.0 / (1.0 + self.relevant_pair_mean),
            1.0 - self.raman_click[0],
            1.0 - self.raman_click[1],
            1.0 - self.dark[0],
            1.0 - self.dark[1],
        ]
    }

    /// Probability that at least one source contributes in a gate.
    pub fn event_probability(&self) -> f64 {
        let log_quiet = -self.relevant_pair_mean.ln_1p()
            + (-self.raman_click[0]).ln_1p()
            + (-self.raman_click[1]).ln_1p()
            + (-self.dark[0]).ln_1p()
            + (-self.dark[1]).ln_1p();
        -log_quiet.exp_m1()
    }

    /// Click probabilities of an always-armed detector pair.
    pub fn clicks(&self) -> ClickProbabilities {
        let m = self.relevant_pair_mean;
        let reach1 = self.both + self.first_only;
        let reach2 = 1.0 - self.first_only;
        let quiet1 = (1.0 - self.raman_click[0]) * (1.0 - self.dark[0]) / (1.0 + m * reach1);
        let quiet2 = (1.0 - self.raman_click[1]) * (1.0 - self.dark[1]) / (1.0 + m * reach2);
        let quiet_both = self.quiet_probabilities().iter().product::<f64>();
        let p1 = 1.0 - quiet1;
        let p2 = 1.0 - quiet2;
        ClickProbabilities {
            first: p1,
            second: p2,
            coincidence: (1.0 - quiet1 - quiet2 + quiet_both).max(0.0),
        }
    }
}

/// Per-gate click probabilities without dead time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickProbabilities {
    pub first: f64,
    pub second: f64,
    pub coincidence: f64,
}

impl ClickProbabilities {
    pub fn from_config(
        pump: &PumpConfig,
        det1: &DetectorConfig,
        det2: &DetectorConfig,
        scat: &ScatterModel,
        routing: &Routing,
    ) -> Result<Self> {
        Ok(GateModel::new(pump, det1, det2, scat, routing)?.clicks())
    }

    /// Expected coincidence to accidental ratio.
    pub fn coincidence_to_accidental(&self) -> f64 {
        self.coincidence / (self.first * self.second)
    }
}

/// Raman photons per pulse per band that complete a measured total band
/// occupation `total_per_band` next to `pair_mean` pair photons.
pub fn raman_for_band_total(total_per_band: f64, pair_mean: f64) -> Result<f64> {
    let r = total_per_band - pair_mean;
    if r < 0.0 {
        return Err(Error::Config(format!(
            "band total {total_per_band} is below the pair contribution {pair_mean}"
        )));
    }
    Ok(r)
}

/// Co-polarized Raman coefficient (photons/pulse/mW/band) that makes the
/// expected coincidence to accidental ratio equal `target` for the given
/// routing. With `co_polarized_selection` off, the cross-polarized
/// coefficient already in `scat` is kept and the co-polarized one is solved.
pub fn calibrate_raman_for_ratio(
    target: f64,
    pump: &PumpConfig,
    det1: &DetectorConfig,
    det2: &DetectorConfig,
    scat: &ScatterModel,
    routing: &Routing,
) -> Result<f64> {
    if pump.avg_power <= 0.0 {
        return Err(Error::Config("Raman calibration needs a nonzero pump power".into()));
    }
    let ratio = |co: f64| -> Result<f64> {
        let s = ScatterModel { raman_coeff_co: co, ..*scat };
        Ok(ClickProbabilities::from_config(pump, det1, det2, &s, routing)?.coincidence_to_accidental())
    };
    let mut lo = 0.0;
    if ratio(lo)? < target {
        return Err(Error::Config(format!(
            "ratio {target} is unreachable: {:.3} without co-polarized Raman",
            ratio(lo)?
        )));
    }
    let mut hi = 1.0 / pump.avg_power;
    while ratio(hi)? > target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Config(format!("ratio {target} is unreachable")));
        }
    }
    // The ratio decreases monotonically with the Raman background.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
