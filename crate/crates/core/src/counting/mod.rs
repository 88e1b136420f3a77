//! Photon-counting experiments with gated single-photon detectors.
//!
//! Every detector gate captures one pump pulse. Per pulse the loop emits a
//! thermally distributed number of pairs with mean `pair_coeff * P^2` and a
//! Poisson number of Raman photons per band, linear in `P`. Photons are routed
//! to the two detectors according to the two-photon density operator, then
//! detected with finite efficiency, mixed with dark counts and gated by a
//! non-paralyzable dead time.

mod expect;
mod sim;
mod sweeps;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::interference::FilterSpectrum;
use crate::state::{DensityOperator, FrequencyPair, LoopPhase, PairKet};

pub use expect::{calibrate_raman_for_ratio, raman_for_band_total, ClickProbabilities};
pub use sim::{simulate_gates, BATCH_GATES};
pub use sweeps::{hwp_sweep, point_seed, power_sweep, stage_scan, Experiment, HwpRouting, StageScan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    /// Average power in mW.
    pub avg_power: f64,
    /// Pulse repetition rate in Hz.
    pub rep_rate: f64,
    /// Pulse width in seconds.
    pub pulse_width: f64,
    /// Centre wavelength in nm.
    pub center_wavelength: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            avg_power: 0.1,
            rep_rate: 40e6,
            pulse_width: 4e-12,
            center_wavelength: 1538.2,
        }
    }
}

impl PumpConfig {
    pub fn with_power(self, avg_power: f64) -> Self {
        Self { avg_power, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        // Zero power is allowed: it is the trivial end of a power sweep.
        if !(self.avg_power >= 0.0 && self.avg_power.is_finite()) {
            return Err(Error::Config(format!("pump power must be >= 0 mW, got {}", self.avg_power)));
        }
        for (name, v) in [
            ("pump repetition rate", self.rep_rate),
            ("pump pulse width", self.pulse_width),
            ("pump wavelength", self.center_wavelength),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Detection efficiency including filter and fiber losses.
    pub efficiency: f64,
    pub dark_prob_per_gate: f64,
    /// Gate width in seconds.
    pub gate_width: f64,
    /// Gate rate in Hz.
    pub gate_rate: f64,
    /// Dead time in seconds.
    pub dead_time: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.1,
            dark_prob_per_gate: 1e-5,
            gate_width: 2.5e-9,
            gate_rate: 1.29e6,
            dead_time: 10e-6,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self, pump: &PumpConfig) -> Result<()> {
        check_probability("detector efficiency", self.efficiency)?;
        check_probability("dark count probability", self.dark_prob_per_gate)?;
        if !(self.gate_rate > 0.0 && self.gate_rate <= pump.rep_rate) {
            return Err(Error::Config(format!(
                "gate rate {} Hz must be positive and at most the pump repetition rate {} Hz",
                self.gate_rate, pump.rep_rate
            )));
        }
        if !(self.gate_width > 0.0 && self.gate_width <= 1.0 / self.gate_rate) {
            return Err(Error::Config(format!(
                "gate width {} s must be positive and shorter than the gate period",
                self.gate_width
            )));
        }
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(Error::Config(format!("dead time must be >= 0 s, got {}", self.dead_time)));
        }
        Ok(())
    }

    /// Number of gates skipped after a click: those starting strictly inside
    /// the dead time.
    pub fn dead_gates(&self) -> u64 {
        let periods = self.dead_time * self.gate_rate;
        if periods <= 0.0 {
            0
        } else {
            (periods.ceil() as u64).saturating_sub(1)
        }
    }

    /// Dead time rounded down to whole gate periods, in seconds.
    pub fn effective_dead_time(&self) -> f64 {
        self.dead_gates() as f64 / self.gate_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterModel {
    /// Pairs per pulse per mW^2.
    pub pair_coeff: f64,
    /// Co-polarized Raman photons per pulse per mW in each band.
    pub raman_coeff_co: f64,
    /// Cross-polarized Raman photons per pulse per mW in each band.
    pub raman_coeff_cross: f64,
    /// A polarizer in front of the detectors removes cross-polarized Raman light.
    pub co_polarized_selection: bool,
    /// Coherent weight of the loop output state.
    pub purity_p: f64,
    pub loop_phase: LoopPhase,
}

impl Default for ScatterModel {
    fn default() -> Self {
        Self {
            pair_coeff: 1.3,
            raman_coeff_co: 0.0,
            raman_coeff_cross: 0.0,
            co_polarized_selection: true,
            purity_p: 1.0,
            loop_phase: LoopPhase::new(std::f64::consts::FRAC_PI_2),
        }
    }
}

impl ScatterModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair coefficient", self.pair_coeff),
            ("co-polarized Raman coefficient", self.raman_coeff_co),
            ("cross-polarized Raman coefficient", self.raman_coeff_cross),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        check_probability("purity p", self.purity_p)?;
        Ok(())
    }

    /// Mean pair number per pulse at average power `power_mw`.
    pub fn pair_mean(&self, power_mw: f64) -> f64 {
        self.pair_coeff * power_mw * power_mw
    }

    /// Mean Raman photon number per pulse in one band, summed over both
    /// loop output ports.
    pub fn raman_per_band(&self, power_mw: f64) -> f64 {
        let cross = if self.co_polarized_selection { 0.0 } else { self.raman_coeff_cross };
        (self.raman_coeff_co + cross) * power_mw
    }

    pub fn density(&self) -> Result<DensityOperator> {
        DensityOperator::partially_matched(self.loop_phase, self.purity_p)
    }
}

/// Frequencies and filters of the delayed-coupler interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatOptics {
    pub freq: FrequencyPair,
    pub filter: FilterSpectrum,
}

/// Which loop output ports the two detectors watch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Routing {
    /// Signal and idler detectors both on port `d`.
    DD,
    /// Signal detector on `c`, idler detector on `d`.
    CD,
    /// Ports `c` and `d` recombined on a 50/50 coupler, `c` delayed by a
    /// translation stage at `delta_l_mm`.
    StageScan { delta_l_mm: f64, optics: BeatOptics },
}

/// Probability that one pair sends its signal photon to detector 1 and its
/// idler photon to detector 2. Each photon alone reaches its detector with
/// probability 1/2 for every routing.
pub fn joint_routing_probability(rho: &DensityOperator, routing: &Routing) -> f64 {
    match routing {
        Routing::DD => rho.probability(PairKet::BothD),
        Routing::CD => rho.probability(PairKet::SignalC),
        Routing::StageScan { delta_l_mm, optics } => {
            let delay = crate::interference::Delay::from_stage_mm(*delta_l_mm);
            0.25 * hom_relative_coincidence(rho, delay, optics)
        }
    }
}

/// Relative coincidence probability behind the delayed coupler for an
/// arbitrary pair density operator. Same-port kets beat at the sum frequency,
/// which the finite filter bandwidth averages to their mean; the cross-port
/// coherence carries the difference-frequency fringe and the filter envelope.
pub fn hom_relative_coincidence(rho: &DensityOperator, delay: crate::interference::Delay, optics: &BeatOptics) -> f64 {
    let coherence = rho.element(PairKet::SignalC, PairKet::IdlerC);
    let dtau = delay.delta_tau;
    let fringe = (coherence * crate::c64::from_polar(1.0, optics.freq.difference() * dtau)).re;
    (rho.trace() - 2.0 * optics.filter.envelope(dtau) * fringe).max(0.0)
}

/// Aggregated counts of one scan point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScanResult {
    /// Scan variable: HWP angle in degrees, pump power in mW or stage position in mm.
    pub setting: f64,
    pub singles_1: u64,
    pub singles_2: u64,
    pub coincidences: u64,
    /// `singles_1 * singles_2 / n_gates`.
    pub accidentals_est: f64,
    pub n_gates: u64,
    /// Gates in which detector 1 was armed.
    #[serde(default)]
    pub active_gates_1: u64,
    #[serde(default)]
    pub active_gates_2: u64,
}

impl ScanResult {
    pub fn true_coincidences(&self) -> f64 {
        self.coincidences as f64 - self.accidentals_est
    }

    /// Standard error of the true coincidences from Poisson counting of the
    /// coincidences and of both singles.
    pub fn true_coincidences_std(&self) -> f64 {
        let a = self.accidentals_est;
        let rel = |s: u64| if s == 0 { 0.0 } else { 1.0 / s as f64 };
        ((self.coincidences as f64).max(1.0) + a * a * (rel(self.singles_1) + rel(self.singles_2))).sqrt()
    }

    /// Coincidence to accidental ratio, infinite when no accidentals are expected.
    pub fn coincidence_to_accidental(&self) -> f64 {
        self.coincidences as f64 / self.accidentals_est
    }

    pub(crate) fn finish(mut self, setting: f64) -> Self {
        self.setting = setting;
        self.accidentals_est = if self.n_gates == 0 {
            0.0
        } else {
            self.singles_1 as f64 * self.singles_2 as f64 / self.n_gates as f64
        };
        self
    }

    pub(crate) fn merge(self, other: Self) -> Self {
        Self {
            setting: self.setting,
            singles_1: self.singles_1 + other.singles_1,
            singles_2: self.singles_2 + other.singles_2,
            coincidences: self.coincidences + other.coincidences,
            accidentals_est: 0.0,
            n_gates: self.n_gates + other.n_gates,
            active_gates_1: self.active_gates_1 + other.active_gates_1,
            active_gates_2: self.active_gates_2 + other.active_gates_2,
        }
    }
}
