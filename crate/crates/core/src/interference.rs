//! Two-photon interference of the loop output.
//!
//! All coincidence probabilities here are relative: they are normalized so
//! that distinguishable photons (no interference) give 1. A pure
//! frequency-entangled pair therefore oscillates between 0 and 2 as the delay
//! in mode `c` is scanned.

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{check_probability, check_range, Error, Result};
use crate::state::{DensityOperator, FrequencyPair, PairKet, TwoPhotonState};
use crate::SPEED_OF_LIGHT;
use num_complex::Complex64;

/// Optical delay of mode `c` relative to mode `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delay {
    /// Seconds.
    pub delta_tau: f64,
}

impl Delay {
    pub fn from_seconds(delta_tau: f64) -> Self {
        Self { delta_tau }
    }

    /// Delay produced by moving a retro-reflecting stage by `delta_l_mm`; the
    /// light path changes by twice the stage travel.
    pub fn from_stage_mm(delta_l_mm: f64) -> Self {
        Self {
            delta_tau: 2.0 * delta_l_mm * 1e-3 / SPEED_OF_LIGHT,
        }
    }

    pub fn stage_mm(&self) -> f64 {
        0.5 * self.delta_tau * SPEED_OF_LIGHT * 1e3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    /// Flat-top pass band; the envelope is `sin(x)/x`.
    Square,
    Gaussian,
}

/// Pass band of the signal/idler filters in front of the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpectrum {
    pub shape: FilterShape,
    /// Envelope scale in rad/s.
    pub sigma: f64,
    /// Centre frequency in rad/s (informational).
    pub center: f64,
}

impl FilterSpectrum {
    pub fn new(shape: FilterShape, sigma: f64, center: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("filter sigma must be positive, got {sigma}")));
        }
        Ok(Self { shape, sigma, center })
    }

    /// Envelope scale from a full pass-band width in nanometres.
    ///
    /// Signal and idler detunings are anticorrelated, so their frequency
    /// difference sweeps twice the detuning and a flat band of angular width
    /// `dW` gives `sinc(dW * dtau)`; hence `sigma = dW`.
    pub fn sigma_from_bandwidth_nm(bandwidth_nm: f64, center_nm: f64) -> f64 {
        let center_m = center_nm * 1e-9;
        std::f64::consts::TAU * SPEED_OF_LIGHT * bandwidth_nm * 1e-9 / (center_m * center_m)
    }

    /// Two-photon envelope `f(dtau)`, equal to 1 at zero delay.
    pub fn envelope(&self, delta_tau: f64) -> f64 {
        let x = self.sigma * delta_tau;
        match self.shape {
            FilterShape::Square => sinc(x),
            FilterShape::Gaussian => (-0.5 * x * x).exp(),
        }
    }
}

/// Unnormalized `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Taylor series; the next term is x^6/5040.
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `d sinc / dx`.
pub fn sinc_derivative(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        -x / 3.0 + x * x2 / 30.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// Sampled coincidence curve versus stage position.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BeatCurve {
    pub points: Vec<BeatPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatPoint {
    pub delta_l_mm: f64,
    pub p2: f64,
}

impl BeatCurve {
    pub fn new(points: Vec<BeatPoint>) -> Result<Self> {
        if let Some(bad) = points.iter().find(|p| !(p.p2 >= 0.0) || !p.delta_l_mm.is_finite()) {
            return Err(Error::InsufficientData(format!(
                "beat curve point at {} mm has invalid value {}",
                bad.delta_l_mm, bad.p2
            )));
        }
        Ok(Self { points })
    }

    pub fn positions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_l_mm).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p2).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Time-resolved coincidence of the entangled state between ports `c` and `d`:
/// `1 + cos((w_s - w_i) tau)`.
pub fn temporal_beat_p2(tau: f64, freq: &FrequencyPair) -> f64 {
    1.0 + ((freq.omega_s - freq.omega_i) * tau).cos()
}

/// Coincidence behind a 50/50 coupler with delay `dtau` in mode `c`:
/// `1 - cos((w_s - w_i) dtau)`.
pub fn spatial_beat_p2(delay: Delay, freq: &FrequencyPair) -> f64 {
    1.0 - ((freq.omega_s - freq.omega_i) * delay.delta_tau).cos()
}

/// Spatial beat of the entangled state mixed with the cross-mode background.
pub fn mixed_beat_p2(delay: Delay, freq: &FrequencyPair, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(1.0 - p * ((freq.omega_s - freq.omega_i) * delay.delta_tau).cos())
}

/// Broadband spatial beat, `1 - V f(dtau) cos((w_i - w_s) dtau)`.
pub fn multimode_p2(delay: Delay, freq: &FrequencyPair, v: f64, filt: &FilterSpectrum) -> Result<f64> {
    check_probability("visibility", v)?;
    Ok(multimode_p2_unchecked(delay.delta_tau, freq.difference(), v, filt))
}

pub(crate) fn multimode_p2_unchecked(delta_tau: f64, diff: f64, v: f64, filt: &FilterSpectrum) -> f64 {
    1.0 - v * filt.envelope(delta_tau) * (diff * delta_tau).cos()
}

/// Upper bound on the fringe visibility from thermally distributed multi-pair
/// emission, `1 - 2 P_p` with `P_p` the pair probability per pulse.
pub fn visibility_limit(pp: f64) -> Result<f64> {
    check_range("pair probability", pp, 0.0, 0.5)?;
    Ok(1.0 - 2.0 * pp)
}

// ---- brute-force coincidence oracle -------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Port {
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Band {
    Signal,
    Idler,
}

/// Positive-frequency field operator as a sum of `coeff * a_{port,band}`.
#[derive(Debug, Clone, Default)]
struct FieldOperator {
    terms: Vec<((Port, Band), c64)>,
}

impl FieldOperator {
    /// `E_k(t) = a_k(w_s) e^{-i w_s t} + a_k(w_i) e^{-i w_i t}`.
    fn port(port: Port, t: f64, freq: &FrequencyPair) -> Self {
        Self {
            terms: vec![
                ((port, Band::Signal), Complex64::from_polar(1.0, -freq.omega_s * t)),
                ((port, Band::Idler), Complex64::from_polar(1.0, -freq.omega_i * t)),
            ],
        }
    }

    fn scaled(mut self, k: c64) -> Self {
        for (_, c) in &mut self.terms {
            *c *= k;
        }
        self
    }

    fn plus(mut self, other: Self) -> Self {
        self.terms.extend(other.terms);
        self
    }

    fn keep_band(mut self, band: Band) -> Self {
        self.terms.retain(|((_, b), _)| *b == band);
        self
    }

    fn coefficient(&self, slot: (Port, Band)) -> c64 {
        self.terms.iter().filter(|(s, _)| *s == slot).map(|(_, c)| *c).sum()
    }
}

fn ket_slots(ket: PairKet) -> [(Port, Band); 2] {
    match ket {
        PairKet::BothC => [(Port::C, Band::Signal), (Port::C, Band::Idler)],
        PairKet::BothD => [(Port::D, Band::Signal), (Port::D, Band::Idler)],
        PairKet::SignalC => [(Port::C, Band::Signal), (Port::D, Band::Idler)],
        PairKet::IdlerC => [(Port::C, Band::Idler), (Port::D, Band::Signal)],
    }
}

/// Detector fields behind the interference coupler with delay `dtau` on `c`,
/// each followed by its band filter (signal on detector 1, idler on 2).
fn detector_fields(t1: f64, t2: f64, delta_tau: f64, freq: &FrequencyPair) -> (FieldOperator, FieldOperator) {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let t = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let out1 = FieldOperator::port(Port::C, t1 + delta_tau, freq)
        .scaled(r)
        .plus(FieldOperator::port(Port::D, t1, freq).scaled(t));
    let out2 = FieldOperator::port(Port::D, t2, freq)
        .scaled(r)
        .plus(FieldOperator::port(Port::C, t2 + delta_tau, freq).scaled(t));
    (out1.keep_band(Band::Signal), out2.keep_band(Band::Idler))
}

/// `<0| E1 E2 |ket>` for every basis ket. Each ket holds one photon in each of
/// two distinct slots, so only the two orderings of the slots contribute.
fn vacuum_projections(e1: &FieldOperator, e2: &FieldOperator) -> [c64; 4] {
    PairKet::ALL.map(|ket| {
        let [x, y] = ket_slots(ket);
        e1.coefficient(x) * e2.coefficient(y) + e1.coefficient(y) * e2.coefficient(x)
    })
}

/// Direct evaluation of `<E2- E1- E1+ E2+>` over the pair basis at detection
/// times `t` and `t + tau`, rescaled by 4 so that distinguishable photons give 1.
pub fn oracle_p2_at(delay: Delay, rho: &DensityOperator, freq: &FrequencyPair, t: f64, tau: f64) -> f64 {
    let (e1, e2) = detector_fields(t + tau, t, delay.delta_tau, freq);
    let amps = vacuum_projections(&e1, &e2);
    let mut total = Complex64::new(0.0, 0.0);
    for (k, ak) in amps.iter().enumerate() {
        for (l, al) in amps.iter().enumerate() {
            total += ak.conj() * rho.matrix[(l, k)] * al;
        }
    }
    4.0 * total.re
}

/// Oracle coincidence probability at `t = tau = 0`.
pub fn oracle_p2(delay: Delay, rho: &DensityOperator, freq: &FrequencyPair) -> f64 {
    oracle_p2_at(delay, rho, freq, 0.0, 0.0)
}

pub fn oracle_p2_pure(delay: Delay, state: &TwoPhotonState, freq: &FrequencyPair) -> f64 {
    oracle_p2(delay, &DensityOperator::pure(state), freq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::mix_with_background;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, TAU};

    fn reference_pair() -> FrequencyPair {
        FrequencyPair::from_pump_and_difference(1538.2, 1.58e12).unwrap()
    }

    #[test]
    fn temporal_beat_examples() {
        let f = reference_pair();
        let dw = f.difference();
        assert_eq!(temporal_beat_p2(0.0, &f), 2.0);
        assert_abs_diff_eq!(temporal_beat_p2(PI / dw, &f), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(temporal_beat_p2(TAU / dw / 4.0, &f), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spatial_beat_examples() {
        let f = reference_pair();
        assert_eq!(spatial_beat_p2(Delay::from_seconds(0.0), &f), 0.0);
        let half = f.beat_period_mm() / 2.0;
        assert_abs_diff_eq!(spatial_beat_p2(Delay::from_stage_mm(half), &f), 2.0, epsilon = 1e-12);
        // 0.0475 mm is within 0.2% of the half period.
        assert!(spatial_beat_p2(Delay::from_stage_mm(0.0475), &f) > 1.9999);
        assert!(spatial_beat_p2(Delay::from_stage_mm(0.095), &f) < 1e-4);
    }

    #[test]
    fn mixed_beat_examples() {
        let f = reference_pair();
        let d = Delay::from_stage_mm(0.013);
        assert_abs_diff_eq!(mixed_beat_p2(d, &f, 1.0).unwrap(), spatial_beat_p2(d, &f), epsilon = 1e-15);
        assert_eq!(mixed_beat_p2(d, &f, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(mixed_beat_p2(Delay::from_seconds(0.0), &f, 0.95).unwrap(), 0.05, epsilon = 1e-15);
        assert!(mixed_beat_p2(d, &f, 1.5).is_err());
    }

    #[test]
    fn multimode_examples() {
        let f = reference_pair();
        let filt = FilterSpectrum::new(FilterShape::Square, TAU * 1.09e11, 0.0).unwrap();
        assert_abs_diff_eq!(
            multimode_p2(Delay::from_seconds(0.0), &f, 0.95, &filt).unwrap(),
            0.05,
            epsilon = 1e-15
        );
        let far = multimode_p2(Delay::from_seconds(1e-8), &f, 0.95, &filt).unwrap();
        assert!((far - 1.0).abs() < 1e-3);
        let null = Delay::from_seconds(PI / filt.sigma);
        assert_abs_diff_eq!(multimode_p2(null, &f, 0.95, &filt).unwrap(), 1.0, epsilon = 1e-12);
        assert!(multimode_p2(null, &f, -0.1, &filt).is_err());
    }

    #[test]
    fn gaussian_envelope() {
        let g = FilterSpectrum::new(FilterShape::Gaussian, 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(g.envelope(1.0), (-2.0f64).exp(), epsilon = 1e-15);
        assert!(FilterSpectrum::new(FilterShape::Gaussian, 0.0, 0.0).is_err());
    }

    #[test]
    fn bandwidth_conversion() {
        let s = FilterSpectrum::sigma_from_bandwidth_nm(0.9, 1544.5);
        assert_abs_diff_eq!(s / TAU, 1.131e11, epsilon = 1e8);
    }

    #[test]
    fn visibility_limit_examples() {
        assert_eq!(visibility_limit(0.013).unwrap(), 0.974);
        assert_eq!(visibility_limit(0.0).unwrap(), 1.0);
        assert_eq!(visibility_limit(0.25).unwrap(), 0.5);
        assert!(visibility_limit(0.6).is_err());
        assert!(visibility_limit(-0.01).is_err());
    }

    #[test]
    fn sinc_series_is_continuous() {
        for x in [9.9e-5, 1.01e-4, -9.9e-5] {
            assert_abs_diff_eq!(sinc(x), x.sin() / x, epsilon = 1e-15);
            assert_abs_diff_eq!(sinc_derivative(x), (x * x.cos() - x.sin()) / (x * x), epsilon = 1e-8);
        }
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(sinc_derivative(0.0), 0.0);
    }

    #[test]
    fn oracle_reproduces_entangled_beat() {
        let f = reference_pair();
        let psi2 = TwoPhotonState::psi2();
        for k in 0..50 {
            let d = Delay::from_stage_mm(-0.2 + 0.008 * k as f64);
            assert_abs_diff_eq!(oracle_p2_pure(d, &psi2, &f), spatial_beat_p2(d, &f), epsilon = 1e-12);
        }
    }

    #[test]
    fn oracle_ignores_detection_times() {
        let f = reference_pair();
        let rho = mix_with_background(&TwoPhotonState::psi2(), 0.7).unwrap();
        let d = Delay::from_stage_mm(0.021);
        let base = oracle_p2(d, &rho, &f);
        for (t, tau) in [(1e-12, 3e-13), (-4e-12, 1.7e-13), (2.2e-12, -8e-13)] {
            assert_abs_diff_eq!(oracle_p2_at(d, &rho, &f, t, tau), base, epsilon = 1e-12);
        }
    }

    #[test]
    fn oracle_on_same_port_state() {
        // Pairs sharing a port beat at the pump sum frequency, not the difference.
        let f = reference_pair();
        let g = FrequencyPair::new(f.omega_s - 3e12, f.omega_i + 3e12).unwrap();
        let psi1 = TwoPhotonState::psi1();
        for dtau in [0.0, 1.3e-15, 7.7e-14, 2.0e-12] {
            let d = Delay::from_seconds(dtau);
            let a = oracle_p2_pure(d, &psi1, &f);
            assert_abs_diff_eq!(a, oracle_p2_pure(d, &psi1, &g), epsilon = 1e-9);
            let sum = f.omega_s + f.omega_i;
            assert_abs_diff_eq!(a, 1.0 - (sum * dtau).cos(), epsilon = 1e-9);
        }
    }
}
