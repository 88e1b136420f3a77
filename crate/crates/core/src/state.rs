//! Two-photon state algebra of the Sagnac loop.
//!
//! Each pump replica creates a signal/idler pair to first order in the
//! four-wave-mixing gain `eta`. The clockwise replica lives in loop mode `a`,
//! the counter-clockwise one in mode `b`; the 50/50 coupler maps them onto the
//! output modes `c` (reflected) and `d` (transmitted). After post-selecting
//! on one pair the output is a superposition of four kets:
//!
//! | ket        | meaning                                |
//! |------------|----------------------------------------|
//! | `BothC`    | signal and idler both in `c`           |
//! | `BothD`    | signal and idler both in `d`           |
//! | `SignalC`  | signal in `c`, idler in `d`            |
//! | `IdlerC`   | idler in `c`, signal in `d`            |

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::{c64, SPEED_OF_LIGHT};

/// Default upper bound on `|eta|` for the first-order expansion to hold.
pub const DEFAULT_GAIN_BOUND: f64 = 0.2;

const NORM_TOL: f64 = 1e-12;

/// Signal and idler angular frequencies (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPair {
    pub omega_s: f64,
    pub omega_i: f64,
}

impl FrequencyPair {
    pub fn new(omega_s: f64, omega_i: f64) -> Result<Self> {
        if !(omega_s.is_finite() && omega_i.is_finite()) || omega_s <= 0.0 || omega_i <= 0.0 {
            return Err(Error::Frequency(format!(
                "frequencies must be finite and positive (got {omega_s}, {omega_i})"
            )));
        }
        if omega_s == omega_i {
            return Err(Error::Frequency("signal and idler must be non-degenerate".into()));
        }
        Ok(Self { omega_s, omega_i })
    }

    /// Builds the pair from vacuum wavelengths in nanometres.
    pub fn from_wavelengths_nm(signal_nm: f64, idler_nm: f64) -> Result<Self> {
        Self::new(angular_frequency_nm(signal_nm), angular_frequency_nm(idler_nm))
    }

    /// Places signal and idler symmetrically about a degenerate pump so that
    /// `(omega_i - omega_s) / 2pi = diff_hz` and `omega_s + omega_i = 2 omega_p`.
    pub fn from_pump_and_difference(pump_nm: f64, diff_hz: f64) -> Result<Self> {
        let omega_p = angular_frequency_nm(pump_nm);
        let half = PI * diff_hz;
        Self::new(omega_p - half, omega_p + half)
    }

    /// Degenerate pump frequency fixed by energy conservation.
    pub fn pump_frequency(&self) -> f64 {
        0.5 * (self.omega_s + self.omega_i)
    }

    /// `omega_i - omega_s` in rad/s.
    pub fn difference(&self) -> f64 {
        self.omega_i - self.omega_s
    }

    /// Spatial beat period in stage millimetres, `pi c / |omega_i - omega_s|`.
    pub fn beat_period_mm(&self) -> f64 {
        PI * SPEED_OF_LIGHT / self.difference().abs() * 1e3
    }
}

fn angular_frequency_nm(lambda_nm: f64) -> f64 {
    TAU * SPEED_OF_LIGHT / (lambda_nm * 1e-9)
}

/// First-order pair-creation amplitude of one pump pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfwmGain {
    eta: c64,
}

impl SfwmGain {
    pub fn new(eta: c64) -> Result<Self> {
        Self::with_bound(eta, DEFAULT_GAIN_BOUND)
    }

    pub fn with_bound(eta: c64, bound: f64) -> Result<Self> {
        let magnitude = eta.norm();
        if !magnitude.is_finite() || magnitude >= bound {
            return Err(Error::GainOutOfRange { magnitude, bound });
        }
        Ok(Self { eta })
    }

    /// `eta = g * P` with the calibration constant `g` in 1/mW. The gain is
    /// proportional to the squared pump field amplitude, i.e. to pump power.
    pub fn from_pump_power(g_per_mw: f64, power_mw: f64) -> Result<Self> {
        Self::new(Complex64::new(g_per_mw * power_mw, 0.0))
    }

    /// Calibration constant that makes the Sagnac output pair probability
    /// `|sqrt(2) eta|^2` equal `pairs_per_pulse` at `power_mw`.
    pub fn calibrate(pairs_per_pulse: f64, power_mw: f64) -> f64 {
        (pairs_per_pulse / 2.0).sqrt() / power_mw
    }

    pub fn eta(&self) -> c64 {
        self.eta
    }

    /// Probability of one pair leaving the loop, `|sqrt(2) eta|^2`.
    pub fn pair_probability(&self) -> f64 {
        2.0 * self.eta.norm_sqr()
    }
}

/// Phase difference between the counter-propagating pumps, kept in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopPhase(f64);

impl LoopPhase {
    pub fn new(phi: f64) -> Self {
        let mut wrapped = phi.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs.
        if wrapped >= TAU {
            wrapped = 0.0;
        }
        LoopPhase(wrapped)
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Clockwise,
    CounterClockwise,
}

/// Vacuum plus pair amplitude of a single propagation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalPair {
    pub vacuum: c64,
    pub pair: c64,
}

/// State of one pump pass before recombination: `|0> + eta |s,i>` for the
/// clockwise pump and `|0> - e^{2i phi} eta |s,i>` for the counter-clockwise
/// pump, whose field picked up the cross-coupling quarter-wave phase.
pub fn sfwm_pair_state(eta: SfwmGain, direction: Direction, phi: LoopPhase) -> DirectionalPair {
    let pair = match direction {
        Direction::Clockwise => eta.eta(),
        Direction::CounterClockwise => -Complex64::from_polar(1.0, 2.0 * phi.radians()) * eta.eta(),
    };
    DirectionalPair {
        vacuum: Complex64::new(1.0, 0.0),
        pair,
    }
}

/// Spatial modes of the loop (`a`, `b`) and of the coupler outputs (`c`, `d`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    A,
    B,
    C,
    D,
}

/// Two-photon kets of the output modes, in density-matrix index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKet {
    BothC,
    BothD,
    SignalC,
    IdlerC,
}

impl PairKet {
    pub const ALL: [PairKet; 4] = [PairKet::BothC, PairKet::BothD, PairKet::SignalC, PairKet::IdlerC];

    pub fn index(self) -> usize {
        self as usize
    }

    fn from_modes(signal: Mode, idler: Mode) -> PairKet {
        match (signal, idler) {
            (Mode::C, Mode::C) => PairKet::BothC,
            (Mode::D, Mode::D) => PairKet::BothD,
            (Mode::C, Mode::D) => PairKet::SignalC,
            (Mode::D, Mode::C) => PairKet::IdlerC,
            _ => unreachable!("loop modes never appear at the coupler output"),
        }
    }
}

/// Amplitudes over the loop-mode basis, to first order in the gain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoopInputState {
    pub vacuum: c64,
    /// `|w_s, w_i>_a`
    pub pair_a: c64,
    /// `|w_s, w_i>_b`
    pub pair_b: c64,
    /// `|w_s>_a |w_i>_b`
    pub signal_a_idler_b: c64,
    /// `|w_i>_a |w_s>_b`
    pub idler_a_signal_b: c64,
}

impl LoopInputState {
    /// Product of the two directional states with the `eta^2` two-pair term dropped.
    pub fn from_directions(cw: DirectionalPair, ccw: DirectionalPair) -> Self {
        Self {
            vacuum: cw.vacuum * ccw.vacuum,
            pair_a: cw.pair * ccw.vacuum,
            pair_b: cw.vacuum * ccw.pair,
            ..Default::default()
        }
    }

    /// Both pump passes of a loop with gain `eta` and pump phase difference `phi`.
    pub fn sagnac(eta: SfwmGain, phi: LoopPhase) -> Self {
        Self::from_directions(
            sfwm_pair_state(eta, Direction::Clockwise, phi),
            sfwm_pair_state(eta, Direction::CounterClockwise, phi),
        )
    }

    fn terms(&self) -> [((Mode, Mode), c64); 4] {
        [
            ((Mode::A, Mode::A), self.pair_a),
            ((Mode::B, Mode::B), self.pair_b),
            ((Mode::A, Mode::B), self.signal_a_idler_b),
            ((Mode::B, Mode::A), self.idler_a_signal_b),
        ]
    }
}

/// Single-photon coupler rule: `a -> (d + i c)/sqrt2`, `b -> (c + i d)/sqrt2`.
fn coupler_image(mode: Mode) -> [(Mode, c64); 2] {
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let t = Complex64::new(0.0, FRAC_1_SQRT_2);
    match mode {
        Mode::A => [(Mode::D, r), (Mode::C, t)],
        Mode::B => [(Mode::C, r), (Mode::D, t)],
        Mode::C | Mode::D => unreachable!("only loop modes enter the coupler"),
    }
}

/// Recombines the loop modes at the 50/50 coupler. Each two-photon ket is
/// expanded bilinearly through the single-photon rule.
pub fn coupler_transform(input: &LoopInputState) -> TwoPhotonState {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for ((signal_mode, idler_mode), amp) in input.terms() {
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (ms, cs) in coupler_image(signal_mode) {
            for (mi, ci) in coupler_image(idler_mode) {
                out[PairKet::from_modes(ms, mi).index()] += amp * cs * ci;
            }
        }
    }
    TwoPhotonState::from_parts(input.vacuum, out)
}

/// Output-mode state: vacuum amplitude plus the four pair kets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonState {
    pub amp_vac: c64,
    /// `|w_s, w_i>_c`
    pub amp_cc: c64,
    /// `|w_s, w_i>_d`
    pub amp_dd: c64,
    /// `|w_s>_c |w_i>_d`
    pub amp_sc_id: c64,
    /// `|w_i>_c |w_s>_d`
    pub amp_ic_sd: c64,
    /// Set when the amplitudes are known to sum to unit probability.
    pub normalized: bool,
}

impl TwoPhotonState {
    fn from_parts(vacuum: c64, pair: [c64; 4]) -> Self {
        let mut s = Self {
            amp_vac: vacuum,
            amp_cc: pair[0],
            amp_dd: pair[1],
            amp_sc_id: pair[2],
            amp_ic_sd: pair[3],
            normalized: false,
        };
        s.normalized = (s.norm_sqr() - 1.0).abs() < NORM_TOL;
        s
    }

    /// Normalized pair-only state from amplitudes in [`PairKet`] order.
    pub fn from_pair_amplitudes(pair: [c64; 4]) -> Self {
        Self::from_parts(Complex64::new(0.0, 0.0), pair)
    }

    /// `(|w_s,w_i>_c - |w_s,w_i>_d)/sqrt2`: both photons share an output port.
    pub fn psi1() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::from_pair_amplitudes([h, -h, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)])
    }

    /// `(|w_s>_c|w_i>_d + |w_i>_c|w_s>_d)/sqrt2`: the frequency-entangled state.
    pub fn psi2() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        Self::from_pair_amplitudes([z, z, h, h])
    }

    /// Post-selected single-pair output for loop phase `phi`, global factor dropped.
    pub fn sagnac(phi: LoopPhase) -> Self {
        let (s, c) = phi.radians().sin_cos();
        let a = |x: f64| Complex64::new(x * FRAC_1_SQRT_2, 0.0);
        Self::from_pair_amplitudes([a(-c), a(c), a(s), a(s)])
    }

    pub fn pair_amplitudes(&self) -> [c64; 4] {
        [self.amp_cc, self.amp_dd, self.amp_sc_id, self.amp_ic_sd]
    }

    pub fn amplitude(&self, ket: PairKet) -> c64 {
        self.pair_amplitudes()[ket.index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_vac.norm_sqr() + self.pair_norm_sqr()
    }

    pub fn pair_norm_sqr(&self) -> f64 {
        self.pair_amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    /// Drops the vacuum and renormalizes the pair sector.
    pub fn post_select_pair(&self) -> Result<Self> {
        let n = self.pair_norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::NoPair);
        }
        let pair = self.pair_amplitudes().map(|a| a / n);
        Ok(Self::from_pair_amplitudes(pair))
    }

    /// Pair-sector inner product `<self|other>`.
    pub fn inner(&self, other: &Self) -> c64 {
        self.pair_amplitudes()
            .iter()
            .zip(other.pair_amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// True when both states agree up to a global phase, `|<a|b>| = 1`.
    pub fn same_ray(&self, other: &Self, tol: f64) -> bool {
        (self.inner(other).norm() - 1.0).abs() < tol
    }

    fn pair_vector(&self) -> Vector4<c64> {
        Vector4::from(self.pair_amplitudes())
    }
}

/// Output of the loop with gain `eta` and pump phase difference `phi`,
/// post-selected on exactly one pair. Two-pair terms are not represented.
pub fn sagnac_output(eta: SfwmGain, phi: LoopPhase) -> Result<TwoPhotonState> {
    if eta.eta().norm() == 0.0 {
        return Err(Error::NoPair);
    }
    Ok(TwoPhotonState::sagnac(phi))
}

/// Density operator of the post-selected pair sector (vacuum excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    pub matrix: Matrix4<c64>,
    /// Weight of the coherent component the operator was built from.
    pub purity_p: f64,
}

impl DensityOperator {
    pub fn pure(state: &TwoPhotonState) -> Self {
        let v = state.pair_vector();
        Self {
            matrix: v * v.adjoint(),
            purity_p: 1.0,
        }
    }

    /// Cross-mode background: equal mixture of `|w_s>_c|w_i>_d` and `|w_i>_c|w_s>_d`.
    pub fn unentangled_background() -> Self {
        let mut m = Matrix4::zeros();
        m[(PairKet::SignalC.index(), PairKet::SignalC.index())] = Complex64::new(0.5, 0.0);
        m[(PairKet::IdlerC.index(), PairKet::IdlerC.index())] = Complex64::new(0.5, 0.0);
        Self {
            matrix: m,
            purity_p: 0.0,
        }
    }

    /// Loop output when the two pump replicas overlap in polarization with
    /// probability `p`. The distinguishable fraction recombines incoherently,
    /// which is the equal mixture of `psi1` and `psi2`.
    pub fn partially_matched(phi: LoopPhase, p: f64) -> Result<Self> {
        check_probability("polarization overlap", p)?;
        let coherent = Self::pure(&TwoPhotonState::sagnac(phi)).matrix;
        let incoherent = (Self::pure(&TwoPhotonState::psi1()).matrix
            + Self::pure(&TwoPhotonState::psi2()).matrix)
            * Complex64::new(0.5, 0.0);
        Ok(Self {
            matrix: coherent * Complex64::new(p, 0.0) + incoherent * Complex64::new(1.0 - p, 0.0),
            purity_p: p,
        })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.matrix - self.matrix.adjoint()).iter().all(|x| x.norm() < tol)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace and positive semidefinite within tolerances.
    pub fn is_valid(&self) -> bool {
        self.is_hermitian(1e-12) && (self.trace() - 1.0).abs() < 1e-12 && self.min_eigenvalue() >= -1e-10
    }

    /// Occupation probability of a pair ket.
    pub fn probability(&self, ket: PairKet) -> f64 {
        self.matrix[(ket.index(), ket.index())].re
    }

    pub fn element(&self, row: PairKet, col: PairKet) -> c64 {
        self.matrix[(row.index(), col.index())]
    }

    /// `<psi|rho|psi>`
    pub fn expectation(&self, psi: &TwoPhotonState) -> f64 {
        let v = psi.pair_vector();
        (v.adjoint() * self.matrix * v)[(0, 0)].re
    }
}

/// `rho = p |psi2><psi2| + (1 - p) rho_un` with the cross-mode background.
pub fn mix_with_background(psi2: &TwoPhotonState, p: f64) -> Result<DensityOperator> {
    check_probability("p", p)?;
    let pure = DensityOperator::pure(psi2).matrix;
    let bg = DensityOperator::unentangled_background().matrix;
    Ok(DensityOperator {
        matrix: pure * Complex64::new(p, 0.0) + bg * Complex64::new(1.0 - p, 0.0),
        purity_p: p,
    })
}

/// Overlap `<psi|rho|psi>` of a mixed state with a target pure state.
pub fn fidelity(rho: &DensityOperator, psi: &TwoPhotonState) -> f64 {
    rho.expectation(psi).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn gain(x: f64) -> SfwmGain {
        SfwmGain::new(Complex64::new(x, 0.0)).unwrap()
    }

    #[test]
    fn clockwise_pair_amplitude_is_eta() {
        let s = sfwm_pair_state(gain(0.1), Direction::Clockwise, LoopPhase::new(1.234));
        assert_eq!(s.pair, Complex64::new(0.1, 0.0));
        assert_eq!(s.vacuum, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn no_pump_means_vacuum_only() {
        let s = sfwm_pair_state(gain(0.0), Direction::Clockwise, LoopPhase::new(0.0));
        assert_eq!(s.pair, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn counter_clockwise_at_quarter_phase_flips_sign() {
        let s = sfwm_pair_state(gain(0.1), Direction::CounterClockwise, LoopPhase::new(FRAC_PI_2));
        assert_abs_diff_eq!(s.pair.re, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.pair.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gain_bound_is_enforced() {
        assert!(matches!(
            SfwmGain::new(Complex64::new(0.25, 0.0)),
            Err(Error::GainOutOfRange { .. })
        ));
        assert!(SfwmGain::with_bound(Complex64::new(0.25, 0.0), 0.3).is_ok());
    }

    #[test]
    fn gain_calibration_reproduces_pair_rate() {
        let g = SfwmGain::calibrate(0.013, 0.1);
        let eta = SfwmGain::from_pump_power(g, 0.1).unwrap();
        assert_abs_diff_eq!(eta.pair_probability(), 0.013, epsilon = 1e-15);
    }

    #[test]
    fn loop_phase_wraps() {
        assert_abs_diff_eq!(LoopPhase::new(-FRAC_PI_2).radians(), 3.0 * FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(LoopPhase::new(TAU + 0.5).radians(), 0.5, epsilon = 1e-15);
        assert!(LoopPhase::new(-1e-300).radians() < TAU);
    }

    #[test]
    fn coupler_maps_clockwise_pair() {
        // |s,i>_a -> (|dd> - |cc> + i|sc,id> + i|ic,sd>)/2
        let input = LoopInputState {
            pair_a: Complex64::new(1.0, 0.0),
            ..Default::default()
        };
        let out = coupler_transform(&input);
        assert_abs_diff_eq!(out.amp_dd.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amp_cc.re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amp_sc_id.im, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amp_ic_sd.im, 0.5, epsilon = 1e-15);
        assert!(out.normalized);
    }

    #[test]
    fn coupler_keeps_vacuum() {
        let input = LoopInputState {
            vacuum: Complex64::new(1.0, 0.0),
            ..Default::default()
        };
        let out = coupler_transform(&input);
        assert_eq!(out.amp_vac, Complex64::new(1.0, 0.0));
        assert_eq!(out.pair_norm_sqr(), 0.0);
    }

    #[test]
    fn antiphased_pairs_leave_in_the_same_port() {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let input = LoopInputState {
            pair_a: h,
            pair_b: -h,
            ..Default::default()
        };
        let out = coupler_transform(&input);
        let expected = TwoPhotonState::psi1();
        assert!(out.same_ray(&expected, 1e-14));
        assert_abs_diff_eq!(out.amp_sc_id.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sagnac_output_limits() {
        let psi = sagnac_output(gain(0.05), LoopPhase::new(0.0)).unwrap();
        assert!(psi.same_ray(&TwoPhotonState::psi1(), 1e-14));
        let psi = sagnac_output(gain(0.05), LoopPhase::new(FRAC_PI_2)).unwrap();
        assert!(psi.same_ray(&TwoPhotonState::psi2(), 1e-14));
        let psi = sagnac_output(gain(0.05), LoopPhase::new(PI / 4.0)).unwrap();
        for a in psi.pair_amplitudes() {
            assert_abs_diff_eq!(a.norm(), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn sagnac_output_needs_a_pair() {
        assert!(matches!(sagnac_output(gain(0.0), LoopPhase::new(0.3)), Err(Error::NoPair)));
    }

    #[test]
    fn quarter_phase_state_matches_composition() {
        let phi = LoopPhase::new(PI / 4.0);
        let composed = coupler_transform(&LoopInputState::sagnac(gain(0.1), phi))
            .post_select_pair()
            .unwrap();
        assert!(composed.same_ray(&TwoPhotonState::sagnac(phi), 1e-13));
    }

    #[test]
    fn mixture_limits() {
        let psi2 = TwoPhotonState::psi2();
        let rho = mix_with_background(&psi2, 1.0).unwrap();
        assert_eq!(rho.matrix, DensityOperator::pure(&psi2).matrix);

        let rho = mix_with_background(&psi2, 0.0).unwrap();
        assert_abs_diff_eq!(rho.probability(PairKet::SignalC), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.probability(PairKet::IdlerC), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.element(PairKet::SignalC, PairKet::IdlerC).norm(), 0.0);

        let rho = mix_with_background(&psi2, 0.9).unwrap();
        assert_abs_diff_eq!(rho.element(PairKet::SignalC, PairKet::IdlerC).re, 0.45, epsilon = 1e-15);
        assert!(rho.is_valid());

        assert!(mix_with_background(&psi2, 1.1).is_err());
        assert!(mix_with_background(&psi2, -0.1).is_err());
    }

    #[test]
    fn fidelity_follows_mixture_weight() {
        let psi2 = TwoPhotonState::psi2();
        for (p, f) in [(1.0, 1.0), (0.0, 0.5), (0.95, 0.975)] {
            let rho = mix_with_background(&psi2, p).unwrap();
            assert_abs_diff_eq!(fidelity(&rho, &psi2), f, epsilon = 1e-12);
        }
    }

    #[test]
    fn partially_matched_limits() {
        let phi = LoopPhase::new(FRAC_PI_2);
        let rho = DensityOperator::partially_matched(phi, 0.0).unwrap();
        for k in PairKet::ALL {
            assert_abs_diff_eq!(rho.probability(k), 0.25, epsilon = 1e-15);
        }
        let rho = DensityOperator::partially_matched(phi, 1.0).unwrap();
        assert_abs_diff_eq!(rho.expectation(&TwoPhotonState::psi2()), 1.0, epsilon = 1e-15);
        assert!(rho.is_valid());
    }

    #[test]
    fn frequency_pair_validation() {
        assert!(FrequencyPair::new(1.0, 1.0).is_err());
        assert!(FrequencyPair::new(-1.0, 2.0).is_err());
        let f = FrequencyPair::from_pump_and_difference(1538.2, 1.58e12).unwrap();
        assert_abs_diff_eq!(f.difference() / TAU, 1.58e12, epsilon = 1e3);
        assert_abs_diff_eq!(f.pump_frequency(), angular_frequency_nm(1538.2), epsilon = 1.0);
        assert_abs_diff_eq!(f.beat_period_mm(), 0.094871, epsilon = 1e-6);
    }
}
