//! Jones-calculus model of the pump inside the Sagnac loop.
//!
//! The loop lies in the xz plane. Its only birefringent element is the fiber
//! polarization controller (FPC) with Jones matrix `Jc` for the clockwise pass;
//! the counter-clockwise pass sees the transpose. The fiber geometry between
//! the coupler and the FPC flips the sign of the x component, `J1 = diag(-1, 1)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::state::LoopPhase;

/// Absolute tolerance for the mode-matching predicates.
pub const MATCH_TOL: f64 = 1e-10;

const ZERO: c64 = Complex64::new(0.0, 0.0);
const ONE: c64 = Complex64::new(1.0, 0.0);
const I: c64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub ex: c64,
    pub ey: c64,
}

impl JonesVector {
    pub const fn new(ex: c64, ey: c64) -> Self {
        Self { ex, ey }
    }

    pub fn real(ex: f64, ey: f64) -> Self {
        Self::new(Complex64::new(ex, 0.0), Complex64::new(ey, 0.0))
    }

    /// Linear polarization at `angle` radians from the x axis.
    pub fn linear(angle: f64) -> Self {
        Self::real(angle.cos(), angle.sin())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ex.norm_sqr() + self.ey.norm_sqr()
    }

    /// Hermitian inner product `<self, other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &Self) -> c64 {
        self.ex.conj() * other.ex + self.ey.conj() * other.ey
    }

    /// Bilinear product without conjugation.
    pub fn dot(&self, other: &Self) -> c64 {
        self.ex * other.ex + self.ey * other.ey
    }

    pub fn scale(&self, k: c64) -> Self {
        Self::new(self.ex * k, self.ey * k)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroField);
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    fn nonzero(self) -> Result<Self> {
        if self.norm_sqr() > 0.0 {
            Ok(self)
        } else {
            Err(Error::ZeroField)
        }
    }
}

impl Add for JonesVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.ex + rhs.ex, self.ey + rhs.ey)
    }
}

impl Sub for JonesVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.ex - rhs.ex, self.ey - rhs.ey)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesMatrix {
    pub jxx: c64,
    pub jxy: c64,
    pub jyx: c64,
    pub jyy: c64,
}

/// Geometry matrix of the fiber segment between the coupler and the FPC.
pub const LOOP_GEOMETRY: JonesMatrix = JonesMatrix {
    jxx: Complex64::new(-1.0, 0.0),
    jxy: ZERO,
    jyx: ZERO,
    jyy: ONE,
};

impl JonesMatrix {
    pub const IDENTITY: JonesMatrix = JonesMatrix {
        jxx: ONE,
        jxy: ZERO,
        jyx: ZERO,
        jyy: ONE,
    };

    pub const fn new(jxx: c64, jxy: c64, jyx: c64, jyy: c64) -> Self {
        Self { jxx, jxy, jyx, jyy }
    }

    pub fn real(jxx: f64, jxy: f64, jyx: f64, jyy: f64) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self::new(c(jxx), c(jxy), c(jyx), c(jyy))
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.jxx, self.jyx, self.jxy, self.jyy)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.jxx.conj(), self.jyx.conj(), self.jxy.conj(), self.jyy.conj())
    }

    pub fn scale(&self, k: c64) -> Self {
        Self::new(self.jxx * k, self.jxy * k, self.jyx * k, self.jyy * k)
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        JonesVector::new(self.jxx * v.ex + self.jxy * v.ey, self.jyx * v.ex + self.jyy * v.ey)
    }

    pub fn determinant(&self) -> c64 {
        self.jxx * self.jyy - self.jxy * self.jyx
    }

    /// Largest entry deviation of `J^dagger J` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint() * *self;
        [p.jxx - ONE, p.jxy, p.jyx, p.jyy - ONE]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    /// Retarder with fast axis at `theta` and retardance `retardance`,
    /// `R(theta) diag(1, e^{i retardance}) R(-theta)`.
    pub fn retarder(theta: f64, retardance: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let e = Complex64::from_polar(1.0, retardance);
        let re = |x: f64| Complex64::new(x, 0.0);
        Self::new(
            re(c * c) + e * (s * s),
            (ONE - e) * (c * s),
            (ONE - e) * (c * s),
            re(s * s) + e * (c * c),
        )
    }

    pub fn quarter_wave(theta: f64) -> Self {
        Self::retarder(theta, FRAC_PI_2)
    }

    /// Quarter/half/quarter wave-plate stack, applied in that order.
    pub fn retarder_stack(quarter_in: f64, half: f64, quarter_out: f64) -> Self {
        Self::quarter_wave(quarter_out) * hwp_matrix(HwpAngle::new(half)) * Self::quarter_wave(quarter_in)
    }

    /// FPC setting whose x and y eigen-inputs are both matched while the loop
    /// splits the pump 50/50, i.e. the `phi = pi/2` operating point.
    pub fn quadrature_point() -> Self {
        Self::new(ZERO, ONE, I, ZERO)
    }
}

impl Mul for JonesMatrix {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let a = self;
        Self::new(
            a.jxx * b.jxx + a.jxy * b.jyx,
            a.jxx * b.jxy + a.jxy * b.jyy,
            a.jyx * b.jxx + a.jyy * b.jyx,
            a.jyx * b.jxy + a.jyy * b.jyy,
        )
    }
}

/// Fast-axis orientation of the input half-wave plate, kept in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwpAngle(f64);

impl HwpAngle {
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(PI);
        if t >= PI {
            t = 0.0;
        }
        HwpAngle(t)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// `[[cos 2t, sin 2t], [sin 2t, -cos 2t]]`: mirrors linear polarization about the fast axis.
pub fn hwp_matrix(theta: HwpAngle) -> JonesMatrix {
    let (s, c) = (2.0 * theta.radians()).sin_cos();
    JonesMatrix::real(c, s, s, -c)
}

/// Half-wave plate whose retardance is off by `retardance_error` radians.
/// Equals [`hwp_matrix`] up to a global phase when the error is zero.
pub fn imperfect_hwp(theta: HwpAngle, retardance_error: f64) -> JonesMatrix {
    if retardance_error == 0.0 {
        return hwp_matrix(theta);
    }
    JonesMatrix::retarder(theta.radians(), PI + retardance_error)
}

/// Coupler split of the input pump: `(E/sqrt2, iE/sqrt2)`.
pub fn split_at_coupler(e_in: &JonesVector) -> Result<(JonesVector, JonesVector)> {
    let e = e_in.nonzero()?;
    let a = e.scale(Complex64::new(FRAC_1_SQRT_2, 0.0));
    let b = e.scale(Complex64::new(0.0, FRAC_1_SQRT_2));
    Ok((a, b))
}

/// Propagated field together with a flag raised for a lossy (non-unitary) FPC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagated {
    pub field: JonesVector,
    pub non_unitary: bool,
}

/// Clockwise pass: `Jc J1 E_a,in`.
pub fn propagate_cw(ea_in: &JonesVector, jc: &JonesMatrix) -> Propagated {
    Propagated {
        field: (*jc * LOOP_GEOMETRY).apply(ea_in),
        non_unitary: !jc.is_unitary(1e-12),
    }
}

/// Counter-clockwise pass: `J1 Jc^T E_b,in`.
pub fn propagate_ccw(eb_in: &JonesVector, jc: &JonesMatrix) -> Propagated {
    Propagated {
        field: (LOOP_GEOMETRY * jc.transpose()).apply(eb_in),
        non_unitary: !jc.is_unitary(1e-12),
    }
}

/// Coupler recombination into the reflected (`c`) and transmitted (`d`) ports.
pub fn recombine(ea: &JonesVector, eb: &JonesVector) -> (JonesVector, JonesVector) {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let ec = (ea.scale(I) + *eb).scale(h);
    let ed = (eb.scale(I) + *ea).scale(h);
    (ec, ed)
}

/// Pump fields at every stage of one round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopFields {
    pub ea: JonesVector,
    pub eb: JonesVector,
    pub ec: JonesVector,
    pub ed: JonesVector,
}

pub fn trace_loop(jc: &JonesMatrix, e_in: &JonesVector) -> Result<LoopFields> {
    let (a_in, b_in) = split_at_coupler(e_in)?;
    let ea = propagate_cw(&a_in, jc).field;
    let eb = propagate_ccw(&b_in, jc).field;
    let (ec, ed) = recombine(&ea, &eb);
    Ok(LoopFields { ea, eb, ec, ed })
}

/// Power transmission to port `d`, `|(Jxy + Jyx)/2|^2`. Independent of the input.
pub fn transmission(jc: &JonesMatrix) -> f64 {
    (0.5 * (jc.jxy + jc.jyx)).norm_sqr()
}

fn normalized_overlap(a: &JonesVector, b: &JonesVector) -> Result<f64> {
    let na = a.nonzero()?.norm_sqr();
    let nb = b.nonzero()?.norm_sqr();
    Ok((a.inner(b).norm_sqr() / (na * nb)).clamp(0.0, 1.0))
}

/// `1 - |<a,b>|^2 / (|a|^2 |b|^2)`: zero for identical polarizations, one for orthogonal.
pub fn mode_match_defect(ea: &JonesVector, eb: &JonesVector) -> Result<f64> {
    Ok(1.0 - normalized_overlap(ea, eb)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchCondition {
    /// `Jxy + Jyx = 0`: the loop reflects everything and the pumps match.
    ReflectorMatch,
    /// `Jxx = Jyy = 0` and `Jxy = Jyx`: the loop transmits everything.
    TransmitterMatch,
    /// `Jxx Ex^2 - Jyy Ey^2 = (Jxy - Jyx) Ex Ey` for this particular input.
    InputMatched,
    Unmatched,
}

impl MatchCondition {
    pub fn is_matched(self) -> bool {
        self != MatchCondition::Unmatched
    }
}

/// Residual of the input-dependent matching relation for a normalized input.
pub fn input_match_residual(jc: &JonesMatrix, e_in: &JonesVector) -> Result<f64> {
    let e = e_in.normalized()?;
    Ok((jc.jxx * e.ex * e.ex - jc.jyy * e.ey * e.ey - (jc.jxy - jc.jyx) * e.ex * e.ey).norm())
}

pub fn check_match_conditions(jc: &JonesMatrix, e_in: &JonesVector) -> Result<MatchCondition> {
    check_match_conditions_with_tol(jc, e_in, MATCH_TOL)
}

pub fn check_match_conditions_with_tol(jc: &JonesMatrix, e_in: &JonesVector, tol: f64) -> Result<MatchCondition> {
    if (jc.jxy + jc.jyx).norm() < tol {
        return Ok(MatchCondition::ReflectorMatch);
    }
    if jc.jxx.norm() < tol && jc.jyy.norm() < tol && (jc.jxy - jc.jyx).norm() < tol {
        return Ok(MatchCondition::TransmitterMatch);
    }
    if input_match_residual(jc, e_in)? < tol {
        return Ok(MatchCondition::InputMatched);
    }
    Ok(MatchCondition::Unmatched)
}

/// Input polarization `(Ey*, -Ex*)`, orthogonal to `e_in` in the Hermitian sense.
pub fn orthogonal_input(e_in: &JonesVector) -> Result<JonesVector> {
    let e = e_in.nonzero()?;
    Ok(JonesVector::new(e.ey.conj(), -e.ex.conj()))
}

/// Solves the input-dependent matching relation for `Ey/Ex` and returns a
/// normalized input that matches the two pumps, if one exists.
pub fn matched_input(jc: &JonesMatrix) -> Option<JonesVector> {
    // Jyy r^2 + (Jxy - Jyx) r - Jxx = 0 with r = Ey/Ex.
    let a = jc.jyy;
    let b = jc.jxy - jc.jyx;
    let c = -jc.jxx;
    let candidate = if a.norm() < 1e-14 {
        if b.norm() < 1e-14 {
            // Jxx Ex^2 = 0: pure y input works when Jxx vanishes.
            return if c.norm() < 1e-14 {
                Some(JonesVector::real(1.0, 0.0))
            } else {
                Some(JonesVector::real(0.0, 1.0))
            };
        }
        JonesVector::new(ONE, -c / b)
    } else {
        let disc = (b * b - 4.0 * a * c).sqrt();
        // Pick the root with the larger-magnitude denominator for stability.
        let q = if (b.conj() * disc).re >= 0.0 {
            -0.5 * (b + disc)
        } else {
            -0.5 * (b - disc)
        };
        let r = if q.norm() > 1e-300 { c / q } else { q / a };
        JonesVector::new(ONE, r)
    };
    candidate.normalized().ok()
}

/// Polarization overlap of the two pumps where they meet again at the coupler,
/// used as the weight of the coherent component of the pair state.
pub fn effective_purity(jc: &JonesMatrix, e_in: &JonesVector) -> Result<f64> {
    let f = trace_loop(jc, e_in)?;
    normalized_overlap(&f.ea, &f.eb)
}

/// Phase difference of the returning pumps, defined so that a matched loop
/// transmits `(1 - cos phi)/2` of the pump. `None` for orthogonal pumps.
pub fn loop_phase(ea: &JonesVector, eb: &JonesVector) -> Option<LoopPhase> {
    let k = ea.inner(eb);
    if ea.norm_sqr() == 0.0 || k.norm() < 1e-12 * (ea.norm_sqr() * eb.norm_sqr()).sqrt() {
        return None;
    }
    // Parallel fields satisfy eb = i e^{i phi} ea.
    Some(LoopPhase::new((-I * k).arg()))
}

/// Summary of the pump configuration used by the counting scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopReport {
    pub condition: MatchCondition,
    pub transmission: f64,
    pub purity: f64,
    pub loop_phase: Option<f64>,
    pub defect: f64,
    pub non_unitary: bool,
}

pub fn analyze_loop(jc: &JonesMatrix, e_in: &JonesVector) -> Result<LoopReport> {
    let f = trace_loop(jc, e_in)?;
    let purity = normalized_overlap(&f.ea, &f.eb)?;
    Ok(LoopReport {
        condition: check_match_conditions(jc, e_in)?,
        transmission: transmission(jc),
        purity,
        loop_phase: loop_phase(&f.ea, &f.eb).map(LoopPhase::radians),
        defect: 1.0 - purity,
        non_unitary: !jc.is_unitary(1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &JonesVector, b: &JonesVector, tol: f64) -> bool {
        (a.ex - b.ex).norm() < tol && (a.ey - b.ey).norm() < tol
    }

    #[test]
    fn split_examples() {
        let (a, b) = split_at_coupler(&JonesVector::real(1.0, 0.0)).unwrap();
        assert!(close(&a, &JonesVector::real(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(close(&b, &JonesVector::new(Complex64::new(0.0, FRAC_1_SQRT_2), ZERO), 1e-15));

        let e = JonesVector::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2));
        let (a, b) = split_at_coupler(&e).unwrap();
        assert!(close(&a, &JonesVector::new(Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5)), 1e-15));
        assert!(close(&b, &JonesVector::new(Complex64::new(0.0, 0.5), Complex64::new(-0.5, 0.0)), 1e-15));

        assert!(matches!(split_at_coupler(&JonesVector::real(0.0, 0.0)), Err(Error::ZeroField)));
    }

    #[test]
    fn clockwise_examples() {
        let out = propagate_cw(&JonesVector::real(FRAC_1_SQRT_2, 0.0), &JonesMatrix::IDENTITY);
        assert!(close(&out.field, &JonesVector::real(-FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(!out.non_unitary);

        let v = JonesVector::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let out = propagate_cw(&v, &LOOP_GEOMETRY);
        assert!(close(&out.field, &v, 1e-15));

        let jc = JonesMatrix::new(Complex64::from_polar(1.0, 0.3), ZERO, ZERO, Complex64::from_polar(1.0, -0.7));
        let e = JonesVector::new(Complex64::new(0.6, 0.1), Complex64::new(-0.2, 0.7));
        let (a, _) = split_at_coupler(&e).unwrap();
        let out = propagate_cw(&a, &jc).field;
        assert_abs_diff_eq!((out.ey - jc.jyy * e.ey * FRAC_1_SQRT_2).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lossy_fpc_is_flagged_but_propagated() {
        let jc = JonesMatrix::real(0.5, 0.0, 0.0, 0.5);
        let out = propagate_cw(&JonesVector::real(1.0, 0.0), &jc);
        assert!(out.non_unitary);
        assert_abs_diff_eq!(out.field.ex.re, -0.5);
    }

    #[test]
    fn counter_clockwise_component_form() {
        let jc = JonesMatrix::retarder_stack(0.3, 1.1, -0.4);
        let e = JonesVector::new(Complex64::new(0.3, -0.2), Complex64::new(0.5, 0.6));
        let (_, b) = split_at_coupler(&e).unwrap();
        let eb = propagate_ccw(&b, &jc).field;
        let expect_x = I * (-jc.jxx * e.ex - jc.jyx * e.ey) * FRAC_1_SQRT_2;
        let expect_y = I * (jc.jxy * e.ex + jc.jyy * e.ey) * FRAC_1_SQRT_2;
        assert_abs_diff_eq!((eb.ex - expect_x).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((eb.ey - expect_y).norm(), 0.0, epsilon = 1e-15);

        let plain = propagate_ccw(&b, &JonesMatrix::IDENTITY).field;
        assert!(close(&plain, &LOOP_GEOMETRY.apply(&b), 1e-15));
    }

    #[test]
    fn identity_loop_reflects() {
        let f = trace_loop(&JonesMatrix::IDENTITY, &JonesVector::real(0.6, 0.8)).unwrap();
        assert_abs_diff_eq!(f.ed.norm_sqr(), 0.0, epsilon = 1e-30);
        assert_abs_diff_eq!(f.ec.norm_sqr(), 1.0, epsilon = 1e-15);
        let (c, d) = recombine(&JonesVector::real(0.0, 0.0), &JonesVector::real(0.0, 0.0));
        assert_eq!(c.norm_sqr() + d.norm_sqr(), 0.0);
    }

    #[test]
    fn exit_field_closed_form() {
        let jc = JonesMatrix::retarder_stack(0.2, 0.9, 1.3);
        let e = JonesVector::new(Complex64::new(0.1, 0.4), Complex64::new(-0.7, 0.2));
        let f = trace_loop(&jc, &e).unwrap();
        let k = 0.5 * (jc.jxy + jc.jyx);
        assert!(close(&f.ed, &JonesVector::new(k * e.ey, -k * e.ex), 1e-15));
    }

    #[test]
    fn symmetric_retarder_transmission() {
        let t = PI / 4.0;
        let jc = JonesMatrix::new(
            Complex64::new(t.cos(), 0.0),
            Complex64::new(0.0, t.sin()),
            Complex64::new(0.0, t.sin()),
            Complex64::new(t.cos(), 0.0),
        );
        let e = JonesVector::real(1.0, 0.0);
        let f = trace_loop(&jc, &e).unwrap();
        assert_abs_diff_eq!(f.ed.norm_sqr() / e.norm_sqr(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(transmission(&jc), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn transmission_examples() {
        assert_eq!(transmission(&JonesMatrix::IDENTITY), 0.0);
        let h = Complex64::new(0.0, FRAC_1_SQRT_2);
        let jc = JonesMatrix::new(Complex64::new(FRAC_1_SQRT_2, 0.0), h, h, Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_abs_diff_eq!(transmission(&jc), 0.5, epsilon = 1e-15);
        let anti = JonesMatrix::real(0.0, 1.0, -1.0, 0.0);
        assert_eq!(transmission(&anti), 0.0);
    }

    #[test]
    fn defect_examples() {
        let a = JonesVector::new(Complex64::new(0.3, 0.1), Complex64::new(0.2, -0.5));
        assert_abs_diff_eq!(mode_match_defect(&a, &a).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            mode_match_defect(&JonesVector::real(1.0, 0.0), &JonesVector::real(0.0, 1.0)).unwrap(),
            1.0
        );
        assert!(mode_match_defect(&a, &JonesVector::real(0.0, 0.0)).is_err());
    }

    #[test]
    fn constructed_match_has_zero_defect() {
        let jc = JonesMatrix::retarder_stack(0.41, -0.2, 1.7);
        let e = matched_input(&jc).unwrap();
        assert!(input_match_residual(&jc, &e).unwrap() < 1e-12);
        let f = trace_loop(&jc, &e).unwrap();
        assert!(mode_match_defect(&f.ea, &f.eb).unwrap() < 1e-10);
    }

    #[test]
    fn condition_examples() {
        let e = JonesVector::real(0.6, 0.8);
        assert_eq!(
            check_match_conditions(&JonesMatrix::IDENTITY, &e).unwrap(),
            MatchCondition::ReflectorMatch
        );
        let swap = JonesMatrix::real(0.0, 1.0, 1.0, 0.0).scale(Complex64::from_polar(1.0, 0.7));
        assert_eq!(check_match_conditions(&swap, &e).unwrap(), MatchCondition::TransmitterMatch);
        let f = trace_loop(&swap, &e).unwrap();
        assert_abs_diff_eq!(f.ec.norm_sqr(), 0.0, epsilon = 1e-30);

        let jc = JonesMatrix::retarder_stack(0.3, 0.5, 1.1);
        let e = JonesVector::new(Complex64::new(0.2, 0.5), Complex64::new(0.7, -0.1));
        assert_eq!(check_match_conditions(&jc, &e).unwrap(), MatchCondition::Unmatched);
        let f = trace_loop(&jc, &e).unwrap();
        assert!(mode_match_defect(&f.ea, &f.eb).unwrap() > 1e-6);
    }

    #[test]
    fn orthogonal_input_examples() {
        let o = orthogonal_input(&JonesVector::real(1.0, 0.0)).unwrap();
        assert!(close(&o, &JonesVector::real(0.0, -1.0), 1e-15));
        let o = orthogonal_input(&JonesVector::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).unwrap();
        assert!(close(&o, &JonesVector::real(FRAC_1_SQRT_2, -FRAC_1_SQRT_2), 1e-15));
        let e = JonesVector::new(Complex64::new(0.3, 0.4), Complex64::new(-0.1, 0.8));
        assert_abs_diff_eq!(orthogonal_input(&e).unwrap().inner(&e).norm(), 0.0, epsilon = 1e-16);
        assert!(orthogonal_input(&JonesVector::real(0.0, 0.0)).is_err());
    }

    #[test]
    fn orthogonal_input_stays_matched() {
        let jc = JonesMatrix::retarder_stack(1.0, 0.25, -0.6);
        let e = matched_input(&jc).unwrap();
        let o = orthogonal_input(&e).unwrap();
        let f = trace_loop(&jc, &o).unwrap();
        assert!(mode_match_defect(&f.ea, &f.eb).unwrap() < 1e-9);
    }

    #[test]
    fn hwp_examples() {
        assert_eq!(hwp_matrix(HwpAngle::new(0.0)), JonesMatrix::real(1.0, 0.0, 0.0, -1.0));
        let x = JonesVector::real(1.0, 0.0);
        let v = hwp_matrix(HwpAngle::new(PI / 8.0)).apply(&x);
        assert!(close(&v, &JonesVector::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2), 1e-15));
        let v = hwp_matrix(HwpAngle::new(PI / 4.0)).apply(&x);
        assert!(close(&v, &JonesVector::real(0.0, 1.0), 1e-15));
        assert_abs_diff_eq!(HwpAngle::from_degrees(202.5).radians(), (22.5f64).to_radians(), epsilon = 1e-15);
    }

    #[test]
    fn imperfect_hwp_reduces_to_ideal() {
        let t = HwpAngle::from_degrees(30.0);
        let ideal = hwp_matrix(t);
        let general = JonesMatrix::retarder(t.radians(), PI);
        // Same up to global phase: retarder(theta, pi) == hwp exactly here.
        assert!((general.jxx - ideal.jxx).norm() < 1e-15 && (general.jxy - ideal.jxy).norm() < 1e-15);
        assert!(imperfect_hwp(t, 0.05).is_unitary(1e-12));
    }

    #[test]
    fn purity_examples() {
        let jc = JonesMatrix::quadrature_point();
        let x = JonesVector::real(1.0, 0.0);
        assert_abs_diff_eq!(effective_purity(&jc, &x).unwrap(), 1.0, epsilon = 1e-15);
        // 45 degree pump: the returning pumps are orthogonal circular states.
        let diag = hwp_matrix(HwpAngle::from_degrees(22.5)).apply(&x);
        assert_abs_diff_eq!(effective_purity(&jc, &diag).unwrap(), 0.0, epsilon = 1e-15);
        let rep = analyze_loop(&jc, &diag).unwrap();
        assert_eq!(rep.loop_phase, None);
        assert_abs_diff_eq!(rep.transmission, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn quadrature_point_phases() {
        let jc = JonesMatrix::quadrature_point();
        let fx = trace_loop(&jc, &JonesVector::real(1.0, 0.0)).unwrap();
        let fy = trace_loop(&jc, &JonesVector::real(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(loop_phase(&fx.ea, &fx.eb).unwrap().radians(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(loop_phase(&fy.ea, &fy.eb).unwrap().radians(), 3.0 * FRAC_PI_2, epsilon = 1e-15);
        // The 45/22.5/135 degree retarder stack realizes the same operating point.
        let stack = JonesMatrix::retarder_stack(45f64.to_radians(), 22.5f64.to_radians(), 135f64.to_radians());
        assert_abs_diff_eq!(stack.jxx.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(transmission(&stack), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn matched_transmission_follows_loop_phase() {
        let jc = JonesMatrix::retarder_stack(0.7, -0.3, 0.2);
        let e = matched_input(&jc).unwrap();
        let f = trace_loop(&jc, &e).unwrap();
        let phi = loop_phase(&f.ea, &f.eb).unwrap().radians();
        assert_abs_diff_eq!(transmission(&jc), 0.5 * (1.0 - phi.cos()), epsilon = 1e-12);
    }
}
