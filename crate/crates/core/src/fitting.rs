//! Fits of stage-scan coincidence data to the broadband beat law
//!
//! `C(l) = A [1 - V sinc(sigma dtau) cos(dw dtau)]`, `dtau = 2 (l - l0) / c`,
//!
//! with the frequency difference `dw` held fixed.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::interference::{sinc, sinc_derivative, BeatCurve};
use crate::state::FrequencyPair;
use crate::SPEED_OF_LIGHT;

pub const MAX_ITERATIONS: usize = 200;
pub const RELATIVE_TOLERANCE: f64 = 1e-10;
/// Number of starting origins spread over one beat period.
pub const ORIGIN_STARTS: usize = 8;

/// Seconds of delay per millimetre of stage travel.
const DELAY_PER_MM: f64 = 2e-3 / SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatFitParams {
    /// Counts far from the dip.
    pub amplitude: f64,
    pub visibility: f64,
    /// Envelope scale in rad/s.
    pub sigma: f64,
    /// Stage position of zero delay in mm.
    pub origin_l0: f64,
    /// Held fixed during the fit, rad/s.
    pub fixed_freq_diff: f64,
}

impl BeatFitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) {
            return Err(Error::Config(format!("fit amplitude must be positive, got {}", self.amplitude)));
        }
        check_probability("visibility", self.visibility)?;
        Ok(())
    }

    fn vector(&self) -> Vector4<f64> {
        Vector4::new(self.amplitude, self.visibility, self.sigma, self.origin_l0)
    }

    fn with_vector(&self, v: &Vector4<f64>) -> Self {
        Self {
            amplitude: v[0],
            visibility: v[1].clamp(0.0, 1.0),
            sigma: v[2].abs(),
            origin_l0: v[3],
            fixed_freq_diff: self.fixed_freq_diff,
        }
    }

    /// Model value at stage position `l_mm`.
    pub fn model(&self, l_mm: f64) -> f64 {
        let x = DELAY_PER_MM * (l_mm - self.origin_l0);
        self.amplitude * (1.0 - self.visibility * sinc(self.sigma * x) * (self.fixed_freq_diff * x).cos())
    }

    /// Partial derivatives of the model with respect to
    /// `(amplitude, visibility, sigma, origin_l0)`.
    pub fn gradient(&self, l_mm: f64) -> [f64; 4] {
        let (a, v, s, w) = (self.amplitude, self.visibility, self.sigma, self.fixed_freq_diff);
        let x = DELAY_PER_MM * (l_mm - self.origin_l0);
        let env = sinc(s * x);
        let denv = sinc_derivative(s * x);
        let (sn, cs) = (w * x).sin_cos();
        let d_dx = -a * v * (s * denv * cs - env * w * sn);
        [1.0 - v * env * cs, -a * env * cs, -a * v * denv * x * cs, -DELAY_PER_MM * d_dx]
    }

    /// Stage travel of one beat period in mm.
    pub fn period_mm(&self) -> f64 {
        std::f64::consts::TAU / (self.fixed_freq_diff * DELAY_PER_MM)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: BeatFitParams,
    pub visibility_std_err: f64,
    /// Standard errors of `(amplitude, visibility, sigma, origin_l0)`.
    pub std_errs: [f64; 4],
    /// Period of the data from its spectrum when the scan spans two periods,
    /// otherwise the model period.
    pub fitted_period: f64,
    /// `2 pi / (w_i - w_s)` of delay expressed as stage travel in mm.
    pub model_period: f64,
    pub residual_rms: f64,
    /// Weighted residual sum of squares per degree of freedom.
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitReport {
    pub fn fidelity(&self) -> f64 {
        0.5 * (1.0 + self.params.visibility)
    }
}

struct Problem<'a> {
    l: &'a [f64],
    c: &'a [f64],
    w: Vec<f64>,
}

impl Problem<'_> {
    fn cost(&self, p: &BeatFitParams) -> f64 {
        self.l
            .iter()
            .zip(self.c)
            .zip(&self.w)
            .map(|((&l, &c), &w)| {
                let r = c - p.model(l);
                w * r * r
            })
            .sum()
    }

    fn normal_equations(&self, p: &BeatFitParams) -> (Matrix4<f64>, Vector4<f64>) {
        let mut h = Matrix4::zeros();
        let mut g = Vector4::zeros();
        for ((&l, &c), &w) in self.l.iter().zip(self.c).zip(&self.w) {
            let j = Vector4::from(p.gradient(l));
            let r = c - p.model(l);
            h += j * j.transpose() * w;
            g += j * (w * r);
        }
        (h, g)
    }
}

struct Solution {
    params: BeatFitParams,
    cost: f64,
    iterations: usize,
    converged: bool,
}

/// Damped Gauss-Newton with Marquardt's diagonal scaling.
fn levenberg_marquardt(problem: &Problem, start: BeatFitParams) -> Solution {
    let mut p = start;
    let mut cost = problem.cost(&p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = cost == 0.0;
    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let (h, g) = problem.normal_equations(&p);
        let mut accepted = false;
        for _ in 0..60 {
            let mut damped = h;
            for k in 0..4 {
                damped[(k, k)] += lambda * h[(k, k)].max(1e-300);
            }
            let Some(step) = damped.cholesky().map(|ch| ch.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p.with_vector(&(p.vector() + step));
            let trial_cost = problem.cost(&trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let change = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                converged = change < RELATIVE_TOLERANCE || cost == 0.0;
                break;
            }
            lambda *= 2.0;
        }
        if !accepted {
            // No downhill step exists at any damping: a stationary point.
            converged = true;
        }
    }
    Solution {
        params: p,
        cost,
        iterations,
        converged,
    }
}

/// Fits the beat law to `data`. The counts in `data` are raw coincidence
/// numbers; points are weighted by `1 / max(C, 1)`.
pub fn fit_beat(data: &BeatCurve, freq: &FrequencyPair, init: Option<BeatFitParams>) -> Result<FitReport> {
    let l = data.positions();
    let c = data.values();
    let n = l.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!("fit needs at least 8 points, got {n}")));
    }
    let dw = freq.difference().abs();
    let model_period = std::f64::consts::TAU / (dw * DELAY_PER_MM);
    let (lmin, lmax) = min_max(&l);
    if lmax - lmin < model_period {
        return Err(Error::InsufficientData(format!(
            "scan spans {:.4} mm, less than one beat period of {:.4} mm",
            lmax - lmin,
            model_period
        )));
    }
    let problem = Problem {
        l: &l,
        c: &c,
        w: c.iter().map(|&x| 1.0 / x.max(1.0)).collect(),
    };
    let guess = match init {
        Some(p) => BeatFitParams { fixed_freq_diff: dw, ..p },
        None => initial_guess(&l, &c, dw, lmax - lmin),
    };

    let mut best: Option<Solution> = None;
    for k in 0..ORIGIN_STARTS {
        let offset = (k as f64 / ORIGIN_STARTS as f64 - 0.5) * model_period;
        let start = BeatFitParams {
            origin_l0: guess.origin_l0 + offset,
            ..guess
        };
        let sol = levenberg_marquardt(&problem, start);
        let better = match &best {
            None => true,
            Some(b) => {
                sol.cost < b.cost || (sol.cost == b.cost && sol.params.origin_l0 < b.params.origin_l0)
            }
        };
        if better {
            best = Some(sol);
        }
    }
    let sol = best.expect("at least one start");
    let dof = (n - 4) as f64;
    let s2 = sol.cost / dof;
    let (h, _) = problem.normal_equations(&sol.params);
    let std_errs = match h.try_inverse() {
        Some(inv) => [0, 1, 2, 3].map(|k| (s2 * inv[(k, k)]).max(0.0).sqrt()),
        None => [f64::INFINITY; 4],
    };
    let residual_rms = (l.iter().zip(&c).map(|(&x, &y)| (y - sol.params.model(x)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let fitted_period = extract_period(data).unwrap_or(model_period);
    Ok(FitReport {
        params: sol.params,
        visibility_std_err: std_errs[1],
        std_errs,
        fitted_period,
        model_period,
        residual_rms,
        reduced_chi2: s2,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

fn initial_guess(l: &[f64], c: &[f64], dw: f64, span: f64) -> BeatFitParams {
    let amplitude = (c.iter().sum::<f64>() / c.len() as f64).max(f64::MIN_POSITIVE);
    let period = std::f64::consts::TAU / (dw * DELAY_PER_MM);
    let (imin, _) = c
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let l0 = l[imin];
    // Contrast over the period around the deepest point.
    let central: Vec<f64> = l
        .iter()
        .zip(c)
        .filter(|(&x, _)| (x - l0).abs() <= 0.5 * period)
        .map(|(_, &y)| y)
        .collect();
    let (lo, hi) = min_max(&central);
    let visibility = if hi + lo > 0.0 { ((hi - lo) / (hi + lo)).clamp(0.0, 1.0) } else { 0.0 };
    // Without a configured bandwidth, start from an envelope that has
    // dropped by a few percent at the scan edge.
    let sigma = 0.5 / (DELAY_PER_MM * 0.5 * span);
    BeatFitParams {
        amplitude,
        visibility,
        sigma,
        origin_l0: l0,
        fixed_freq_diff: dw,
    }
}

/// Least-squares spectral power of `y` at frequency `f` (cycles/mm), with a
/// free constant term.
fn periodogram_power(l: &[f64], y: &[f64], f: f64) -> f64 {
    let w = std::f64::consts::TAU * f;
    let n = l.len() as f64;
    let (mut sc, mut ss, mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut sy = 0.0;
    for (&x, &v) in l.iter().zip(y) {
        let (s, c) = (w * x).sin_cos();
        sc += c;
        ss += s;
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += v * c;
        sys += v * s;
        sy += v;
    }
    // Normal equations for (a, b, k) in a cos + b sin + k.
    let m = nalgebra::Matrix3::new(scc, scs, sc, scs, sss, ss, sc, ss, n);
    let rhs = nalgebra::Vector3::new(syc, sys, sy);
    match m.lu().solve(&rhs) {
        Some(coef) => coef.dot(&rhs) - sy * sy / n,
        None => 0.0,
    }
}

/// Dominant period of the mean-subtracted curve in mm.
pub fn extract_period(data: &BeatCurve) -> Result<f64> {
    let l = data.positions();
    let y = data.values();
    let n = l.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!("period extraction needs at least 8 points, got {n}")));
    }
    let (lmin, lmax) = min_max(&l);
    let span = lmax - lmin;
    let mean = y.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mut sorted = l.clone();
    sorted.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).collect();
    if gaps.is_empty() || span <= 0.0 {
        return Err(Error::InsufficientData("stage positions do not span a range".into()));
    }
    gaps.sort_by(f64::total_cmp);
    let nyquist = 0.5 / gaps[gaps.len() / 2];
    let f_min = 1.0 / span;
    let df = 0.25 / span;
    let steps = ((nyquist - f_min) / df).floor() as usize;
    let (best_k, _) = (0..=steps)
        .map(|k| (k, periodogram_power(&l, &y, f_min + k as f64 * df)))
        .fold((0, f64::NEG_INFINITY), |acc, (k, p)| if p > acc.1 { (k, p) } else { acc });
    // Golden-section refinement between the neighbouring grid points.
    let (mut a, mut b) = (f_min + (best_k as f64 - 1.0).max(0.0) * df, f_min + (best_k + 1) as f64 * df);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut p1 = periodogram_power(&l, &y, x1);
    let mut p2 = periodogram_power(&l, &y, x2);
    for _ in 0..100 {
        if p1 > p2 {
            b = x2;
            x2 = x1;
            p2 = p1;
            x1 = b - g * (b - a);
            p1 = periodogram_power(&l, &y, x1);
        } else {
            a = x1;
            x1 = x2;
            p1 = p2;
            x2 = a + g * (b - a);
            p2 = periodogram_power(&l, &y, x2);
        }
        if b - a < 1e-12 * b {
            break;
        }
    }
    let period = 2.0 / (a + b);
    if period > 0.5 * span {
        return Err(Error::InsufficientData(format!(
            "dominant period {period:.4} mm exceeds half the scan span {span:.4} mm"
        )));
    }
    Ok(period)
}

/// `F = (1 + V) / 2`.
pub fn fidelity_from_visibility(v: f64) -> Result<f64> {
    check_probability("visibility", v)?;
    Ok((1.0 + v) / 2.0)
}

/// Weighted straight-line fit of `ln y` against `ln x`. Returns the slope and
/// its standard error. Each point carries the standard deviation `sy` of `y`,
/// which maps to `sy / y` in log space.
pub fn loglog_slope(x: &[f64], y: &[f64], sy: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64, f64)> = x
        .iter()
        .zip(y)
        .zip(sy)
        .filter(|((&a, &b), _)| a > 0.0 && b > 0.0)
        .map(|((&a, &b), &s)| (a.ln(), b.ln(), (b / s.max(f64::MIN_POSITIVE)).powi(2)))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "log-log regression needs 3 positive points, got {}",
            pts.len()
        )));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let chi2: f64 = pts.iter().map(|p| p.2 * (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let scale = (chi2 / (pts.len() - 2) as f64).max(1.0);
    Ok((slope, (scale / sxx).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interference::{multimode_p2, BeatPoint, Delay, FilterShape, FilterSpectrum};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn pair() -> FrequencyPair {
        FrequencyPair::from_pump_and_difference(1538.2, 1.58e12).unwrap()
    }

    fn synthetic(v: f64, sigma: f64, amp: f64, l0: f64, n: usize, span: f64) -> BeatCurve {
        let f = pair();
        let filt = FilterSpectrum::new(FilterShape::Square, sigma, 0.0).unwrap();
        BeatCurve::new(
            (0..n)
                .map(|i| {
                    let l = -0.5 * span + span * i as f64 / (n - 1) as f64;
                    BeatPoint {
                        delta_l_mm: l,
                        p2: amp * multimode_p2(Delay::from_stage_mm(l - l0), &f, v, &filt).unwrap(),
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(fidelity_from_visibility(0.95).unwrap(), 0.975);
        assert_eq!(fidelity_from_visibility(1.0).unwrap(), 1.0);
        assert_eq!(fidelity_from_visibility(0.0).unwrap(), 0.5);
        assert!(fidelity_from_visibility(1.1).is_err());
    }

    #[test]
    fn model_matches_multimode_law() {
        let p = BeatFitParams {
            amplitude: 3.0,
            visibility: 0.8,
            sigma: TAU * 1.09e11,
            origin_l0: 0.01,
            fixed_freq_diff: pair().difference(),
        };
        let filt = FilterSpectrum::new(FilterShape::Square, p.sigma, 0.0).unwrap();
        for l in [-0.2, 0.0, 0.01, 0.137] {
            let law = multimode_p2(Delay::from_stage_mm(l - 0.01), &pair(), 0.8, &filt).unwrap();
            assert_abs_diff_eq!(p.model(l), 3.0 * law, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.period_mm(), pair().beat_period_mm(), epsilon = 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = BeatFitParams {
            amplitude: 1200.0,
            visibility: 0.93,
            sigma: TAU * 1.2e11,
            origin_l0: 0.004,
            fixed_freq_diff: pair().difference(),
        };
        let steps = [0.1, 1e-5, 1e8, 1e-6];
        for l in [-0.13, -0.02, 0.031, 0.05, 0.2] {
            let g = p.gradient(l);
            for k in 0..4 {
                let mut hi = p.vector();
                let mut lo = p.vector();
                hi[k] += steps[k];
                lo[k] -= steps[k];
                let fd = (p.with_vector(&hi).model(l) - p.with_vector(&lo).model(l)) / (2.0 * steps[k]);
                let scale = g[k].abs().max(1e-9 * p.amplitude / p.vector()[k].abs());
                assert!((fd - g[k]).abs() <= 1e-6 * scale, "param {k} at {l}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let sigma = TAU * 1.09e11;
        let data = synthetic(0.95, sigma, 1000.0, 0.003, 60, 0.6);
        let init = BeatFitParams {
            amplitude: 1150.0,
            visibility: 0.8,
            sigma: 0.8 * sigma,
            origin_l0: 0.003 + 0.01,
            fixed_freq_diff: 0.0,
        };
        let r = fit_beat(&data, &pair(), Some(init)).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.params.visibility, 0.95, epsilon = 1e-6);
        assert_abs_diff_eq!(r.params.sigma / sigma, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.params.origin_l0, 0.003, epsilon = 1e-7);
        assert_abs_diff_eq!(r.params.amplitude / 1000.0, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.fidelity(), 0.975, epsilon = 1e-6);
        assert_abs_diff_eq!(r.fitted_period / 0.0948710, 1.0, epsilon = 2e-3);
    }

    #[test]
    fn noiseless_round_trip_without_guess() {
        let sigma = TAU * 1.09e11;
        let data = synthetic(0.95, sigma, 500.0, -0.01, 80, 0.6);
        let r = fit_beat(&data, &pair(), None).unwrap();
        assert_abs_diff_eq!(r.params.visibility, 0.95, epsilon = 1e-6);
        assert_abs_diff_eq!(r.params.sigma / sigma, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn flat_data_has_no_visibility() {
        let data = synthetic(0.0, TAU * 1e11, 100.0, 0.0, 30, 0.3);
        let r = fit_beat(&data, &pair(), None).unwrap();
        assert!(r.params.visibility < 1e-6);
    }

    #[test]
    fn insufficient_data() {
        let data = synthetic(0.9, TAU * 1e11, 100.0, 0.0, 5, 0.3);
        assert!(fit_beat(&data, &pair(), None).is_err());
        let narrow = synthetic(0.9, TAU * 1e11, 100.0, 0.0, 20, 0.05);
        assert!(fit_beat(&narrow, &pair(), None).is_err());
        assert!(extract_period(&narrow).is_err());
    }

    #[test]
    fn period_examples() {
        let data = synthetic(0.95, 1.0, 1.0, 0.0, 61, 0.6);
        assert_abs_diff_eq!(extract_period(&data).unwrap(), 0.0948710, epsilon = 1e-7);
        // The filter envelope pulls the single-tone estimate by about 0.1%.
        let data = synthetic(0.95, TAU * 1.09e11, 1.0, 0.0, 61, 0.6);
        assert_abs_diff_eq!(extract_period(&data).unwrap() / 0.0948710, 1.0, epsilon = 2e-3);
        let f2 = FrequencyPair::from_pump_and_difference(1538.2, 3.16e12).unwrap();
        let filt = FilterSpectrum::new(FilterShape::Square, 1.0, 0.0).unwrap();
        let pts = (0..121)
            .map(|i| {
                let l = -0.3 + 0.005 * i as f64;
                BeatPoint {
                    delta_l_mm: l,
                    p2: multimode_p2(Delay::from_stage_mm(l), &f2, 0.9, &filt).unwrap(),
                }
            })
            .collect();
        let half = extract_period(&BeatCurve::new(pts).unwrap()).unwrap();
        assert_abs_diff_eq!(half, 0.0948710 / 2.0, epsilon = 5e-5);
    }

    #[test]
    fn period_ignores_scale_and_offset() {
        let data = synthetic(0.9, TAU * 1.09e11, 1.0, 0.02, 61, 0.5);
        let scaled = BeatCurve::new(
            data.points
                .iter()
                .map(|p| BeatPoint {
                    delta_l_mm: p.delta_l_mm,
                    p2: 37.0 * p.p2 + 5.0,
                })
                .collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(extract_period(&data).unwrap(), extract_period(&scaled).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let x: Vec<f64> = (0..8).map(|i| 0.018 * 10f64.powf(i as f64 / 7.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        let s: Vec<f64> = y.iter().map(|v| 0.01 * v).collect();
        let (slope, err) = loglog_slope(&x, &y, &s).unwrap();
        assert_abs_diff_eq!(slope, 2.0, epsilon = 1e-12);
        assert!(err < 0.01);
    }
}
