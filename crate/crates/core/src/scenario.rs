//! Scenario files: TOML with one table per component and units in key names.
//!
//! ```toml
//! [pump]
//! power_mw = 0.1
//!
//! [scatter]
//! pair_coeff_per_mw2 = 1.3
//! raman_co_per_mw = 0.07
//!
//! [filter]
//! sigma_rad_s = 6.848671984825749e11
//!
//! [scan]
//! kind = "stage"
//! stage_start_mm = -0.142
//! stage_stop_mm = 0.142
//! stage_points = 40
//! n_gates = 400000000
//!
//! [run]
//! seed = 20081
//! ```
//!
//! Every table and key is optional and falls back to the defaults listed on
//! the structs below. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::counting::{BeatOptics, DetectorConfig, Experiment, HwpRouting, PumpConfig, Routing, ScatterModel};
use crate::error::{Error, Result};
use crate::interference::{FilterShape, FilterSpectrum};
use crate::polarization::{imperfect_hwp, HwpAngle, JonesMatrix, JonesVector};
use crate::state::FrequencyPair;

/// Environment variable naming the directory searched for scenario names.
pub const SCENARIO_DIR_ENV: &str = "SFL_SCENARIO_DIR";

/// Scenarios shipped with the crate, addressable by name.
pub const PRESETS: [(&str, &str); 3] = [
    ("fig4", include_str!("../scenarios/fig4.toml")),
    ("fig5", include_str!("../scenarios/fig5.toml")),
    ("fig6", include_str!("../scenarios/fig6.toml")),
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub pump: PumpSection,
    pub frequencies: FrequencySection,
    pub detector1: DetectorSection,
    pub detector2: DetectorSection,
    pub scatter: ScatterSection,
    pub filter: FilterSection,
    pub fpc: FpcSection,
    pub scan: ScanSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSection {
    pub power_mw: f64,
    pub rep_rate_hz: f64,
    pub pulse_width_s: f64,
    pub center_wavelength_nm: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        let p = PumpConfig::default();
        Self {
            power_mw: p.avg_power,
            rep_rate_hz: p.rep_rate,
            pulse_width_s: p.pulse_width,
            center_wavelength_nm: p.center_wavelength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencySection {
    /// Idler minus signal frequency, Hz. Signal and idler sit symmetrically
    /// around the pump.
    pub freq_diff_hz: f64,
}

impl Default for FrequencySection {
    fn default() -> Self {
        Self { freq_diff_hz: 1.58e12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub dark_prob_per_gate: f64,
    pub gate_width_s: f64,
    pub gate_rate_hz: f64,
    pub dead_time_s: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Self {
            efficiency: d.efficiency,
            dark_prob_per_gate: d.dark_prob_per_gate,
            gate_width_s: d.gate_width,
            gate_rate_hz: d.gate_rate,
            dead_time_s: d.dead_time,
        }
    }
}

impl DetectorSection {
    fn config(&self) -> DetectorConfig {
        DetectorConfig {
            efficiency: self.efficiency,
            dark_prob_per_gate: self.dark_prob_per_gate,
            gate_width: self.gate_width_s,
            gate_rate: self.gate_rate_hz,
            dead_time: self.dead_time_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterSection {
    /// Pairs per pulse per mW^2.
    pub pair_coeff_per_mw2: f64,
    /// Co-polarized Raman photons per pulse per band per mW.
    pub raman_co_per_mw: f64,
    /// Cross-polarized Raman photons per pulse per band per mW.
    pub raman_cross_per_mw: f64,
    pub co_polarized_selection: bool,
}

impl Default for ScatterSection {
    fn default() -> Self {
        let s = ScatterModel::default();
        Self {
            pair_coeff_per_mw2: s.pair_coeff,
            raman_co_per_mw: s.raman_coeff_co,
            raman_cross_per_mw: s.raman_coeff_cross,
            co_polarized_selection: s.co_polarized_selection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub shape: Option<FilterShape>,
    /// Envelope scale, rad/s. Takes precedence over the bandwidth.
    pub sigma_rad_s: Option<f64>,
    /// Full pass-band width, nm.
    pub bandwidth_nm: Option<f64>,
    /// Band centre used to convert the bandwidth, nm. Defaults to the signal band.
    pub center_nm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FpcModel {
    /// `[[0, 1], [i, 0]]`, matched for linear pumps with loop phase pi/2 for
    /// a horizontal pump.
    #[default]
    Quadrature,
    Identity,
    /// Quarter-, half- and quarter-wave plates at the given angles.
    Retarders,
    /// Explicit matrix from `matrix_re` and `matrix_im`.
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FpcSection {
    pub model: FpcModel,
    pub quarter_in_deg: f64,
    pub half_deg: f64,
    pub quarter_out_deg: f64,
    /// Rows `[[xx, xy], [yx, yy]]`.
    pub matrix_re: Option<[[f64; 2]; 2]>,
    pub matrix_im: Option<[[f64; 2]; 2]>,
    /// Angle of the half-wave plate rotating the horizontally polarized pump.
    pub input_hwp_deg: f64,
    /// Retardance error of that half-wave plate, rad.
    pub hwp_retardance_error_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKind {
    Hwp,
    Power,
    Stage,
}

impl std::str::FromStr for ScanKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hwp" => Ok(Self::Hwp),
            "power" => Ok(Self::Power),
            "stage" => Ok(Self::Stage),
            other => Err(Error::Config(format!("unknown scan kind '{other}', expected hwp, power or stage"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortRouting {
    DD,
    #[default]
    CD,
}

impl From<PortRouting> for HwpRouting {
    fn from(r: PortRouting) -> Self {
        match r {
            PortRouting::DD => HwpRouting::DD,
            PortRouting::CD => HwpRouting::CD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub kind: Option<ScanKind>,
    pub n_gates: u64,
    pub hwp_start_deg: f64,
    pub hwp_stop_deg: f64,
    pub hwp_step_deg: f64,
    /// Explicit power list; overrides the generated grid.
    pub powers_mw: Option<Vec<f64>>,
    pub power_start_mw: f64,
    pub power_stop_mw: f64,
    pub power_points: usize,
    /// Geometric spacing of the generated power grid.
    pub power_log_spacing: bool,
    /// Detector ports for the power scan.
    pub power_routing: PortRouting,
    pub stage_start_mm: f64,
    pub stage_stop_mm: f64,
    pub stage_points: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            kind: None,
            n_gates: 1_290_000,
            hwp_start_deg: 0.0,
            hwp_stop_deg: 180.0,
            hwp_step_deg: 11.25,
            powers_mw: None,
            power_start_mw: 0.018,
            power_stop_mw: 0.18,
            power_points: 8,
            power_log_spacing: true,
            power_routing: PortRouting::CD,
            stage_start_mm: -0.3,
            stage_stop_mm: 0.3,
            stage_points: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 20081 }
    }
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Loads a scenario by path, by name in `$SFL_SCENARIO_DIR` (with or
    /// without `.toml`), or by preset name.
    pub fn resolve(name: &str) -> Result<Self> {
        let direct = PathBuf::from(name);
        if direct.is_file() {
            return Self::load(&direct);
        }
        if let Ok(dir) = std::env::var(SCENARIO_DIR_ENV) {
            for candidate in [Path::new(&dir).join(name), Path::new(&dir).join(format!("{name}.toml"))] {
                if candidate.is_file() {
                    return Self::load(&candidate);
                }
            }
        }
        match PRESETS.iter().find(|(preset, _)| *preset == name) {
            Some((_, text)) => Self::from_toml_str(text),
            None => Err(Error::Config(format!(
                "scenario '{name}' is neither a file, an entry of ${SCENARIO_DIR_ENV}, nor a preset (fig4, fig5, fig6)"
            ))),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match PRESETS.iter().find(|(n, _)| *n == name) {
            Some((_, text)) => Self::from_toml_str(text),
            None => Err(Error::Config(format!("unknown preset '{name}'"))),
        }
    }

    /// Checks every unit-carrying value by building the domain objects.
    pub fn validate(&self) -> Result<()> {
        let exp = self.base_experiment();
        exp.pump.validate()?;
        exp.det1.validate(&exp.pump)?;
        exp.det2.validate(&exp.pump)?;
        exp.scatter.validate()?;
        self.beat_optics()?;
        self.fpc_matrix()?;
        if !self.fpc.hwp_retardance_error_rad.is_finite() {
            return Err(Error::Config("hwp_retardance_error_rad must be finite".into()));
        }
        if self.scan.n_gates == 0 {
            return Err(Error::Config("scan.n_gates must be positive".into()));
        }
        self.hwp_angles()?;
        self.powers()?;
        self.stage_positions()?;
        Ok(())
    }

    pub fn pump(&self) -> PumpConfig {
        PumpConfig {
            avg_power: self.pump.power_mw,
            rep_rate: self.pump.rep_rate_hz,
            pulse_width: self.pump.pulse_width_s,
            center_wavelength: self.pump.center_wavelength_nm,
        }
    }

    fn base_experiment(&self) -> Experiment {
        Experiment {
            pump: self.pump(),
            det1: self.detector1.config(),
            det2: self.detector2.config(),
            scatter: ScatterModel {
                pair_coeff: self.scatter.pair_coeff_per_mw2,
                raman_coeff_co: self.scatter.raman_co_per_mw,
                raman_coeff_cross: self.scatter.raman_cross_per_mw,
                co_polarized_selection: self.scatter.co_polarized_selection,
                ..Default::default()
            },
        }
    }

    /// Experiment with the loop state set by the FPC and the input HWP.
    pub fn experiment(&self) -> Result<Experiment> {
        self.base_experiment()
            .with_hwp(&self.fpc_matrix()?, self.input_hwp(), self.fpc.hwp_retardance_error_rad)
    }

    pub fn input_hwp(&self) -> HwpAngle {
        HwpAngle::from_degrees(self.fpc.input_hwp_deg)
    }

    /// Pump polarization entering the loop.
    pub fn input_polarization(&self) -> JonesVector {
        imperfect_hwp(self.input_hwp(), self.fpc.hwp_retardance_error_rad).apply(&JonesVector::real(1.0, 0.0))
    }

    pub fn fpc_matrix(&self) -> Result<JonesMatrix> {
        let f = &self.fpc;
        Ok(match f.model {
            FpcModel::Quadrature => JonesMatrix::quadrature_point(),
            FpcModel::Identity => JonesMatrix::IDENTITY,
            FpcModel::Retarders => JonesMatrix::retarder_stack(
                f.quarter_in_deg.to_radians(),
                f.half_deg.to_radians(),
                f.quarter_out_deg.to_radians(),
            ),
            FpcModel::Matrix => {
                let re = f
                    .matrix_re
                    .ok_or_else(|| Error::Config("fpc.model = \"matrix\" needs fpc.matrix_re".into()))?;
                let im = f.matrix_im.unwrap_or([[0.0; 2]; 2]);
                let c = |r: usize, k: usize| crate::c64::new(re[r][k], im[r][k]);
                let m = JonesMatrix::new(c(0, 0), c(0, 1), c(1, 0), c(1, 1));
                if m.determinant().norm() == 0.0 {
                    return Err(Error::Config("fpc matrix is singular".into()));
                }
                m
            }
        })
    }

    pub fn frequency_pair(&self) -> Result<FrequencyPair> {
        FrequencyPair::from_pump_and_difference(self.pump.center_wavelength_nm, self.frequencies.freq_diff_hz)
    }

    pub fn filter(&self) -> Result<FilterSpectrum> {
        let shape = self.filter.shape.unwrap_or(FilterShape::Square);
        let freq = self.frequency_pair()?;
        let sigma = match (self.filter.sigma_rad_s, self.filter.bandwidth_nm) {
            (Some(s), _) => s,
            (None, Some(bw)) => {
                let center = self
                    .filter
                    .center_nm
                    .unwrap_or(std::f64::consts::TAU * crate::SPEED_OF_LIGHT / freq.omega_s * 1e9);
                FilterSpectrum::sigma_from_bandwidth_nm(bw, center)
            }
            (None, None) => std::f64::consts::TAU * 1.09e11,
        };
        FilterSpectrum::new(shape, sigma, freq.omega_s)
    }

    pub fn beat_optics(&self) -> Result<BeatOptics> {
        Ok(BeatOptics {
            freq: self.frequency_pair()?,
            filter: self.filter()?,
        })
    }

    pub fn hwp_angles(&self) -> Result<Vec<HwpAngle>> {
        let s = &self.scan;
        grid("hwp", s.hwp_start_deg, s.hwp_stop_deg, s.hwp_step_deg)
            .map(|v| v.into_iter().map(HwpAngle::from_degrees).collect())
    }

    pub fn powers(&self) -> Result<Vec<f64>> {
        let s = &self.scan;
        let powers = match &s.powers_mw {
            Some(p) => p.clone(),
            None => {
                if s.power_points < 2 {
                    return Err(Error::Config("scan.power_points must be at least 2".into()));
                }
                if s.power_log_spacing && !(s.power_start_mw > 0.0 && s.power_stop_mw > 0.0) {
                    return Err(Error::Config("logarithmic power grid needs positive end points".into()));
                }
                let n = s.power_points;
                (0..n)
                    .map(|i| {
                        let t = i as f64 / (n - 1) as f64;
                        if s.power_log_spacing {
                            s.power_start_mw * (s.power_stop_mw / s.power_start_mw).powf(t)
                        } else {
                            s.power_start_mw + t * (s.power_stop_mw - s.power_start_mw)
                        }
                    })
                    .collect()
            }
        };
        if let Some(bad) = powers.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::Config(format!("scan power {bad} mW is not a valid power")));
        }
        Ok(powers)
    }

    pub fn power_routing(&self) -> Routing {
        match self.scan.power_routing {
            PortRouting::DD => Routing::DD,
            PortRouting::CD => Routing::CD,
        }
    }

    pub fn stage_positions(&self) -> Result<Vec<f64>> {
        let s = &self.scan;
        if s.stage_points < 2 || !(s.stage_stop_mm > s.stage_start_mm) {
            return Err(Error::Config("stage scan needs at least 2 points over an increasing range".into()));
        }
        let n = s.stage_points;
        Ok((0..n)
            .map(|i| s.stage_start_mm + (s.stage_stop_mm - s.stage_start_mm) * i as f64 / (n - 1) as f64)
            .collect())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Inclusive grid from `start` to `stop`; the end point is kept when it lies
/// within a millionth of a step of the grid.
fn grid(name: &str, start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::Config(format!("{name} grid needs a positive step and stop >= start")));
    }
    let n = ((stop - start) / step + 1e-6).floor() as usize + 1;
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_uses_defaults() {
        let s = ScenarioFile::from_toml_str("").unwrap();
        assert_eq!(s, ScenarioFile::default());
        assert_eq!(s.hwp_angles().unwrap().len(), 17);
        assert_eq!(s.stage_positions().unwrap().len(), 61);
        let p = s.powers().unwrap();
        assert_eq!(p.len(), 8);
        assert!((p[7] - 0.18).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioFile::from_toml_str("[pump]\npower = 0.1\n").is_err());
        assert!(ScenarioFile::from_toml_str("[pumps]\npower_mw = 0.1\n").is_err());
    }

    #[test]
    fn invalid_units_are_rejected() {
        assert!(ScenarioFile::from_toml_str("[detector1]\nefficiency = 1.5\n").is_err());
        assert!(ScenarioFile::from_toml_str("[pump]\npower_mw = -1.0\n").is_err());
        assert!(ScenarioFile::from_toml_str("[filter]\nsigma_rad_s = 0.0\n").is_err());
        assert!(ScenarioFile::from_toml_str("[detector2]\ngate_rate_hz = 1e9\n").is_err());
        assert!(ScenarioFile::from_toml_str("[fpc]\nmodel = \"matrix\"\n").is_err());
    }

    #[test]
    fn presets_load() {
        for (name, _) in PRESETS {
            let s = ScenarioFile::preset(name).unwrap();
            assert!(s.experiment().is_ok(), "{name}");
        }
        assert!(ScenarioFile::preset("fig7").is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let s = ScenarioFile::preset("fig6").unwrap();
        let again = ScenarioFile::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn bandwidth_sets_sigma() {
        let s = ScenarioFile::from_toml_str("[filter]\nbandwidth_nm = 0.9\ncenter_nm = 1544.5\n").unwrap();
        let f = s.filter().unwrap();
        assert!((f.sigma / (std::f64::consts::TAU * 1.131e11) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fpc_models() {
        let s = ScenarioFile::from_toml_str(
            "[fpc]\nmodel = \"matrix\"\nmatrix_re = [[0.0, 1.0], [1.0, 0.0]]\n",
        )
        .unwrap();
        assert_eq!(s.fpc_matrix().unwrap(), JonesMatrix::real(0.0, 1.0, 1.0, 0.0));
        let s = ScenarioFile::from_toml_str(
            "[fpc]\nmodel = \"retarders\"\nquarter_in_deg = 45.0\nhalf_deg = 22.5\nquarter_out_deg = 135.0\n",
        )
        .unwrap();
        let m = s.fpc_matrix().unwrap();
        let report = crate::polarization::analyze_loop(&m, &s.input_polarization()).unwrap();
        assert!((report.purity - 1.0).abs() < 1e-12);
        assert!((report.transmission - 0.5).abs() < 1e-12);
    }
}
