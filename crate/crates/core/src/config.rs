//! JSON run configuration. Wavelengths are nanometers and other quantities
//! use laboratory units; everything is converted to SI here.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{conjugate_wavelength, DetectionModel, RamanDensity, ScanMode, ScanPlan};
use crate::model::units::{megahertz, microwatt, nm, per_w_km, picosecond, ps_per_km_nm2, ps_per_nm_km};
use crate::model::{FiberSegment, InterferometerSpec, PumpPulse, SegmentKind, SpectralGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    pub fwhm_nm: f64,
    pub rep_rate_mhz: f64,
    pub avg_power_uw: f64,
    pub pulse_duration_ps: f64,
}

impl PumpConfig {
    pub fn to_pump(&self) -> Result<PumpPulse> {
        PumpPulse::from_lab_units(
            self.wavelength_nm,
            self.fwhm_nm,
            self.rep_rate_mhz,
            self.avg_power_uw,
            self.pulse_duration_ps,
        )
    }
}

impl Default for PumpConfig {
    fn default() -> Self {
        let p = PumpPulse::reference();
        Self {
            wavelength_nm: p.lambda_p0 * 1e9,
            fwhm_nm: p.fwhm_lambda * 1e9,
            rep_rate_mhz: p.rep_rate / megahertz(1.0),
            avg_power_uw: p.avg_power / microwatt(1.0),
            pulse_duration_ps: p.pulse_duration / picosecond(1.0),
        }
    }
}

/// A fiber segment; coefficients that do not belong to the kind are
/// rejected by validation rather than ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub kind: SegmentKind,
    pub length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion_slope_ps_km_nm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_per_w_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion_ps_nm_km: Option<f64>,
}

impl SegmentConfig {
    pub fn to_segment(&self) -> FiberSegment {
        FiberSegment {
            kind: self.kind,
            length: self.length_m,
            lambda0: self.lambda0_nm.map(nm),
            dispersion_slope: self.dispersion_slope_ps_km_nm2.map(ps_per_km_nm2),
            gamma: self.gamma_per_w_km.map(per_w_km),
            dispersion: self.dispersion_ps_nm_km.map(ps_per_nm_km),
        }
    }

    pub fn from_segment(s: &FiberSegment) -> Self {
        Self {
            kind: s.kind,
            length_m: s.length,
            lambda0_nm: s.lambda0.map(|x| x * 1e9),
            dispersion_slope_ps_km_nm2: s.dispersion_slope.map(|x| x / ps_per_km_nm2(1.0)),
            gamma_per_w_km: s.gamma.map(|x| x / per_w_km(1.0)),
            dispersion_ps_nm_km: s.dispersion.map(|x| x / ps_per_nm_km(1.0)),
        }
    }
}

pub fn segments_to_spec(segments: &[SegmentConfig]) -> InterferometerSpec {
    InterferometerSpec::new(segments.iter().map(SegmentConfig::to_segment).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub signal_nm: [f64; 2],
    pub idler_nm: [f64; 2],
    pub signal_points: usize,
    pub idler_points: usize,
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::from_nm(self.signal_nm, self.idler_nm, self.signal_points, self.idler_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationConfig {
    Raw,
    #[default]
    PeakUnity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Box-average width of the marginals.
    #[serde(default = "default_band_nm")]
    pub band_width_nm: f64,
    /// Highest fringe order reported by the marginal command.
    #[serde(default = "default_max_order")]
    pub max_order: u32,
    #[serde(default)]
    pub normalization: NormalizationConfig,
}

fn default_band_nm() -> f64 {
    0.16
}

fn default_max_order() -> u32 {
    8
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            band_width_nm: default_band_nm(),
            max_order: default_max_order(),
            normalization: NormalizationConfig::default(),
        }
    }
}

/// Explicit list of centers or an evenly stepped sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Centers {
    List(Vec<f64>),
    Sweep { start: f64, step: f64, count: usize },
}

impl Centers {
    pub fn values_nm(&self) -> Vec<f64> {
        match self {
            Centers::List(v) => v.clone(),
            Centers::Sweep { start, step, count } => (0..*count).map(|k| start + step * k as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub mode: ScanMode,
    pub signal_nm: Centers,
    /// Omitted in paired mode: the energy conjugates of the signal centers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idler_nm: Option<Centers>,
    pub band_width_nm: f64,
    pub integration_time_s: f64,
    pub avg_powers_uw: Vec<f64>,
}

impl ScanConfig {
    pub fn to_plan(&self, pump: &PumpPulse) -> Result<ScanPlan> {
        let signal: Vec<f64> = self.signal_nm.values_nm().into_iter().map(nm).collect();
        let idler: Vec<f64> = match (&self.idler_nm, self.mode) {
            (Some(c), _) => c.values_nm().into_iter().map(nm).collect(),
            (None, ScanMode::Paired) => signal
                .iter()
                .map(|&s| conjugate_wavelength(s, pump.lambda_p0))
                .collect::<Result<_>>()?,
            (None, ScanMode::Raster) => {
                return Err(Error::Config("raster scans need idler_nm".into()));
            }
        };
        ScanPlan::new(
            signal,
            idler,
            nm(self.band_width_nm),
            self.integration_time_s,
            self.avg_powers_uw.iter().map(|&p| microwatt(p)).collect(),
            self.mode,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RamanConfig {
    /// counts·s⁻¹·W⁻¹ before detection losses.
    Flat(f64),
    Table { wavelengths_nm: Vec<f64>, cps_per_w: Vec<f64> },
}

impl RamanConfig {
    fn to_density(&self) -> RamanDensity {
        match self {
            RamanConfig::Flat(d) => RamanDensity::Flat(*d),
            RamanConfig::Table { wavelengths_nm, cps_per_w } => RamanDensity::Table {
                wavelengths: wavelengths_nm.iter().map(|&w| nm(w)).collect(),
                densities: cps_per_w.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CalibrationConfig {
    /// Pairs/s per unit JSI mass (m²) at the pump power of the config.
    PerUnitMass(f64),
    /// Fix the largest true-coincidence rate of a reference interferometer
    /// (default: the configured one) at this many counts/s, using the
    /// scan's band width and the configured pump.
    PeakTrueCps {
        target: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference_segments: Option<Vec<SegmentConfig>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub efficiency_signal: f64,
    pub efficiency_idler: f64,
    pub raman_cps_per_w: RamanConfig,
    pub calibration: CalibrationConfig,
}

impl DetectionConfig {
    /// Detection model with the calibration left at zero; the caller
    /// resolves it.
    pub fn to_model_uncalibrated(&self) -> Result<DetectionModel> {
        DetectionModel::new(self.efficiency_signal, self.efficiency_idler, self.raman_cps_per_w.to_density(), 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub pump: PumpConfig,
    pub segments: Vec<SegmentConfig>,
    pub grid: GridConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn spec(&self) -> InterferometerSpec {
        segments_to_spec(&self.segments)
    }

    /// Paper-style even interferometer: `n_stages` × 100 m DSF with 10 m SMF
    /// gaps and the reference pump.
    pub fn even(n_stages: usize, grid: GridConfig) -> Self {
        Self::from_spec(&InterferometerSpec::even(n_stages), grid)
    }

    pub fn from_spec(spec: &InterferometerSpec, grid: GridConfig) -> Self {
        Self {
            pump: PumpConfig::default(),
            segments: spec.segments.iter().map(SegmentConfig::from_segment).collect(),
            grid,
            analysis: AnalysisConfig::default(),
            scan: None,
            detection: None,
            seed: None,
            output_dir: None,
        }
    }

    /// Scan and detection blocks come together and need a seed.
    pub fn check_experiment(&self) -> Result<(&ScanConfig, &DetectionConfig, u64)> {
        let scan = self.scan.as_ref().ok_or_else(|| Error::Config("missing scan block".into()))?;
        let det = self
            .detection
            .as_ref()
            .ok_or_else(|| Error::Config("missing detection block".into()))?;
        let seed = self
            .seed
            .ok_or_else(|| Error::Config("a seed is required when a scan block is present".into()))?;
        Ok((scan, det, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_round_trip() {
        for s in [FiberSegment::dsf(100.0), FiberSegment::smf(10.0)] {
            let back = SegmentConfig::from_segment(&s).to_segment();
            assert_eq!(back.kind, s.kind);
            for (a, b) in [
                (back.lambda0, s.lambda0),
                (back.dispersion_slope, s.dispersion_slope),
                (back.gamma, s.gamma),
                (back.dispersion, s.dispersion),
            ] {
                match (a, b) {
                    (Some(x), Some(y)) => assert!(((x - y) / y).abs() < 1e-12),
                    (None, None) => {}
                    _ => panic!("field presence changed"),
                }
            }
        }
    }

    #[test]
    fn paired_scan_defaults_to_conjugate_idlers() {
        let scan = ScanConfig {
            mode: ScanMode::Paired,
            signal_nm: Centers::Sweep { start: 1560.0, step: 0.16, count: 3 },
            idler_nm: None,
            band_width_nm: 0.16,
            integration_time_s: 1.0,
            avg_powers_uw: vec![60.0],
        };
        let pump = PumpPulse::reference();
        let plan = scan.to_plan(&pump).unwrap();
        assert_eq!(plan.idler_centers.len(), 3);
        let i = plan.idler_centers[0];
        let s = plan.signal_centers[0];
        assert!((1.0 / s + 1.0 / i - 2.0 / pump.lambda_p0).abs() * s < 1e-12);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"segments": [], "grid": {"signal_nm": [1,2], "idler_nm": [1,2], "signal_points": 2, "idler_points": 2}, "bogus": 1}"#;
        assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))));
    }
}
