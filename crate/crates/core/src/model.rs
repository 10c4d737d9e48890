//! Physical parameters of the interferometer and its pump.
//!
//! Everything is stored in SI units (m, s, rad/s, W). Laboratory units
//! (nm, ps/(nm·km), ps/(km·nm²), (W·km)⁻¹, µW, MHz, ps) are converted once,
//! at construction, by the helpers in [`units`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::numeric::linspace;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Ratio between a Gaussian's full width at half maximum and its standard
/// deviation, `2√(2 ln 2)`. Used to turn the pump's quoted FWHM into σ_p.
pub const INTENSITY_FWHM_FACTOR: f64 = 2.354_820_045_030_949_3;

/// Conversions from laboratory units to SI.
pub mod units {
    pub fn nm(x: f64) -> f64 {
        x * 1e-9
    }

    pub fn to_nm(x: f64) -> f64 {
        x * 1e9
    }

    /// ps/(nm·km) → s/m².
    pub fn ps_per_nm_km(x: f64) -> f64 {
        x * 1e-12 / (1e-9 * 1e3)
    }

    /// ps/(km·nm²) → s/m³.
    pub fn ps_per_km_nm2(x: f64) -> f64 {
        x * 1e-12 / (1e3 * 1e-18)
    }

    /// (W·km)⁻¹ → (W·m)⁻¹.
    pub fn per_w_km(x: f64) -> f64 {
        x * 1e-3
    }

    pub fn microwatt(x: f64) -> f64 {
        x * 1e-6
    }

    pub fn to_microwatt(x: f64) -> f64 {
        x * 1e6
    }

    pub fn megahertz(x: f64) -> f64 {
        x * 1e6
    }

    pub fn picosecond(x: f64) -> f64 {
        x * 1e-12
    }
}

/// ω = 2πc/λ.
pub fn to_angular_frequency(lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!(
            "wavelength must be positive and finite, got {lambda}"
        )));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / lambda)
}

/// λ = 2πc/ω.
pub fn to_wavelength(omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::domain(format!(
            "angular frequency must be positive and finite, got {omega}"
        )));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / omega)
}

#[inline]
pub(crate) fn omega_unchecked(lambda: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / lambda
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Nonlinear,
    Dispersive,
}

/// One fiber in the interferometer chain, in SI units.
///
/// Nonlinear segments (dispersion-shifted fiber) carry the zero-dispersion
/// wavelength, dispersion slope and nonlinear coefficient. Dispersive
/// segments (standard single-mode fiber) carry only the dispersion
/// coefficient. The optional fields let a partially specified segment reach
/// [`validate_spec`], which reports what is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSegment {
    pub kind: SegmentKind,
    /// m
    pub length: f64,
    /// m
    pub lambda0: Option<f64>,
    /// s/m³
    pub dispersion_slope: Option<f64>,
    /// (W·m)⁻¹
    pub gamma: Option<f64>,
    /// s/m²
    pub dispersion: Option<f64>,
}

impl FiberSegment {
    /// Dispersion-shifted fiber from laboratory units: length in m, λ₀ in nm,
    /// slope in ps/(km·nm²), γ in (W·km)⁻¹.
    pub fn nonlinear(length_m: f64, lambda0_nm: f64, slope_ps_km_nm2: f64, gamma_w_km: f64) -> Self {
        Self {
            kind: SegmentKind::Nonlinear,
            length: length_m,
            lambda0: Some(units::nm(lambda0_nm)),
            dispersion_slope: Some(units::ps_per_km_nm2(slope_ps_km_nm2)),
            gamma: Some(units::per_w_km(gamma_w_km)),
            dispersion: None,
        }
    }

    /// Standard fiber phase shifter: length in m, D in ps/(nm·km).
    pub fn dispersive(length_m: f64, dispersion_ps_nm_km: f64) -> Self {
        Self {
            kind: SegmentKind::Dispersive,
            length: length_m,
            lambda0: None,
            dispersion_slope: None,
            gamma: None,
            dispersion: Some(units::ps_per_nm_km(dispersion_ps_nm_km)),
        }
    }

    /// The dispersion-shifted fiber used throughout the experiments:
    /// λ₀ = 1552.5 nm, 0.075 ps/(km·nm²), γ = 2 (W·km)⁻¹.
    pub fn dsf(length_m: f64) -> Self {
        Self::nonlinear(length_m, 1552.5, 0.075, 2.0)
    }

    /// Standard single-mode fiber with D = 17 ps/(nm·km).
    pub fn smf(length_m: f64) -> Self {
        Self::dispersive(length_m, 17.0)
    }

    pub fn with_length(&self, length: f64) -> Self {
        Self {
            length,
            ..self.clone()
        }
    }

    fn violations(&self, index: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.length.is_finite() && self.length > 0.0) {
            out.push(Violation::at(
                index,
                format!("length must be positive and finite, got {}", self.length),
            ));
        }
        let mut need = |name: &str, v: Option<f64>, positive: bool| match v {
            None => out.push(Violation::at(index, format!("missing {name}"))),
            Some(x) if !x.is_finite() => {
                out.push(Violation::at(index, format!("{name} is not finite")))
            }
            Some(x) if positive && x <= 0.0 => {
                out.push(Violation::at(index, format!("{name} must be positive, got {x}")))
            }
            _ => {}
        };
        match self.kind {
            SegmentKind::Nonlinear => {
                need("lambda0", self.lambda0, true);
                need("dispersion_slope", self.dispersion_slope, false);
                need("gamma", self.gamma, false);
                if self.dispersion.is_some() {
                    out.push(Violation::at(index, "nonlinear segment must not carry a dispersion coefficient"));
                }
            }
            SegmentKind::Dispersive => {
                need("dispersion", self.dispersion, false);
                if self.lambda0.is_some() || self.dispersion_slope.is_some() || self.gamma.is_some() {
                    out.push(Violation::at(
                        index,
                        "dispersive segment must carry only a dispersion coefficient",
                    ));
                }
            }
        }
        out
    }
}

/// A nonlinear stage after validation; all coefficients present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearStage {
    pub length: f64,
    pub lambda0: f64,
    pub dispersion_slope: f64,
    pub gamma: f64,
}

/// A dispersive gap after validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveGap {
    pub length: f64,
    pub dispersion: f64,
}

/// Pulsed pump, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpPulse {
    /// Central wavelength λ_p0, m.
    pub lambda_p0: f64,
    /// Spectral FWHM, m.
    pub fwhm_lambda: f64,
    /// Hz
    pub rep_rate: f64,
    /// Average power, W.
    pub avg_power: f64,
    /// s
    pub pulse_duration: f64,
}

impl PumpPulse {
    pub fn new(
        lambda_p0: f64,
        fwhm_lambda: f64,
        rep_rate: f64,
        avg_power: f64,
        pulse_duration: f64,
    ) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("pump {name} must be positive and finite, got {v}")))
            }
        };
        positive("wavelength", lambda_p0)?;
        positive("bandwidth", fwhm_lambda)?;
        positive("repetition rate", rep_rate)?;
        positive("pulse duration", pulse_duration)?;
        if !(avg_power.is_finite() && avg_power >= 0.0) {
            return Err(Error::domain(format!(
                "pump average power must be non-negative, got {avg_power}"
            )));
        }
        if fwhm_lambda >= 0.1 * lambda_p0 {
            return Err(Error::domain(
                "pump bandwidth must be much narrower than its central wavelength",
            ));
        }
        Ok(Self {
            lambda_p0,
            fwhm_lambda,
            rep_rate,
            avg_power,
            pulse_duration,
        })
    }

    /// nm, nm, MHz, µW, ps.
    pub fn from_lab_units(
        lambda_nm: f64,
        fwhm_nm: f64,
        rep_rate_mhz: f64,
        avg_power_uw: f64,
        duration_ps: f64,
    ) -> Result<Self> {
        Self::new(
            units::nm(lambda_nm),
            units::nm(fwhm_nm),
            units::megahertz(rep_rate_mhz),
            units::microwatt(avg_power_uw),
            units::picosecond(duration_ps),
        )
    }

    /// 1553.3 nm, 1.4 nm FWHM, 36.8 MHz, 60 µW, 4 ps.
    pub fn reference() -> Self {
        Self::from_lab_units(1553.3, 1.4, 36.8, 60.0, 4.0).expect("reference pump is valid")
    }

    pub fn with_avg_power(&self, avg_power: f64) -> Result<Self> {
        Self::new(
            self.lambda_p0,
            self.fwhm_lambda,
            self.rep_rate,
            avg_power,
            self.pulse_duration,
        )
    }

    pub fn omega_p0(&self) -> f64 {
        omega_unchecked(self.lambda_p0)
    }
}

/// Spectral FWHM of the pump converted to angular frequency, 2πc·Δλ/λ².
pub fn pump_fwhm_omega(pump: &PumpPulse) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT * pump.fwhm_lambda / (pump.lambda_p0 * pump.lambda_p0)
}

/// σ_p from the pump FWHM with the default [`INTENSITY_FWHM_FACTOR`].
pub fn pump_sigma(pump: &PumpPulse) -> f64 {
    pump_sigma_with_factor(pump, INTENSITY_FWHM_FACTOR)
}

/// σ_p = Δω_FWHM / `fwhm_factor`; lets alternate width conventions be compared.
pub fn pump_sigma_with_factor(pump: &PumpPulse, fwhm_factor: f64) -> f64 {
    pump_fwhm_omega(pump) / fwhm_factor
}

/// Rectangular-equivalent peak power, P_avg / (f_rep · τ).
pub fn peak_power(pump: &PumpPulse) -> f64 {
    pump.avg_power / (pump.rep_rate * pump.pulse_duration)
}

pub fn pulse_energy(pump: &PumpPulse) -> f64 {
    pump.avg_power / pump.rep_rate
}

pub fn photon_energy(lambda: f64) -> f64 {
    HBAR * omega_unchecked(lambda)
}

pub fn photons_per_pulse(pump: &PumpPulse) -> f64 {
    pulse_energy(pump) / photon_energy(pump.lambda_p0)
}

/// Ordered fiber chain: nonlinear, dispersive, nonlinear, ..., nonlinear.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterferometerSpec {
    pub segments: Vec<FiberSegment>,
}

impl InterferometerSpec {
    pub fn new(segments: Vec<FiberSegment>) -> Self {
        Self { segments }
    }

    /// `lengths.len()` stages of the reference fiber with identical gaps.
    pub fn with_stage_lengths(lengths: &[f64], gap_length: f64) -> Self {
        let mut segments = Vec::with_capacity(2 * lengths.len());
        for (i, &l) in lengths.iter().enumerate() {
            if i > 0 {
                segments.push(FiberSegment::smf(gap_length));
            }
            segments.push(FiberSegment::dsf(l));
        }
        Self { segments }
    }

    /// N identical 100 m stages separated by 10 m of standard fiber.
    pub fn even(n_stages: usize) -> Self {
        Self::with_stage_lengths(&vec![100.0; n_stages], 10.0)
    }
}

/// Interferometer with every coefficient checked and the stage/gap lists
/// pulled out.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSpec {
    pub stages: Vec<NonlinearStage>,
    pub gaps: Vec<DispersiveGap>,
}

impl ValidatedSpec {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stage_lengths(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.length).collect()
    }

    pub fn gap_lengths(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| g.length).collect()
    }
}

/// Checks ordering, lengths and coefficients. Never repairs; every problem
/// found is returned in [`Error::Validation`].
pub fn validate_spec(spec: &InterferometerSpec) -> Result<ValidatedSpec> {
    let mut violations = Vec::new();
    if spec.segments.is_empty() {
        violations.push(Violation::global("interferometer has no segments"));
        return Err(Error::Validation(violations));
    }
    for (i, seg) in spec.segments.iter().enumerate() {
        let expected = if i % 2 == 0 {
            SegmentKind::Nonlinear
        } else {
            SegmentKind::Dispersive
        };
        if seg.kind != expected {
            violations.push(Violation::at(
                i,
                format!("expected a {expected:?} segment, found {:?}", seg.kind),
            ));
        }
        violations.extend(seg.violations(i));
    }
    if spec.segments.len().is_multiple_of(2) {
        violations.push(Violation::global(
            "chain must begin and end with a nonlinear segment",
        ));
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }

    let mut stages = Vec::new();
    let mut gaps = Vec::new();
    for seg in &spec.segments {
        match seg.kind {
            SegmentKind::Nonlinear => stages.push(NonlinearStage {
                length: seg.length,
                lambda0: seg.lambda0.unwrap_or_default(),
                dispersion_slope: seg.dispersion_slope.unwrap_or_default(),
                gamma: seg.gamma.unwrap_or_default(),
            }),
            SegmentKind::Dispersive => gaps.push(DispersiveGap {
                length: seg.length,
                dispersion: seg.dispersion.unwrap_or_default(),
            }),
        }
    }
    Ok(ValidatedSpec { stages, gaps })
}

/// Rectangular sampling of the (λ_s, λ_i) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    /// [min, max], m
    pub signal_range: [f64; 2],
    /// [min, max], m
    pub idler_range: [f64; 2],
    pub signal_points: usize,
    pub idler_points: usize,
}

impl SpectralGrid {
    pub fn new(
        signal_range: [f64; 2],
        idler_range: [f64; 2],
        signal_points: usize,
        idler_points: usize,
    ) -> Result<Self> {
        for (name, r) in [("signal", signal_range), ("idler", idler_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] > 0.0 && r[0] < r[1]) {
                return Err(Error::domain(format!(
                    "{name} range must satisfy 0 < min < max, got [{}, {}]",
                    r[0], r[1]
                )));
            }
        }
        if signal_points < 2 || idler_points < 2 {
            return Err(Error::domain("grid needs at least 2 points per axis"));
        }
        Ok(Self {
            signal_range,
            idler_range,
            signal_points,
            idler_points,
        })
    }

    pub fn from_nm(signal_nm: [f64; 2], idler_nm: [f64; 2], signal_points: usize, idler_points: usize) -> Result<Self> {
        Self::new(
            [units::nm(signal_nm[0]), units::nm(signal_nm[1])],
            [units::nm(idler_nm[0]), units::nm(idler_nm[1])],
            signal_points,
            idler_points,
        )
    }

    /// Same range and sampling on both axes.
    pub fn symmetric(range: [f64; 2], points: usize) -> Result<Self> {
        Self::new(range, range, points, points)
    }

    pub fn signal_wavelengths(&self) -> Vec<f64> {
        linspace(self.signal_range[0], self.signal_range[1], self.signal_points)
    }

    pub fn idler_wavelengths(&self) -> Vec<f64> {
        linspace(self.idler_range[0], self.idler_range[1], self.idler_points)
    }

    pub fn signal_step(&self) -> f64 {
        (self.signal_range[1] - self.signal_range[0]) / (self.signal_points - 1) as f64
    }

    pub fn idler_step(&self) -> f64 {
        (self.idler_range[1] - self.idler_range[0]) / (self.idler_points - 1) as f64
    }

    pub fn is_symmetric(&self) -> bool {
        self.signal_range == self.idler_range && self.signal_points == self.idler_points
    }

    pub fn with_points(&self, signal_points: usize, idler_points: usize) -> Result<Self> {
        Self::new(self.signal_range, self.idler_range, signal_points, idler_points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn angular_frequency_examples() {
        let w = to_angular_frequency(1553.3e-9).unwrap();
        // 2πc/λ by hand: 1.883651567e9 / 1.5533e-6
        assert!(rel(w, 1.212_677e15) < 1e-6);
        let w2 = to_angular_frequency(2.0 * 1553.3e-9).unwrap();
        assert!(rel(w / w2, 2.0) < 1e-15);
        assert!(rel(to_wavelength(w).unwrap(), 1553.3e-9) < 1e-12);
    }

    #[test]
    fn angular_frequency_rejects_bad_input() {
        assert!(matches!(to_angular_frequency(0.0), Err(Error::Domain(_))));
        assert!(matches!(to_angular_frequency(-1.0), Err(Error::Domain(_))));
        assert!(matches!(to_angular_frequency(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(to_wavelength(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn unit_conversions_match_dimensional_analysis() {
        // 17 ps/(nm km) = 17e-12 s / (1e-9 m * 1e3 m)
        assert!(rel(units::ps_per_nm_km(17.0), 1.7e-5) < 1e-14);
        // 0.075 ps/(km nm^2) = 0.075e-12 s / (1e3 m * 1e-18 m^2)
        assert!(rel(units::ps_per_km_nm2(0.075), 75.0) < 1e-14);
        assert!(rel(units::per_w_km(2.0), 2e-3) < 1e-15);
    }

    #[test]
    fn pump_sigma_examples() {
        let pump = PumpPulse::reference();
        assert!(rel(pump_fwhm_omega(&pump), 1.094e12) < 1e-3);
        assert!(rel(pump_sigma(&pump), 4.64e11) < 1e-3);
        let wide = PumpPulse::new(pump.lambda_p0, 2.0 * pump.fwhm_lambda, pump.rep_rate, pump.avg_power, pump.pulse_duration).unwrap();
        assert!(rel(pump_sigma(&wide), 2.0 * pump_sigma(&pump)) < 1e-14);
        assert!(rel(INTENSITY_FWHM_FACTOR, 2.0 * (2.0 * std::f64::consts::LN_2).sqrt()) < 1e-15);
    }

    #[test]
    fn peak_power_examples() {
        let pump = PumpPulse::reference();
        assert!(rel(peak_power(&pump), 0.41) < 0.01);
        assert_eq!(peak_power(&pump.with_avg_power(0.0).unwrap()), 0.0);
        let slow = PumpPulse { rep_rate: pump.rep_rate / 2.0, ..pump };
        assert!(rel(peak_power(&slow), 2.0 * peak_power(&pump)) < 1e-14);
    }

    #[test]
    fn photon_count_examples() {
        let pump = PumpPulse::reference();
        assert!(rel(pulse_energy(&pump), 1.63e-12) < 1e-3);
        let n = photons_per_pulse(&pump);
        assert!(n > 1.2e7 && n < 1.4e7, "{n}");
        assert_eq!(photons_per_pulse(&pump.with_avg_power(0.0).unwrap()), 0.0);
        // closure: photons × photon energy × rep rate = average power
        let closure = n * photon_energy(pump.lambda_p0) * pump.rep_rate;
        assert!(rel(closure, pump.avg_power) < 1e-14);
    }

    #[test]
    fn pump_rejects_bad_fields() {
        assert!(PumpPulse::from_lab_units(1553.3, -1.0, 36.8, 60.0, 4.0).is_err());
        assert!(PumpPulse::from_lab_units(1553.3, 1.4, 0.0, 60.0, 4.0).is_err());
        assert!(PumpPulse::from_lab_units(1553.3, 1.4, 36.8, -60.0, 4.0).is_err());
        assert!(PumpPulse::from_lab_units(1553.3, 400.0, 36.8, 60.0, 4.0).is_err());
    }

    #[test]
    fn validate_two_stage() {
        let spec = InterferometerSpec::new(vec![
            FiberSegment::dsf(100.0),
            FiberSegment::smf(10.0),
            FiberSegment::dsf(100.0),
        ]);
        let v = validate_spec(&spec).unwrap();
        assert_eq!(v.n_stages(), 2);
        assert_eq!(v.gap_lengths(), vec![10.0]);
    }

    #[test]
    fn validate_binomial_three_stage() {
        let spec = InterferometerSpec::with_stage_lengths(&[50.0, 100.0, 50.0], 10.0);
        let v = validate_spec(&spec).unwrap();
        assert_eq!(v.n_stages(), 3);
        assert_eq!(v.stage_lengths(), vec![50.0, 100.0, 50.0]);
        assert_eq!(v.gaps.len(), 2);
    }

    #[test]
    fn validate_reports_ordering() {
        let spec = InterferometerSpec::new(vec![FiberSegment::smf(10.0), FiberSegment::dsf(100.0)]);
        match validate_spec(&spec) {
            Err(Error::Validation(v)) => {
                assert!(v.iter().any(|x| x.segment == Some(0)));
                assert!(v.iter().any(|x| x.segment.is_none()));
            }
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn validate_collects_every_problem() {
        let mut bad = FiberSegment::dsf(-5.0);
        bad.gamma = None;
        let spec = InterferometerSpec::new(vec![bad, FiberSegment::smf(0.0), FiberSegment::dsf(100.0)]);
        let Err(Error::Validation(v)) = validate_spec(&spec) else {
            panic!("expected violations");
        };
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(validate_spec(&InterferometerSpec::default()).is_err());
    }

    #[test]
    fn grid_invariants() {
        assert!(SpectralGrid::from_nm([1560.0, 1550.0], [1540.0, 1545.0], 10, 10).is_err());
        assert!(SpectralGrid::from_nm([1550.0, 1560.0], [1540.0, 1545.0], 1, 10).is_err());
        let g = SpectralGrid::from_nm([1550.0, 1560.0], [1540.0, 1545.0], 11, 6).unwrap();
        let s = g.signal_wavelengths();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!(rel(g.signal_step(), 1e-9) < 1e-9);
        assert!(!g.is_symmetric());
    }
}
