//! Phase matching, interference factors and synthesis of the joint spectral
//! amplitude of an N-stage fiber interferometer.
//!
//! The amplitude at (ω_s, ω_i) is the pump envelope times the coherent sum
//! of the per-stage contributions,
//!
//! ```text
//! F = exp[-(ω_s + ω_i - 2ω_p0)² / 4σ_p²] · Σ_n g_n e^{2i(n-1)θ},
//! g_n = γ_n P_p L_n sinc(Δk_n L_n / 2),
//! ```
//!
//! which reduces to the envelope times H(θ) for identical stages and to the
//! envelope times K(θ) for length-weighted stages.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    omega_unchecked, peak_power, pump_sigma, validate_spec, DispersiveGap, FiberSegment,
    InterferometerSpec, NonlinearStage, PumpPulse, SegmentKind, SpectralGrid, ValidatedSpec,
    SPEED_OF_LIGHT,
};
use crate::numeric::sinc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Gain weights taken literally, proportionality constant 1.
    Raw,
    /// Scaled so that the largest |F| on the grid is 1.
    PeakUnity,
}

/// Complex joint spectral amplitude sampled on a wavelength grid.
/// Row index runs over signal wavelengths, column index over idler.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    grid: SpectralGrid,
    amplitude: DMatrix<Complex64>,
    pump_wavelength: f64,
    normalization: Normalization,
}

impl JointSpectrum {
    /// Wraps an existing amplitude matrix. Dimensions must match the grid
    /// and every entry must be finite.
    pub fn from_parts(
        grid: SpectralGrid,
        amplitude: DMatrix<Complex64>,
        pump_wavelength: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        if amplitude.nrows() != grid.signal_points || amplitude.ncols() != grid.idler_points {
            return Err(Error::domain(format!(
                "amplitude is {}x{} but grid is {}x{}",
                amplitude.nrows(),
                amplitude.ncols(),
                grid.signal_points,
                grid.idler_points
            )));
        }
        if amplitude.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::domain("amplitude contains non-finite entries"));
        }
        if !(pump_wavelength.is_finite() && pump_wavelength > 0.0) {
            return Err(Error::domain("pump wavelength must be positive"));
        }
        let js = Self {
            grid,
            amplitude,
            pump_wavelength,
            normalization,
        };
        match normalization {
            Normalization::Raw => Ok(js),
            Normalization::PeakUnity => js.to_peak_unity(),
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &DMatrix<Complex64> {
        &self.amplitude
    }

    pub fn pump_wavelength(&self) -> f64 {
        self.pump_wavelength
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn max_abs(&self) -> f64 {
        self.amplitude.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn to_peak_unity(&self) -> Result<Self> {
        let peak = self.max_abs();
        if peak == 0.0 {
            return Err(Error::domain("cannot peak-normalize an all-zero spectrum"));
        }
        Ok(Self {
            grid: self.grid,
            amplitude: self.amplitude.map(|z| z / peak),
            pump_wavelength: self.pump_wavelength,
            normalization: Normalization::PeakUnity,
        })
    }

    /// Same spectrum with a new amplitude matrix of identical shape.
    pub(crate) fn with_amplitude(&self, amplitude: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(amplitude.shape(), self.amplitude.shape());
        Self {
            grid: self.grid,
            amplitude,
            pump_wavelength: self.pump_wavelength,
            normalization: self.normalization,
        }
    }
}

/// Dispersive phase and per-stage gain weights at one frequency pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePhases {
    /// Phase per dispersive gap, rad.
    pub theta: f64,
    /// g_n, one per nonlinear stage.
    pub gains: Vec<f64>,
}

impl StagePhases {
    /// Σ g_n e^{2i(n-1)θ}.
    pub fn interference_sum(&self) -> Complex64 {
        weighted_phase_sum(self.theta, self.gains.iter().copied())
    }
}

fn weighted_phase_sum(theta: f64, weights: impl Iterator<Item = f64>) -> Complex64 {
    weights
        .enumerate()
        .map(|(n, w)| Complex64::from_polar(w, 2.0 * n as f64 * theta))
        .fold(Complex64::new(0.0, 0.0), |acc, z| acc + z)
}

fn stage_mismatch(stage: &NonlinearStage, omega_s: f64, omega_i: f64, lambda_p0: f64, p_peak: f64) -> f64 {
    let detuning = omega_s - omega_i;
    lambda_p0 * lambda_p0 / (8.0 * PI * SPEED_OF_LIGHT)
        * stage.dispersion_slope
        * (lambda_p0 - stage.lambda0)
        * detuning
        * detuning
        - 2.0 * stage.gamma * p_peak
}

fn gap_phase(gap: &DispersiveGap, omega_s: f64, omega_i: f64, lambda_p0: f64) -> f64 {
    let detuning = omega_s - omega_i;
    lambda_p0 * lambda_p0 * gap.dispersion * gap.length * detuning * detuning / (16.0 * PI * SPEED_OF_LIGHT)
}

fn as_stage(seg: &FiberSegment) -> Result<NonlinearStage> {
    if seg.kind != SegmentKind::Nonlinear {
        return Err(Error::domain("phase mismatch needs a nonlinear segment"));
    }
    match (seg.lambda0, seg.dispersion_slope, seg.gamma) {
        (Some(lambda0), Some(dispersion_slope), Some(gamma)) => Ok(NonlinearStage {
            length: seg.length,
            lambda0,
            dispersion_slope,
            gamma,
        }),
        _ => Err(Error::domain("nonlinear segment is missing coefficients")),
    }
}

fn as_gap(seg: &FiberSegment) -> Result<DispersiveGap> {
    if seg.kind != SegmentKind::Dispersive {
        return Err(Error::domain("dispersive phase needs a dispersive segment"));
    }
    let dispersion = seg
        .dispersion
        .ok_or_else(|| Error::domain("dispersive segment is missing its dispersion"))?;
    Ok(DispersiveGap {
        length: seg.length,
        dispersion,
    })
}

/// FWM phase mismatch Δk (1/m) in a nonlinear segment, using the pump's
/// peak power for the self-phase term.
pub fn phase_mismatch(omega_s: f64, omega_i: f64, dsf: &FiberSegment, pump: &PumpPulse) -> Result<f64> {
    let stage = as_stage(dsf)?;
    Ok(stage_mismatch(&stage, omega_s, omega_i, pump.lambda_p0, peak_power(pump)))
}

/// Phase θ (rad) accumulated across one dispersive gap; quadratic in the
/// signal-idler detuning.
pub fn dispersive_phase(omega_s: f64, omega_i: f64, smf: &FiberSegment, pump: &PumpPulse) -> Result<f64> {
    let gap = as_gap(smf)?;
    Ok(gap_phase(&gap, omega_s, omega_i, pump.lambda_p0))
}

/// H(θ) for N identical stages, evaluated as Σ_{n=1..N} e^{2i(n-1)θ}.
pub fn interference_factor_even(theta: f64, n_stages: usize) -> Complex64 {
    weighted_phase_sum(theta, std::iter::repeat_n(1.0, n_stages))
}

/// K(θ) = Σ L_n e^{2i(n-1)θ} for stages of arbitrary length.
pub fn interference_factor_uneven(theta: f64, lengths: &[f64]) -> Result<Complex64> {
    if lengths.is_empty() {
        return Err(Error::domain("at least one stage length is required"));
    }
    if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::domain(format!("stage lengths must be positive, got {l}")));
    }
    Ok(weighted_phase_sum(theta, lengths.iter().copied()))
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, j| acc * (n - j) as u128 / (j + 1) as u128)
}

/// Stage lengths L_n = L_1·C(N-1, n-1).
pub fn binomial_lengths(n_stages: usize, l1: f64) -> Vec<f64> {
    let top = n_stages.saturating_sub(1) as u64;
    (0..n_stages as u64)
        .map(|k| l1 * binomial(top, k) as f64)
        .collect()
}

/// Width of the interference stripe along the detuning direction,
/// σ_int = sqrt(4c / ((N-1) m λ_p0² D L)), rad/s.
pub fn stripe_width(n_stages: usize, order_m: u32, smf: &FiberSegment, pump: &PumpPulse) -> Result<f64> {
    if n_stages < 2 {
        return Err(Error::domain("stripe width needs at least two stages"));
    }
    if order_m < 1 {
        return Err(Error::domain("island order must be at least 1"));
    }
    let gap = as_gap(smf)?;
    let denom = (n_stages - 1) as f64
        * order_m as f64
        * pump.lambda_p0
        * pump.lambda_p0
        * gap.dispersion
        * gap.length;
    if !(denom > 0.0) {
        return Err(Error::domain("stripe width needs positive dispersion and gap length"));
    }
    Ok((4.0 * SPEED_OF_LIGHT / denom).sqrt())
}

/// Detuning |ω_s - ω_i| at which the gap phase reaches θ.
pub fn detuning_for_phase(theta: f64, smf: &FiberSegment, pump: &PumpPulse) -> Result<f64> {
    let gap = as_gap(smf)?;
    if theta < 0.0 {
        return Err(Error::domain("gap phase is non-negative"));
    }
    let scale = pump.lambda_p0 * pump.lambda_p0 * gap.dispersion * gap.length / (16.0 * PI * SPEED_OF_LIGHT);
    if !(scale > 0.0) {
        return Err(Error::domain("gap must have positive dispersion"));
    }
    Ok((theta / scale).sqrt())
}

/// Energy-conserving (λ_s, λ_i) at which θ = mπ; the signal is the
/// long-wavelength photon.
pub fn island_center(order_m: f64, smf: &FiberSegment, pump: &PumpPulse) -> Result<(f64, f64)> {
    let detuning = detuning_for_phase(order_m * PI, smf, pump)?;
    let wp = pump.omega_p0();
    if detuning >= 2.0 * wp {
        return Err(Error::domain("island lies beyond the physical frequency range"));
    }
    Ok((
        omega_unchecked(wp - detuning / 2.0),
        omega_unchecked(wp + detuning / 2.0),
    ))
}

fn uniform_gap(spec: &ValidatedSpec) -> Result<Option<DispersiveGap>> {
    let Some(first) = spec.gaps.first().copied() else {
        return Ok(None);
    };
    for g in &spec.gaps[1..] {
        if g.length != first.length || g.dispersion != first.dispersion {
            return Err(Error::Unsupported(
                "dispersive gaps must all be identical".into(),
            ));
        }
    }
    Ok(Some(first))
}

/// Gap phase and stage gains at one frequency pair.
pub fn stage_phases(omega_s: f64, omega_i: f64, spec: &ValidatedSpec, pump: &PumpPulse) -> Result<StagePhases> {
    let gap = uniform_gap(spec)?;
    Ok(stage_phases_unchecked(omega_s, omega_i, spec, gap.as_ref(), pump.lambda_p0, peak_power(pump)))
}

fn stage_phases_unchecked(
    omega_s: f64,
    omega_i: f64,
    spec: &ValidatedSpec,
    gap: Option<&DispersiveGap>,
    lambda_p0: f64,
    p_peak: f64,
) -> StagePhases {
    let theta = gap.map_or(0.0, |g| gap_phase(g, omega_s, omega_i, lambda_p0));
    let gains = spec
        .stages
        .iter()
        .map(|s| {
            let dk = stage_mismatch(s, omega_s, omega_i, lambda_p0, p_peak);
            s.gamma * p_peak * s.length * sinc(dk * s.length / 2.0)
        })
        .collect();
    StagePhases { theta, gains }
}

/// Joint spectral amplitude of the interferometer on `grid`.
///
/// Rows are evaluated independently (in parallel when a rayon pool is
/// available); each entry depends only on its own frequency pair, so the
/// result is bitwise identical for any worker count.
pub fn synthesize_jsa(
    spec: &InterferometerSpec,
    pump: &PumpPulse,
    grid: &SpectralGrid,
    normalization: Normalization,
) -> Result<JointSpectrum> {
    let validated = validate_spec(spec)?;
    let gap = uniform_gap(&validated)?;
    let p_peak = peak_power(pump);
    let sigma = pump_sigma(pump);
    let wp = pump.omega_p0();
    let lambda_p0 = pump.lambda_p0;

    let ws: Vec<f64> = grid.signal_wavelengths().into_iter().map(omega_unchecked).collect();
    let wi: Vec<f64> = grid.idler_wavelengths().into_iter().map(omega_unchecked).collect();

    let rows: Vec<Vec<Complex64>> = ws
        .par_iter()
        .map(|&os| {
            wi.iter()
                .map(|&oi| {
                    let sum_dev = os + oi - 2.0 * wp;
                    let envelope = (-(sum_dev * sum_dev) / (4.0 * sigma * sigma)).exp();
                    let phases = stage_phases_unchecked(os, oi, &validated, gap.as_ref(), lambda_p0, p_peak);
                    phases.interference_sum() * envelope
                })
                .collect()
        })
        .collect();

    let amplitude = DMatrix::from_fn(ws.len(), wi.len(), |i, j| rows[i][j]);
    JointSpectrum::from_parts(*grid, amplitude, lambda_p0, normalization)
}
