//! Observables derived from a joint spectrum: intensity maps, marginal
//! fringes and their visibility, island catalogs, rectangular filtering,
//! Schmidt decomposition and collection efficiency.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::engine::{dispersive_phase, JointSpectrum};
use crate::error::{Error, Result};
use crate::model::{omega_unchecked, pump_sigma, FiberSegment, PumpPulse, SpectralGrid};
use crate::numeric::{compensated_sum, parabolic_offset, CompensatedSum};

/// |ρ| below this declares an island round.
pub const ROUND_THRESHOLD: f64 = 0.1;
/// Local maxima below this fraction of the global maximum are ignored.
pub const ISLAND_RELATIVE_THRESHOLD: f64 = 0.01;
/// Island support is the connected region above this fraction of its peak.
pub const SUPPORT_LEVEL: f64 = 0.5;
/// Minimum number of samples across an island's support on either axis.
pub const MIN_SAMPLES_ACROSS: usize = 4;
/// An island is primary when θ/π lies within this distance of an integer.
pub const PRIMARY_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    Signal,
    Idler,
}

/// Elementwise |F|².
pub fn jsi(jsa: &JointSpectrum) -> DMatrix<f64> {
    jsa.amplitude().map(|z| z.norm_sqr())
}

fn cell_area(grid: &SpectralGrid) -> f64 {
    grid.signal_step() * grid.idler_step()
}

/// ∬ |F|² dλ_s dλ_i as a rectangle-rule sum, rows then columns in index
/// order.
pub fn total_mass(jsa: &JointSpectrum) -> f64 {
    let j = jsi(jsa);
    let mut acc = CompensatedSum::new();
    for i in 0..j.nrows() {
        for k in 0..j.ncols() {
            acc.add(j[(i, k)]);
        }
    }
    acc.value() * cell_area(jsa.grid())
}

/// |F|² integrated over the conjugate axis, one value per sample of `axis`.
/// Multiplying by the kept axis' step and summing gives [`total_mass`].
pub fn marginal_mass(jsa: &JointSpectrum, axis: Axis) -> Vec<f64> {
    let j = jsi(jsa);
    let grid = jsa.grid();
    match axis {
        Axis::Signal => (0..j.nrows())
            .map(|i| compensated_sum((0..j.ncols()).map(|k| j[(i, k)])) * grid.idler_step())
            .collect(),
        Axis::Idler => (0..j.ncols())
            .map(|k| compensated_sum((0..j.nrows()).map(|i| j[(i, k)])) * grid.signal_step())
            .collect(),
    }
}

/// Normalized single-photon spectrum of one arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalSpectrum {
    pub axis: Axis,
    /// m, ascending
    pub wavelengths: Vec<f64>,
    /// Peak-normalized, ≥ 0.
    pub intensity: Vec<f64>,
    /// Width of the box average applied along the kept axis, m.
    pub band_width: f64,
    /// Zero-detuning wavelength; fringes are walked away from it.
    pub reference_wavelength: f64,
}

impl MarginalSpectrum {
    pub fn new(
        axis: Axis,
        wavelengths: Vec<f64>,
        intensity: Vec<f64>,
        band_width: f64,
        reference_wavelength: f64,
    ) -> Result<Self> {
        if wavelengths.len() != intensity.len() {
            return Err(Error::domain("wavelength and intensity lengths differ"));
        }
        if wavelengths.len() < 3 {
            return Err(Error::domain("marginal needs at least three samples"));
        }
        if !wavelengths.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::domain("marginal wavelengths must be strictly ascending"));
        }
        if intensity.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain("marginal intensities must be finite and non-negative"));
        }
        Ok(Self {
            axis,
            wavelengths,
            intensity,
            band_width,
            reference_wavelength,
        })
    }
}

fn band_members(wavelengths: &[f64], center: f64, width: f64) -> impl Iterator<Item = usize> + '_ {
    let half = 0.5 * width * (1.0 + 1e-9);
    wavelengths
        .iter()
        .enumerate()
        .filter(move |(_, &l)| (l - center).abs() <= half)
        .map(|(i, _)| i)
}

/// Box average of `values` over a window of `width` centered on each sample.
pub(crate) fn box_average(wavelengths: &[f64], values: &[f64], width: f64) -> Vec<f64> {
    wavelengths
        .iter()
        .map(|&c| {
            let mut acc = CompensatedSum::new();
            let mut n = 0usize;
            for i in band_members(wavelengths, c, width) {
                acc.add(values[i]);
                n += 1;
            }
            acc.value() / n as f64
        })
        .collect()
}

/// Integrates the JSI over the conjugate axis, box-averages over
/// `band_width` and normalizes to a peak of 1.
pub fn marginal(jsa: &JointSpectrum, axis: Axis, band_width: f64) -> Result<MarginalSpectrum> {
    let grid = jsa.grid();
    let (wavelengths, step) = match axis {
        Axis::Signal => (grid.signal_wavelengths(), grid.signal_step()),
        Axis::Idler => (grid.idler_wavelengths(), grid.idler_step()),
    };
    if !(band_width >= step * (1.0 - 1e-9)) {
        return Err(Error::Resolution(format!(
            "band width {band_width:e} m is below the grid step {step:e} m"
        )));
    }
    let raw = marginal_mass(jsa, axis);
    let smoothed = box_average(&wavelengths, &raw, band_width);
    let peak = smoothed.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::domain("marginal is identically zero"));
    }
    let intensity = smoothed.iter().map(|x| x / peak).collect();
    MarginalSpectrum::new(axis, wavelengths, intensity, band_width, jsa.pump_wavelength())
}

/// Peak/trough pair of one fringe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fringe {
    pub peak_wavelength: f64,
    pub trough_wavelength: f64,
    pub i_max: f64,
    pub i_min: f64,
    pub visibility: f64,
}

/// Finds the local maximum nearest `peak_wavelength` and the adjacent trough
/// on the side of larger detuning.
pub fn locate_fringe(marginal: &MarginalSpectrum, peak_wavelength: f64) -> Result<Fringe> {
    let wl = &marginal.wavelengths;
    let y = &marginal.intensity;
    let n = wl.len();
    if !(peak_wavelength >= wl[0] && peak_wavelength <= wl[n - 1]) {
        return Err(Error::domain("peak wavelength lies outside the marginal"));
    }
    let peak = (1..n - 1)
        .filter(|&i| y[i] >= y[i - 1] && y[i] >= y[i + 1])
        .min_by(|&a, &b| {
            (wl[a] - peak_wavelength)
                .abs()
                .total_cmp(&(wl[b] - peak_wavelength).abs())
        })
        .ok_or_else(|| Error::Analysis("no local maximum in the marginal".into()))?;
    let i_max = y[peak];
    if i_max <= 0.0 {
        return Err(Error::Analysis("fringe peak has zero intensity".into()));
    }

    let forward = wl[peak] >= marginal.reference_wavelength;
    let mut j = peak;
    loop {
        let next = if forward {
            (j + 1 < n).then_some(j + 1)
        } else {
            j.checked_sub(1)
        };
        match next {
            Some(k) if y[k] <= y[j] => j = k,
            Some(_) => break,
            None => {
                if y[j] < i_max {
                    return Err(Error::Analysis(
                        "marginal keeps falling to the edge of the range; no trough".into(),
                    ));
                }
                break;
            }
        }
    }
    let i_min = y[j];
    Ok(Fringe {
        peak_wavelength: wl[peak],
        trough_wavelength: wl[j],
        i_max,
        i_min,
        visibility: ((i_max - i_min) / i_max).clamp(0.0, 1.0),
    })
}

/// V = (I_max - I_min) / I_max of the fringe nearest `peak_wavelength`.
pub fn visibility(marginal: &MarginalSpectrum, peak_wavelength: f64) -> Result<f64> {
    locate_fringe(marginal, peak_wavelength).map(|f| f.visibility)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorrelationClass {
    AntiCorrelated,
    PositiveCorrelated,
    Round,
}

impl CorrelationClass {
    pub fn from_rho(rho: f64) -> Self {
        if rho.abs() < ROUND_THRESHOLD {
            CorrelationClass::Round
        } else if rho < 0.0 {
            CorrelationClass::AntiCorrelated
        } else {
            CorrelationClass::PositiveCorrelated
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CorrelationClass::AntiCorrelated => "anti",
            CorrelationClass::PositiveCorrelated => "positive",
            CorrelationClass::Round => "round",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IslandRank {
    Primary,
    Secondary,
}

impl IslandRank {
    pub fn as_str(&self) -> &'static str {
        match self {
            IslandRank::Primary => "primary",
            IslandRank::Secondary => "secondary",
        }
    }
}

/// A local maximum of the JSI and the half-maximum region around it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Island {
    /// (λ_s, λ_i), m, refined to sub-cell precision.
    pub center: (f64, f64),
    /// Grid index of the sampled peak.
    pub peak_index: (usize, usize),
    pub order_m: u32,
    /// Gap phase at the center, rad.
    pub theta: f64,
    pub peak_intensity: f64,
    /// Intensity-weighted covariance of (ω_s, ω_i) over the support, (rad/s)².
    pub second_moments: [[f64; 2]; 2],
    pub correlation_class: CorrelationClass,
    pub rank: IslandRank,
    /// Signal and idler wavelength extents of the support, m.
    pub support_extent: (f64, f64),
    pub support_points: usize,
}

impl Island {
    /// Normalized frequency correlation ρ = C_si / sqrt(C_ss C_ii).
    pub fn rho(&self) -> Result<f64> {
        let [[ss, si], [_, ii]] = self.second_moments;
        if !(ss > 0.0 && ii > 0.0) {
            return Err(Error::Analysis("island has zero spectral variance".into()));
        }
        Ok(si / (ss * ii).sqrt())
    }
}

fn flood_support(j: &DMatrix<f64>, seed: (usize, usize), level: f64) -> Vec<(usize, usize)> {
    let (nr, nc) = j.shape();
    let mut seen = vec![false; nr * nc];
    let mut stack = vec![seed];
    let mut out = Vec::new();
    seen[seed.0 * nc + seed.1] = true;
    while let Some((r, c)) = stack.pop() {
        out.push((r, c));
        let mut visit = |rr: usize, cc: usize| {
            let idx = rr * nc + cc;
            if !seen[idx] && j[(rr, cc)] >= level {
                seen[idx] = true;
                stack.push((rr, cc));
            }
        };
        if r > 0 {
            visit(r - 1, c);
        }
        if r + 1 < nr {
            visit(r + 1, c);
        }
        if c > 0 {
            visit(r, c - 1);
        }
        if c + 1 < nc {
            visit(r, c + 1);
        }
    }
    out.sort_unstable();
    out
}

fn second_moments(j: &DMatrix<f64>, support: &[(usize, usize)], ws: &[f64], wi: &[f64]) -> [[f64; 2]; 2] {
    let weight = compensated_sum(support.iter().map(|&(r, c)| j[(r, c)]));
    let ms = compensated_sum(support.iter().map(|&(r, c)| j[(r, c)] * ws[r])) / weight;
    let mi = compensated_sum(support.iter().map(|&(r, c)| j[(r, c)] * wi[c])) / weight;
    let css = compensated_sum(support.iter().map(|&(r, c)| j[(r, c)] * (ws[r] - ms).powi(2))) / weight;
    let cii = compensated_sum(support.iter().map(|&(r, c)| j[(r, c)] * (wi[c] - mi).powi(2))) / weight;
    let csi = compensated_sum(support.iter().map(|&(r, c)| j[(r, c)] * (ws[r] - ms) * (wi[c] - mi))) / weight;
    [[css, csi], [csi, cii]]
}

fn is_local_max(j: &DMatrix<f64>, r: usize, c: usize) -> bool {
    let v = j[(r, c)];
    for dr in -1i64..=1 {
        for dc in -1i64..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (rr, cc) = ((r as i64 + dr) as usize, (c as i64 + dc) as usize);
            let u = j[(rr, cc)];
            // ties go to the first sample in row-major order
            let earlier = (dr, dc) < (0, 0);
            if u > v || (earlier && u == v) {
                return false;
            }
        }
    }
    true
}

fn build_island(
    j: &DMatrix<f64>,
    grid: &SpectralGrid,
    ws: &[f64],
    wi: &[f64],
    peak: (usize, usize),
    smf: Option<&FiberSegment>,
    pump: &PumpPulse,
) -> Result<(Island, f64)> {
    let (r, c) = peak;
    let (nr, nc) = j.shape();
    let ls = grid.signal_wavelengths();
    let li = grid.idler_wavelengths();
    let peak_value = j[(r, c)];
    let support = flood_support(j, peak, SUPPORT_LEVEL * peak_value);

    let rows = support.iter().map(|p| p.0);
    let cols = support.iter().map(|p| p.1);
    let (rmin, rmax) = rows.fold((usize::MAX, 0), |(a, b), x| (a.min(x), b.max(x)));
    let (cmin, cmax) = cols.fold((usize::MAX, 0), |(a, b), x| (a.min(x), b.max(x)));
    if rmax - rmin + 1 < MIN_SAMPLES_ACROSS || cmax - cmin + 1 < MIN_SAMPLES_ACROSS {
        return Err(Error::Resolution(format!(
            "island near ({:.3} nm, {:.3} nm) spans {}x{} samples at half maximum; need {}",
            ls[r] * 1e9,
            li[c] * 1e9,
            rmax - rmin + 1,
            cmax - cmin + 1,
            MIN_SAMPLES_ACROSS
        )));
    }

    let off_s = if r > 0 && r + 1 < nr {
        parabolic_offset(j[(r - 1, c)], peak_value, j[(r + 1, c)])
    } else {
        0.0
    };
    let off_i = if c > 0 && c + 1 < nc {
        parabolic_offset(j[(r, c - 1)], peak_value, j[(r, c + 1)])
    } else {
        0.0
    };
    let center = (ls[r] + off_s * grid.signal_step(), li[c] + off_i * grid.idler_step());
    let theta = match smf {
        Some(smf) => dispersive_phase(omega_unchecked(center.0), omega_unchecked(center.1), smf, pump)?,
        None => 0.0,
    };
    let moments = second_moments(j, &support, ws, wi);
    let rho = moments[0][1] / (moments[0][0] * moments[1][1]).sqrt();
    let island = Island {
        center,
        peak_index: peak,
        order_m: (theta / PI).round() as u32,
        theta,
        peak_intensity: peak_value,
        second_moments: moments,
        correlation_class: CorrelationClass::from_rho(rho),
        rank: IslandRank::Primary,
        support_extent: (ls[rmax] - ls[rmin], li[cmax] - li[cmin]),
        support_points: support.len(),
    };
    Ok((island, theta / PI))
}

/// Catalog of JSI islands.
///
/// Interior local maxima above [`ISLAND_RELATIVE_THRESHOLD`] of the global
/// maximum become islands. The order m is θ(center)/π rounded; the island is
/// primary when θ/π is within [`PRIMARY_TOLERANCE`] of an integer. With a
/// single stage the whole ridge is returned as one primary island of order 0
/// and `smf` is not used.
pub fn find_islands(
    jsi: &DMatrix<f64>,
    grid: &SpectralGrid,
    pump: &PumpPulse,
    smf: &FiberSegment,
    n_stages: usize,
) -> Result<Vec<Island>> {
    let (nr, nc) = jsi.shape();
    if nr != grid.signal_points || nc != grid.idler_points {
        return Err(Error::domain("intensity map does not match the grid"));
    }
    let ws: Vec<f64> = grid.signal_wavelengths().into_iter().map(omega_unchecked).collect();
    let wi: Vec<f64> = grid.idler_wavelengths().into_iter().map(omega_unchecked).collect();
    let global = jsi.iter().cloned().fold(0.0, f64::max);
    if global <= 0.0 {
        return Ok(Vec::new());
    }

    if n_stages <= 1 {
        let (mut r, mut c) = (0, 0);
        for i in 0..nr {
            for k in 0..nc {
                if jsi[(i, k)] > jsi[(r, c)] {
                    r = i;
                    c = k;
                }
            }
        }
        let (mut island, _) = build_island(jsi, grid, &ws, &wi, (r, c), None, pump)?;
        island.order_m = 0;
        island.rank = IslandRank::Primary;
        island.correlation_class = CorrelationClass::AntiCorrelated;
        return Ok(vec![island]);
    }

    let floor = ISLAND_RELATIVE_THRESHOLD * global;
    let mut islands = Vec::new();
    for r in 1..nr.saturating_sub(1) {
        for c in 1..nc.saturating_sub(1) {
            if jsi[(r, c)] > floor && is_local_max(jsi, r, c) {
                let (mut island, phase) = build_island(jsi, grid, &ws, &wi, (r, c), Some(smf), pump)?;
                if (phase - phase.round()).abs() > PRIMARY_TOLERANCE {
                    island.rank = IslandRank::Secondary;
                }
                islands.push(island);
            }
        }
    }
    islands.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.center.0.total_cmp(&b.center.0)));
    Ok(islands)
}

/// Correlation class of an island plus the analytic stripe-width predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub class: CorrelationClass,
    pub rho: f64,
    /// σ_int / (√2 σ_p); 1 marks the analytic roundness condition.
    pub stripe_ratio: f64,
}

pub fn classify_correlation(island: &Island, pump: &PumpPulse, sigma_int: f64) -> Result<CorrelationReport> {
    let rho = island.rho()?;
    Ok(CorrelationReport {
        class: CorrelationClass::from_rho(rho),
        rho,
        stripe_ratio: sigma_int / (2f64.sqrt() * pump_sigma(pump)),
    })
}

/// Rectangular passband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterBand {
    /// m
    pub center: f64,
    /// m
    pub width: f64,
}

impl FilterBand {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && center.is_finite() && center > 0.0) {
            return Err(Error::domain(format!(
                "filter band needs a positive center and width, got {center:e} / {width:e}"
            )));
        }
        Ok(Self { center, width })
    }

    /// Band spanning exactly `[min, max]`.
    pub fn spanning(range: [f64; 2]) -> Result<Self> {
        Self::new(0.5 * (range[0] + range[1]), range[1] - range[0])
    }

    pub fn lower(&self) -> f64 {
        self.center - 0.5 * self.width
    }

    pub fn upper(&self) -> f64 {
        self.center + 0.5 * self.width
    }

    pub fn contains(&self, lambda: f64) -> bool {
        (lambda - self.center).abs() <= 0.5 * self.width * (1.0 + 1e-9)
    }

    pub(crate) fn check_inside(&self, range: [f64; 2], name: &str) -> Result<()> {
        let tol = 1e-9 * (range[1] - range[0]);
        if self.lower() < range[0] - tol || self.upper() > range[1] + tol {
            return Err(Error::domain(format!(
                "{name} band [{:.4}, {:.4}] nm lies outside the grid [{:.4}, {:.4}] nm",
                self.lower() * 1e9,
                self.upper() * 1e9,
                range[0] * 1e9,
                range[1] * 1e9
            )));
        }
        Ok(())
    }
}

/// Bands centered on an island, each `scale` times its half-maximum extent.
pub fn matched_bands(island: &Island, scale: f64) -> Result<(FilterBand, FilterBand)> {
    Ok((
        FilterBand::new(island.center.0, scale * island.support_extent.0)?,
        FilterBand::new(island.center.1, scale * island.support_extent.1)?,
    ))
}

pub(crate) fn band_masks(grid: &SpectralGrid, signal: &FilterBand, idler: &FilterBand) -> Result<(Vec<bool>, Vec<bool>)> {
    signal.check_inside(grid.signal_range, "signal")?;
    idler.check_inside(grid.idler_range, "idler")?;
    Ok((
        grid.signal_wavelengths().iter().map(|&l| signal.contains(l)).collect(),
        grid.idler_wavelengths().iter().map(|&l| idler.contains(l)).collect(),
    ))
}

/// Zeroes the amplitude outside the signal × idler rectangle.
pub fn apply_filter(jsa: &JointSpectrum, signal_band: &FilterBand, idler_band: &FilterBand) -> Result<JointSpectrum> {
    let (ms, mi) = band_masks(jsa.grid(), signal_band, idler_band)?;
    let amp = jsa.amplitude();
    let filtered = DMatrix::from_fn(amp.nrows(), amp.ncols(), |r, c| {
        if ms[r] && mi[c] {
            amp[(r, c)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(jsa.with_amplitude(filtered))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtDecomposition {
    /// Singular values of the unit-norm amplitude matrix, descending.
    pub singular_values: Vec<f64>,
    /// Squared singular values; they sum to 1.
    pub weights: Vec<f64>,
    /// K = 1 / Σ λ_k².
    pub schmidt_number: f64,
    /// 1 / K
    pub purity: f64,
}

/// Schmidt decomposition of the discretized amplitude via SVD.
pub fn schmidt_analysis(jsa: &JointSpectrum) -> Result<SchmidtDecomposition> {
    let amp = jsa.amplitude();
    // all-zero rows and columns do not change the singular values
    let rows: Vec<usize> = (0..amp.nrows())
        .filter(|&r| amp.row(r).iter().any(|z| z.norm_sqr() > 0.0))
        .collect();
    let cols: Vec<usize> = (0..amp.ncols())
        .filter(|&c| amp.column(c).iter().any(|z| z.norm_sqr() > 0.0))
        .collect();
    if rows.is_empty() {
        return Err(Error::domain("Schmidt decomposition of an all-zero spectrum"));
    }
    let norm = compensated_sum(amp.iter().map(|z| z.norm_sqr())).sqrt();
    let m = DMatrix::from_fn(rows.len(), cols.len(), |a, b| amp[(rows[a], cols[b])] / norm);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let weights: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let total = compensated_sum(weights.iter().copied());
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let schmidt_number = 1.0 / compensated_sum(weights.iter().map(|w| w * w));
    Ok(SchmidtDecomposition {
        singular_values: sv,
        weights,
        schmidt_number,
        purity: 1.0 / schmidt_number,
    })
}

/// Conditional probabilities of finding the partner photon in its band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollectionEfficiency {
    /// P(idler in band | signal in band).
    pub given_signal: f64,
    /// P(signal in band | idler in band).
    pub given_idler: f64,
}

pub fn collection_efficiency(
    jsa: &JointSpectrum,
    signal_band: &FilterBand,
    idler_band: &FilterBand,
) -> Result<CollectionEfficiency> {
    let (ms, mi) = band_masks(jsa.grid(), signal_band, idler_band)?;
    let j = jsi(jsa);
    let mut both = CompensatedSum::new();
    let mut sig = CompensatedSum::new();
    let mut idl = CompensatedSum::new();
    for r in 0..j.nrows() {
        for c in 0..j.ncols() {
            let v = j[(r, c)];
            if ms[r] {
                sig.add(v);
                if mi[c] {
                    both.add(v);
                }
            }
            if mi[c] {
                idl.add(v);
            }
        }
    }
    let (both, sig, idl) = (both.value(), sig.value(), idl.value());
    if sig <= 0.0 || idl <= 0.0 {
        return Err(Error::domain("no spectral mass inside the filter band"));
    }
    Ok(CollectionEfficiency {
        given_signal: both / sig,
        given_idler: both / idl,
    })
}
