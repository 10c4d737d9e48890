//! Virtual coincidence-counting experiment: dual-band filter scans with
//! pulsed Poissonian counting, a linear Raman background and detection
//! losses, followed by the quadratic-fit Raman subtraction.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{band_masks, jsi, Axis, FilterBand, MarginalSpectrum};
use crate::engine::{synthesize_jsa, JointSpectrum, Normalization};
use crate::error::{Error, Result};
use crate::model::{InterferometerSpec, PumpPulse, SpectralGrid};
use crate::numeric::compensated_sum;

/// Idler wavelength energy-conjugate to `signal` for a degenerate pump.
pub fn conjugate_wavelength(signal: f64, pump_wavelength: f64) -> Result<f64> {
    let inv = 2.0 / pump_wavelength - 1.0 / signal;
    if !(signal > 0.0 && inv > 0.0) {
        return Err(Error::domain(format!(
            "no conjugate wavelength for signal {:.3} nm",
            signal * 1e9
        )));
    }
    Ok(1.0 / inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    /// Signal and idler centers advance together, index by index.
    Paired,
    /// Every signal center against every idler center.
    Raster,
}

/// Filter settings and pump powers of a scan, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    pub signal_centers: Vec<f64>,
    pub idler_centers: Vec<f64>,
    pub band_width: f64,
    /// s per point
    pub integration_time: f64,
    pub avg_powers: Vec<f64>,
    pub mode: ScanMode,
}

/// One acquisition of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub signal_band: FilterBand,
    pub idler_band: FilterBand,
    pub avg_power: f64,
    pub integration_time: f64,
}

impl ScanPlan {
    pub fn new(
        signal_centers: Vec<f64>,
        idler_centers: Vec<f64>,
        band_width: f64,
        integration_time: f64,
        avg_powers: Vec<f64>,
        mode: ScanMode,
    ) -> Result<Self> {
        if mode == ScanMode::Paired && signal_centers.len() != idler_centers.len() {
            return Err(Error::domain(format!(
                "paired scan has {} signal and {} idler centers",
                signal_centers.len(),
                idler_centers.len()
            )));
        }
        if signal_centers.is_empty() || idler_centers.is_empty() || avg_powers.is_empty() {
            return Err(Error::domain("scan needs at least one center and one power"));
        }
        if !(band_width.is_finite() && band_width > 0.0) {
            return Err(Error::domain("band width must be positive"));
        }
        if !(integration_time.is_finite() && integration_time > 0.0) {
            return Err(Error::domain("integration time must be positive"));
        }
        if avg_powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::domain("pump powers must be finite and non-negative"));
        }
        if signal_centers.iter().chain(&idler_centers).any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::domain("band centers must be positive"));
        }
        Ok(Self {
            signal_centers,
            idler_centers,
            band_width,
            integration_time,
            avg_powers,
            mode,
        })
    }

    /// Paired scan whose idler centers are the energy conjugates of the
    /// signal centers.
    pub fn conjugate(
        signal_centers: Vec<f64>,
        pump_wavelength: f64,
        band_width: f64,
        integration_time: f64,
        avg_powers: Vec<f64>,
    ) -> Result<Self> {
        let idler = signal_centers
            .iter()
            .map(|&s| conjugate_wavelength(s, pump_wavelength))
            .collect::<Result<Vec<_>>>()?;
        Self::new(signal_centers, idler, band_width, integration_time, avg_powers, ScanMode::Paired)
    }

    /// Acquisitions in execution order: powers outermost, then signal
    /// centers, then (raster only) idler centers.
    pub fn points(&self) -> Result<Vec<ScanPoint>> {
        let mut out = Vec::new();
        for &p in &self.avg_powers {
            for (k, &s) in self.signal_centers.iter().enumerate() {
                let idlers: &[f64] = match self.mode {
                    ScanMode::Paired => std::slice::from_ref(&self.idler_centers[k]),
                    ScanMode::Raster => &self.idler_centers,
                };
                for &i in idlers {
                    out.push(ScanPoint {
                        signal_band: FilterBand::new(s, self.band_width)?,
                        idler_band: FilterBand::new(i, self.band_width)?,
                        avg_power: p,
                        integration_time: self.integration_time,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Raman emission rate per unit pump power into one filter band, before
/// detection losses, counts·s⁻¹·W⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RamanDensity {
    Flat(f64),
    /// Linear interpolation in wavelength (m), clamped at the ends.
    Table { wavelengths: Vec<f64>, densities: Vec<f64> },
}

impl RamanDensity {
    pub fn at(&self, lambda: f64) -> f64 {
        match self {
            RamanDensity::Flat(d) => *d,
            RamanDensity::Table { wavelengths: w, densities: d } => {
                if lambda <= w[0] {
                    return d[0];
                }
                if lambda >= w[w.len() - 1] {
                    return d[d.len() - 1];
                }
                let k = w.partition_point(|&x| x <= lambda);
                let t = (lambda - w[k - 1]) / (w[k] - w[k - 1]);
                d[k - 1] + t * (d[k] - d[k - 1])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RamanDensity::Flat(d) if d.is_finite() && *d >= 0.0 => Ok(()),
            RamanDensity::Flat(d) => Err(Error::domain(format!("Raman density {d} must be finite and non-negative"))),
            RamanDensity::Table { wavelengths, densities } => {
                if wavelengths.is_empty() || wavelengths.len() != densities.len() {
                    return Err(Error::domain("Raman table needs equal, non-empty columns"));
                }
                if !wavelengths.windows(2).all(|w| w[1] > w[0]) {
                    return Err(Error::domain("Raman table wavelengths must be strictly ascending"));
                }
                if densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(Error::domain("Raman densities must be finite and non-negative"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionModel {
    pub efficiency_signal: f64,
    pub efficiency_idler: f64,
    pub raman_density: RamanDensity,
    /// Emitted pairs per second per unit JSI mass (m²) at the family's
    /// reference power.
    pub calibration: f64,
}

impl DetectionModel {
    pub fn new(efficiency_signal: f64, efficiency_idler: f64, raman_density: RamanDensity, calibration: f64) -> Result<Self> {
        for (name, eta) in [("signal", efficiency_signal), ("idler", efficiency_idler)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::domain(format!("{name} efficiency {eta} is outside (0, 1]")));
            }
        }
        raman_density.validate()?;
        if !(calibration.is_finite() && calibration >= 0.0) {
            return Err(Error::domain("calibration must be finite and non-negative"));
        }
        Ok(Self {
            efficiency_signal,
            efficiency_idler,
            raman_density,
            calibration,
        })
    }

    pub fn with_calibration(&self, calibration: f64) -> Result<Self> {
        Self::new(self.efficiency_signal, self.efficiency_idler, self.raman_density.clone(), calibration)
    }
}

/// Joint spectrum synthesized at a reference pump power. FWM emission is a
/// two-photon process, so the spectrum at another power P is taken as the
/// reference scaled by (P/P_ref)² in intensity.
#[derive(Debug, Clone)]
pub struct JsaFamily {
    reference: JointSpectrum,
    reference_power: f64,
    intensity: DMatrix<f64>,
}

impl JsaFamily {
    pub fn new(reference: JointSpectrum, reference_power: f64) -> Result<Self> {
        if !(reference_power.is_finite() && reference_power > 0.0) {
            return Err(Error::domain("reference power must be positive"));
        }
        let intensity = jsi(&reference);
        Ok(Self {
            reference,
            reference_power,
            intensity,
        })
    }

    /// Raw spectrum at the pump's own average power.
    pub fn synthesize(spec: &InterferometerSpec, pump: &PumpPulse, grid: &SpectralGrid) -> Result<Self> {
        let jsa = synthesize_jsa(spec, pump, grid, Normalization::Raw)?;
        Self::new(jsa, pump.avg_power)
    }

    pub fn reference(&self) -> &JointSpectrum {
        &self.reference
    }

    pub fn reference_power(&self) -> f64 {
        self.reference_power
    }

    fn power_scale(&self, avg_power: f64) -> f64 {
        (avg_power / self.reference_power).powi(2)
    }

    /// (signal-band, idler-band, both-bands) JSI mass at the reference power.
    fn band_masses(&self, signal: &FilterBand, idler: &FilterBand) -> Result<(f64, f64, f64)> {
        let grid = self.reference.grid();
        let (ms, mi) = band_masks(grid, signal, idler)?;
        let j = &self.intensity;
        let area = grid.signal_step() * grid.idler_step();
        let rows = || (0..j.nrows()).filter(|&r| ms[r]);
        let cols = || (0..j.ncols()).filter(|&c| mi[c]);
        let s = compensated_sum(rows().flat_map(|r| (0..j.ncols()).map(move |c| j[(r, c)])));
        let i = compensated_sum((0..j.nrows()).flat_map(|r| cols().map(move |c| j[(r, c)])));
        let both = compensated_sum(rows().flat_map(|r| cols().map(move |c| j[(r, c)])));
        Ok((s * area, i * area, both * area))
    }
}

/// Mean count rates of one acquisition, counts/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedRates {
    pub singles_s: f64,
    pub singles_i: f64,
    pub cc: f64,
    pub cacc: f64,
}

impl ExpectedRates {
    pub fn true_coincidences(&self) -> f64 {
        self.cc - self.cacc
    }
}

/// Mean singles, coincidences and accidentals for one filter setting.
///
/// FWM singles are η·calibration·(band mass) and the pair rate is
/// η_s·η_i·calibration·(mass in both bands), each scaled by (P/P_ref)².
/// Raman adds density·P·η to each arm. Accidentals follow the adjacent-pulse
/// product (S_s/f)(S_i/f)f.
pub fn expected_rates(
    family: &JsaFamily,
    point: &ScanPoint,
    detection: &DetectionModel,
    rep_rate: f64,
) -> Result<ExpectedRates> {
    if !(rep_rate > 0.0) {
        return Err(Error::domain("repetition rate must be positive"));
    }
    let (ms, mi, both) = family.band_masses(&point.signal_band, &point.idler_band)?;
    let p = point.avg_power;
    let k = family.power_scale(p) * detection.calibration;
    let (es, ei) = (detection.efficiency_signal, detection.efficiency_idler);
    let singles_s = es * k * ms + detection.raman_density.at(point.signal_band.center) * p * es;
    let singles_i = ei * k * mi + detection.raman_density.at(point.idler_band.center) * p * ei;
    let pair = es * ei * k * both;
    let cacc = singles_s * singles_i / rep_rate;
    Ok(ExpectedRates {
        singles_s,
        singles_i,
        cc: pair + cacc,
        cacc,
    })
}

/// Calibration (pairs/s per unit JSI mass) placing the largest true
/// coincidence rate over all positions of a pair of `band_width` bands at
/// `target` counts/s.
pub fn calibrate_to_peak(
    family: &JsaFamily,
    band_width: f64,
    avg_power: f64,
    efficiency_signal: f64,
    efficiency_idler: f64,
    target: f64,
) -> Result<f64> {
    let grid = family.reference.grid();
    let j = &family.intensity;
    let (nr, nc) = j.shape();
    // summed-area table of JSI mass
    let area = grid.signal_step() * grid.idler_step();
    let mut sat = DMatrix::<f64>::zeros(nr + 1, nc + 1);
    for r in 0..nr {
        let mut row = 0.0;
        for c in 0..nc {
            row += j[(r, c)] * area;
            sat[(r + 1, c + 1)] = sat[(r, c + 1)] + row;
        }
    }
    // a band holds at most this many consecutive samples wherever it sits
    let window = |step: f64, n: usize| ((band_width / step * (1.0 + 1e-9)).floor() as usize + 1).min(n);
    let ks = window(grid.signal_step(), nr);
    let kc = window(grid.idler_step(), nc);
    let rs: Vec<(usize, usize)> = (0..=nr - ks).map(|r| (r, r + ks)).collect();
    let cs: Vec<(usize, usize)> = (0..=nc - kc).map(|c| (c, c + kc)).collect();
    let mut best = 0.0f64;
    for &(r0, r1) in &rs {
        for &(c0, c1) in &cs {
            let m = sat[(r1, c1)] - sat[(r0, c1)] - sat[(r1, c0)] + sat[(r0, c0)];
            best = best.max(m);
        }
    }
    let per_unit = efficiency_signal * efficiency_idler * family.power_scale(avg_power) * best;
    if !(per_unit > 0.0) {
        return Err(Error::Analysis("no pair mass inside any band position".into()));
    }
    Ok(target / per_unit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRecord {
    /// m
    pub signal_center: f64,
    /// m
    pub idler_center: f64,
    /// W
    pub avg_power: f64,
    /// s
    pub integration_time: f64,
    pub singles_s: u64,
    pub singles_i: u64,
    pub cc: u64,
    pub cacc: u64,
    /// cc − cacc; negative values are kept.
    pub true_coincidences: i64,
}

fn draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // means here are far below the u64 range
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Poisson-sampled records for every point of `plan`. Point k draws from
/// its own ChaCha8 stream k under `seed`, so the result does not depend on
/// evaluation order or thread count.
pub fn run_scan(
    family: &JsaFamily,
    plan: &ScanPlan,
    detection: &DetectionModel,
    rep_rate: f64,
    seed: u64,
) -> Result<Vec<ScanRecord>> {
    let points = plan.points()?;
    points
        .par_iter()
        .enumerate()
        .map(|(k, point)| {
            let rates = expected_rates(family, point, detection, rep_rate)?;
            let t = point.integration_time;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let singles_s = draw(&mut rng, rates.singles_s * t);
            let singles_i = draw(&mut rng, rates.singles_i * t);
            let cc = draw(&mut rng, rates.cc * t);
            let cacc = draw(&mut rng, rates.cacc * t);
            Ok(ScanRecord {
                signal_center: point.signal_band.center,
                idler_center: point.idler_band.center,
                avg_power: point.avg_power,
                integration_time: t,
                singles_s,
                singles_i,
                cc,
                cacc,
                true_coincidences: cc as i64 - cacc as i64,
            })
        })
        .collect()
}

/// R = s₁P + s₂P² fitted through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RamanFit {
    /// counts·s⁻¹·W⁻¹
    pub s1: f64,
    /// counts·s⁻¹·W⁻²
    pub s2: f64,
    /// Root-mean-square residual, counts/s.
    pub residual: f64,
}

impl RamanFit {
    pub fn evaluate(&self, p: f64) -> f64 {
        self.s1 * p + self.s2 * p * p
    }

    /// A negative quadratic term is unphysical but can arise from noise.
    pub fn has_negative_quadratic(&self) -> bool {
        self.s2 < 0.0
    }
}

pub fn raman_fit(powers: &[f64], rates: &[f64]) -> Result<RamanFit> {
    if powers.len() != rates.len() {
        return Err(Error::Fit("powers and rates differ in length".into()));
    }
    let mut distinct: Vec<f64> = powers.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct powers, got {}", distinct.len())));
    }
    if powers.iter().chain(rates).any(|x| !x.is_finite()) {
        return Err(Error::Fit("non-finite input".into()));
    }
    // work in units of the largest power for conditioning
    let scale = powers.iter().fold(0.0f64, |a, p| a.max(p.abs()));
    if scale == 0.0 {
        return Err(Error::Fit("all powers are zero".into()));
    }
    let x: Vec<f64> = powers.iter().map(|p| p / scale).collect();
    let sum = |f: &dyn Fn(usize) -> f64| compensated_sum((0..x.len()).map(f));
    let a = Matrix2::new(
        sum(&|k| x[k].powi(2)),
        sum(&|k| x[k].powi(3)),
        sum(&|k| x[k].powi(3)),
        sum(&|k| x[k].powi(4)),
    );
    let b = Vector2::new(sum(&|k| x[k] * rates[k]), sum(&|k| x[k].powi(2) * rates[k]));
    let det = a.determinant();
    if !(det.abs() > 1e-12 * a[(0, 0)] * a[(1, 1)]) {
        return Err(Error::Fit("singular normal equations".into()));
    }
    let sol = a.lu().solve(&b).ok_or_else(|| Error::Fit("singular normal equations".into()))?;
    let fit = RamanFit {
        s1: sol[0] / scale,
        s2: sol[1] / (scale * scale),
        residual: 0.0,
    };
    let ss = compensated_sum(powers.iter().zip(rates).map(|(&p, &r)| (r - fit.evaluate(p)).powi(2)));
    Ok(RamanFit {
        residual: (ss / powers.len() as f64).sqrt(),
        ..fit
    })
}

/// (r − 1)/r for a peak/valley ratio of fitted quadratic terms.
pub fn visibility_from_quadratic_ratio(ratio: f64) -> Result<f64> {
    if ratio.is_nan() || ratio < 1.0 {
        return Err(Error::domain(format!(
            "quadratic ratio {ratio} is below 1; peak and valley are swapped"
        )));
    }
    if ratio.is_infinite() {
        return Ok(1.0);
    }
    Ok((ratio - 1.0) / ratio)
}

/// One singles measurement of a power sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    /// m
    pub wavelength: f64,
    /// W
    pub avg_power: f64,
    /// counts/s
    pub rate: f64,
}

/// Singles-rate samples of one arm taken from scan records.
pub fn sweep_samples(records: &[ScanRecord], axis: Axis) -> Vec<SweepSample> {
    records
        .iter()
        .map(|r| {
            let (wavelength, counts) = match axis {
                Axis::Signal => (r.signal_center, r.singles_s),
                Axis::Idler => (r.idler_center, r.singles_i),
            };
            SweepSample {
                wavelength,
                avg_power: r.avg_power,
                rate: counts as f64 / r.integration_time,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavelengthFit {
    /// m
    pub wavelength: f64,
    pub fit: RamanFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamanSubtraction {
    /// s₂P_ref² per wavelength normalized to peak 1; negative estimates
    /// are clipped to 0.
    pub marginal: MarginalSpectrum,
    pub fits: Vec<WavelengthFit>,
}

/// Fits every wavelength's power sweep and keeps the quadratic (FWM) term.
pub fn raman_subtract(
    samples: &[SweepSample],
    axis: Axis,
    reference_power: f64,
    band_width: f64,
    reference_wavelength: f64,
) -> Result<RamanSubtraction> {
    // for positive floats the bit pattern orders like the value
    let mut groups: BTreeMap<u64, Vec<SweepSample>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.wavelength.to_bits()).or_default().push(*s);
    }
    let power_set = |g: &[SweepSample]| {
        let mut p: Vec<u64> = g.iter().map(|s| s.avg_power.to_bits()).collect();
        p.sort_unstable();
        p.dedup();
        p
    };
    let all_powers = power_set(samples);
    let mut fits = Vec::with_capacity(groups.len());
    for g in groups.values() {
        let wavelength = g[0].wavelength;
        if power_set(g) != all_powers {
            return Err(Error::IncompleteData(format!(
                "power sweep at {:.3} nm is missing some of the scanned powers",
                wavelength * 1e9
            )));
        }
        let powers: Vec<f64> = g.iter().map(|s| s.avg_power).collect();
        let rates: Vec<f64> = g.iter().map(|s| s.rate).collect();
        let fit = raman_fit(&powers, &rates).map_err(|e| match e {
            Error::Fit(m) => Error::IncompleteData(format!("at {:.3} nm: {m}", wavelength * 1e9)),
            other => other,
        })?;
        fits.push(WavelengthFit { wavelength, fit });
    }
    let values: Vec<f64> = fits
        .iter()
        .map(|f| (f.fit.s2 * reference_power * reference_power).max(0.0))
        .collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Analysis("no positive quadratic term at any wavelength".into()));
    }
    let marginal = MarginalSpectrum::new(
        axis,
        fits.iter().map(|f| f.wavelength).collect(),
        values.iter().map(|v| v / peak).collect(),
        band_width,
        reference_wavelength,
    )?;
    Ok(RamanSubtraction { marginal, fits })
}

/// Mean rates for every point of `plan` in the same order as [`run_scan`].
pub fn expected_scan(
    family: &JsaFamily,
    plan: &ScanPlan,
    detection: &DetectionModel,
    rep_rate: f64,
) -> Result<Vec<(ScanPoint, ExpectedRates)>> {
    plan.points()?
        .into_iter()
        .map(|p| Ok((p, expected_rates(family, &p, detection, rep_rate)?)))
        .collect()
}
