//! Command implementations behind the `nli` binary. Each command reads a
//! [`RunConfig`], writes CSV files into an output directory and returns a
//! manifest listing them with their SHA-256 digests.

use std::collections::BTreeSet;
use std::f64::consts::SQRT_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{find_islands, jsi, locate_fringe, marginal, Axis, MarginalSpectrum};
use crate::config::{segments_to_spec, CalibrationConfig, NormalizationConfig, RunConfig};
use crate::engine::{binomial_lengths, island_center, stripe_width, synthesize_jsa, Normalization};
use crate::error::{Error, Result};
use crate::experiment::{calibrate_to_peak, raman_subtract, run_scan, sweep_samples, JsaFamily, RamanSubtraction};
use crate::model::{pump_sigma, validate_spec, FiberSegment, PumpPulse, SpectralGrid, ValidatedSpec};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmittedFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub timestamp_unix: u64,
    pub files: Vec<EmittedFile>,
    pub warnings: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of the configuration after command-line overrides. The output
/// directory is left out.
pub fn config_digest(config: &RunConfig) -> Result<String> {
    let mut c = config.clone();
    c.output_dir = None;
    Ok(sha256_hex(&serde_json::to_vec(&c)?))
}

struct Outputs {
    dir: PathBuf,
    files: Vec<EmittedFile>,
    warnings: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(EmittedFile {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Header row first, so empty tables still describe themselves.
    fn write_csv<T: Serialize>(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.write(name, &bytes)
    }

    fn finish(mut self, command: &str, config_sha256: String, seed: Option<u64>) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config_sha256,
            seed,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            files: std::mem::take(&mut self.files),
            warnings: std::mem::take(&mut self.warnings),
        };
        fs::write(self.dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

struct Prepared {
    spec: ValidatedSpec,
    pump: PumpPulse,
    grid: SpectralGrid,
    gap: Option<FiberSegment>,
}

fn prepare(config: &RunConfig) -> Result<Prepared> {
    let raw = config.spec();
    let spec = validate_spec(&raw)?;
    let gap = raw.segments.get(1).cloned();
    Ok(Prepared {
        spec,
        pump: config.pump.to_pump()?,
        grid: config.grid.to_grid()?,
        gap,
    })
}

fn to_nm(x: f64) -> f64 {
    x * 1e9
}

#[derive(Serialize)]
struct JsiRow {
    lambda_s_nm: f64,
    lambda_i_nm: f64,
    jsi: f64,
}

#[derive(Serialize)]
struct IslandRow {
    center_s_nm: f64,
    center_i_nm: f64,
    m: u32,
    rank: &'static str,
    class: &'static str,
    rho: f64,
    peak: f64,
}

/// jsi.csv (long format) and islands.csv.
pub fn cmd_jsi(config: &RunConfig, out: &Path) -> Result<RunManifest> {
    let p = prepare(config)?;
    let norm = match config.analysis.normalization {
        NormalizationConfig::Raw => Normalization::Raw,
        NormalizationConfig::PeakUnity => Normalization::PeakUnity,
    };
    let jsa = synthesize_jsa(&config.spec(), &p.pump, &p.grid, norm)?;
    let j = jsi(&jsa);
    let ls = p.grid.signal_wavelengths();
    let li = p.grid.idler_wavelengths();
    // a single stage has no gap fiber and the island finder ignores it
    let gap = p.gap.clone().unwrap_or_else(|| FiberSegment::smf(0.0));
    let islands = find_islands(&j, &p.grid, &p.pump, &gap, p.spec.n_stages())?;

    let mut o = Outputs::new(out)?;
    o.write_csv(
        "jsi.csv",
        &["lambda_s_nm", "lambda_i_nm", "jsi"],
        (0..ls.len()).flat_map(|r| {
            let (ls, li, j) = (&ls, &li, &j);
            (0..li.len()).map(move |c| JsiRow {
                lambda_s_nm: to_nm(ls[r]),
                lambda_i_nm: to_nm(li[c]),
                jsi: j[(r, c)],
            })
        }),
    )?;
    o.write_csv(
        "islands.csv",
        &["center_s_nm", "center_i_nm", "m", "rank", "class", "rho", "peak"],
        islands.iter().map(|isl| IslandRow {
            center_s_nm: to_nm(isl.center.0),
            center_i_nm: to_nm(isl.center.1),
            m: isl.order_m,
            rank: isl.rank.as_str(),
            class: isl.correlation_class.as_str(),
            rho: isl.rho().unwrap_or(f64::NAN),
            peak: isl.peak_intensity,
        }),
    )?;
    o.finish("jsi", config_digest(config)?, config.seed)
}

#[derive(Serialize)]
struct MarginalRow {
    lambda_nm: f64,
    intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityRow {
    pub axis: &'static str,
    pub m: u32,
    pub peak_nm: f64,
    pub trough_nm: f64,
    pub i_max: f64,
    pub i_min: f64,
    pub visibility: f64,
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Signal => "signal",
        Axis::Idler => "idler",
    }
}

/// Visibility of every fringe order whose analytic island center lies in
/// the marginal's range. Orders whose fringe cannot be located produce a
/// warning instead of a row.
pub fn fringe_visibilities(
    m: &MarginalSpectrum,
    gap: &FiberSegment,
    pump: &PumpPulse,
    max_order: u32,
    warnings: &mut Vec<String>,
) -> Result<Vec<VisibilityRow>> {
    let lo = m.wavelengths[0];
    let hi = m.wavelengths[m.wavelengths.len() - 1];
    let mut rows = Vec::new();
    for order in 1..=max_order {
        let (s, i) = island_center(order as f64, gap, pump)?;
        let target = match m.axis {
            Axis::Signal => s,
            Axis::Idler => i,
        };
        if target < lo || target > hi {
            continue;
        }
        match locate_fringe(m, target) {
            Ok(f) => rows.push(VisibilityRow {
                axis: axis_name(m.axis),
                m: order,
                peak_nm: to_nm(f.peak_wavelength),
                trough_nm: to_nm(f.trough_wavelength),
                i_max: f.i_max,
                i_min: f.i_min,
                visibility: f.visibility,
            }),
            Err(e) => warnings.push(format!("{} fringe m = {order}: {e}", axis_name(m.axis))),
        }
    }
    Ok(rows)
}

/// marginal_s.csv, marginal_i.csv and visibility.csv.
pub fn cmd_marginal(config: &RunConfig, out: &Path) -> Result<RunManifest> {
    let p = prepare(config)?;
    let jsa = synthesize_jsa(&config.spec(), &p.pump, &p.grid, Normalization::Raw)?;
    let bw = crate::model::units::nm(config.analysis.band_width_nm);
    let ms = marginal(&jsa, Axis::Signal, bw)?;
    let mi = marginal(&jsa, Axis::Idler, bw)?;

    let mut o = Outputs::new(out)?;
    let mut vis = Vec::new();
    if let Some(gap) = p.gap.as_ref() {
        for m in [&ms, &mi] {
            vis.extend(fringe_visibilities(m, gap, &p.pump, config.analysis.max_order, &mut o.warnings)?);
        }
    }
    for (name, m) in [("marginal_s.csv", &ms), ("marginal_i.csv", &mi)] {
        o.write_csv(
            name,
            &["lambda_nm", "intensity"],
            m.wavelengths.iter().zip(&m.intensity).map(|(&l, &y)| MarginalRow {
                lambda_nm: to_nm(l),
                intensity: y,
            }),
        )?;
    }
    o.write_csv(
        "visibility.csv",
        &["axis", "m", "peak_nm", "trough_nm", "i_max", "i_min", "visibility"],
        vis,
    )?;
    o.finish("marginal", config_digest(config)?, config.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignRow {
    pub m: u32,
    pub sigma_int_rad_per_s: f64,
    pub stripe_ratio: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub n_stages: usize,
    /// m
    pub lengths: Vec<f64>,
    pub rows: Vec<DesignRow>,
    /// Order whose stripe ratio σ_int/(√2σ_p) is closest to 1.
    pub flagged_m: u32,
}

/// Binomial stage lengths and the roundness predictor for orders 1..=max_m.
pub fn design_report(n_stages: usize, l1: f64, gap: &FiberSegment, pump: &PumpPulse, max_m: u32) -> Result<DesignReport> {
    if n_stages < 2 {
        return Err(Error::domain("a design needs at least two stages"));
    }
    if !(l1.is_finite() && l1 > 0.0) {
        return Err(Error::domain("first stage length must be positive"));
    }
    if max_m == 0 {
        return Err(Error::domain("max order must be at least 1"));
    }
    let sp = pump_sigma(pump);
    let mut rows = (1..=max_m)
        .map(|m| {
            let s = stripe_width(n_stages, m, gap, pump)?;
            Ok(DesignRow {
                m,
                sigma_int_rad_per_s: s,
                stripe_ratio: s / (SQRT_2 * sp),
                flagged: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.stripe_ratio - 1.0).abs().total_cmp(&(b.1.stripe_ratio - 1.0).abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    rows[best].flagged = true;
    Ok(DesignReport {
        n_stages,
        lengths: binomial_lengths(n_stages, l1),
        flagged_m: rows[best].m,
        rows,
    })
}

#[derive(Serialize)]
struct LengthRow {
    stage: usize,
    length_m: f64,
}

/// Design report; also writes design.csv and design_lengths.csv when an
/// output directory is given. Pump and gap fiber come from `config` when
/// present, else the reference pump and 10 m of standard fiber.
pub fn cmd_design(
    n_stages: usize,
    l1: f64,
    max_m: u32,
    config: Option<&RunConfig>,
    out: Option<&Path>,
) -> Result<(DesignReport, Option<RunManifest>)> {
    let (pump, gap) = match config {
        Some(c) => {
            let gap = c
                .segments
                .iter()
                .map(|s| s.to_segment())
                .find(|s| s.kind == crate::model::SegmentKind::Dispersive)
                .ok_or_else(|| Error::Config("config has no dispersive segment".into()))?;
            (c.pump.to_pump()?, gap)
        }
        None => (PumpPulse::reference(), FiberSegment::smf(10.0)),
    };
    let report = design_report(n_stages, l1, &gap, &pump, max_m)?;
    let manifest = match out {
        Some(dir) => {
            let mut o = Outputs::new(dir)?;
            o.write_csv(
                "design.csv",
                &["m", "sigma_int_rad_per_s", "stripe_ratio", "flagged"],
                report.rows.iter().copied(),
            )?;
            o.write_csv(
                "design_lengths.csv",
                &["stage", "length_m"],
                report.lengths.iter().enumerate().map(|(k, &l)| LengthRow {
                    stage: k + 1,
                    length_m: l,
                }),
            )?;
            let inputs = serde_json::json!({
                "n_stages": n_stages,
                "l1_m": l1,
                "max_m": max_m,
                "config": config,
            });
            let digest = sha256_hex(&serde_json::to_vec(&inputs)?);
            Some(o.finish("design", digest, None)?)
        }
        None => None,
    };
    Ok((report, manifest))
}

#[derive(Serialize)]
struct ScanRow {
    lambda_s_nm: f64,
    lambda_i_nm: f64,
    #[serde(rename = "P_a_uW")]
    p_a_uw: f64,
    t_s: f64,
    singles_s: u64,
    singles_i: u64,
    cc: u64,
    cacc: u64,
    #[serde(rename = "true")]
    true_cc: i64,
}

#[derive(Serialize)]
struct FitRow {
    axis: &'static str,
    lambda_nm: f64,
    s1_cps_per_w: f64,
    s2_cps_per_w2: f64,
    residual_cps: f64,
}

#[derive(Serialize)]
struct SubtractedRow {
    axis: &'static str,
    lambda_nm: f64,
    fwm_normalized: f64,
}

/// scan.csv, ramanfit.csv, subtracted.csv and manifest.json.
pub fn cmd_experiment(config: &RunConfig, out: &Path) -> Result<RunManifest> {
    let (scan, det, seed) = config.check_experiment()?;
    let p = prepare(config)?;
    if !(p.pump.avg_power > 0.0) {
        return Err(Error::Config("the experiment needs a positive pump power as reference".into()));
    }
    let plan = scan.to_plan(&p.pump)?;
    let family = JsaFamily::synthesize(&config.spec(), &p.pump, &p.grid)?;
    let uncalibrated = det.to_model_uncalibrated()?;
    let calibration = match &det.calibration {
        CalibrationConfig::PerUnitMass(x) => *x,
        CalibrationConfig::PeakTrueCps { target, reference_segments } => {
            let reference = match reference_segments {
                Some(segs) => JsaFamily::synthesize(&segments_to_spec(segs), &p.pump, &p.grid)?,
                None => family.clone(),
            };
            calibrate_to_peak(
                &reference,
                plan.band_width,
                p.pump.avg_power,
                det.efficiency_signal,
                det.efficiency_idler,
                *target,
            )?
        }
    };
    let detection = uncalibrated.with_calibration(calibration)?;
    let records = run_scan(&family, &plan, &detection, p.pump.rep_rate, seed)?;

    let mut o = Outputs::new(out)?;
    o.write_csv(
        "scan.csv",
        &["lambda_s_nm", "lambda_i_nm", "P_a_uW", "t_s", "singles_s", "singles_i", "cc", "cacc", "true"],
        records.iter().map(|r| ScanRow {
            lambda_s_nm: to_nm(r.signal_center),
            lambda_i_nm: to_nm(r.idler_center),
            p_a_uw: r.avg_power * 1e6,
            t_s: r.integration_time,
            singles_s: r.singles_s,
            singles_i: r.singles_i,
            cc: r.cc,
            cacc: r.cacc,
            true_cc: r.true_coincidences,
        }),
    )?;

    let distinct: BTreeSet<u64> = plan.avg_powers.iter().map(|p| p.to_bits()).collect();
    let mut subtractions: Vec<(Axis, RamanSubtraction)> = Vec::new();
    if distinct.len() >= 3 {
        for axis in [Axis::Signal, Axis::Idler] {
            let samples = sweep_samples(&records, axis);
            match raman_subtract(&samples, axis, p.pump.avg_power, plan.band_width, p.pump.lambda_p0) {
                Ok(s) => subtractions.push((axis, s)),
                Err(Error::Analysis(m)) => o.warnings.push(format!("{} subtraction: {m}", axis_name(axis))),
                Err(e) => return Err(e),
            }
        }
    } else {
        o.warnings
            .push("fewer than 3 distinct pump powers; Raman fits skipped".to_string());
    }
    for (axis, s) in &subtractions {
        for f in &s.fits {
            if f.fit.has_negative_quadratic() {
                o.warnings.push(format!(
                    "{} at {:.3} nm: negative quadratic term",
                    axis_name(*axis),
                    to_nm(f.wavelength)
                ));
            }
        }
    }
    o.write_csv(
        "ramanfit.csv",
        &["axis", "lambda_nm", "s1_cps_per_W", "s2_cps_per_W2", "residual_cps"],
        subtractions.iter().flat_map(|(axis, s)| {
            s.fits.iter().map(move |f| FitRow {
                axis: axis_name(*axis),
                lambda_nm: to_nm(f.wavelength),
                s1_cps_per_w: f.fit.s1,
                s2_cps_per_w2: f.fit.s2,
                residual_cps: f.fit.residual,
            })
        }),
    )?;
    o.write_csv(
        "subtracted.csv",
        &["axis", "lambda_nm", "fwm_normalized"],
        subtractions.iter().flat_map(|(axis, s)| {
            s.marginal
                .wavelengths
                .iter()
                .zip(&s.marginal.intensity)
                .map(move |(&l, &y)| SubtractedRow {
                    axis: axis_name(*axis),
                    lambda_nm: to_nm(l),
                    fwm_normalized: y,
                })
        }),
    )?;
    o.finish("experiment", config_digest(config)?, Some(seed))
}
