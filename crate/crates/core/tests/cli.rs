//! Runs the `nli` binary on generated configs.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nli_core::cli::RunManifest;
use nli_core::config::{
    CalibrationConfig, Centers, DetectionConfig, GridConfig, RamanConfig, RunConfig, ScanConfig, SegmentConfig,
};
use nli_core::experiment::ScanMode;
use nli_core::model::FiberSegment;

use common::*;

fn nli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nli")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, config: &RunConfig) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn run(command: &str, config: &Path, out: &Path) -> Output {
    nli(&[command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn with_scan(mut c: RunConfig) -> RunConfig {
    c.scan = Some(ScanConfig {
        mode: ScanMode::Paired,
        signal_nm: Centers::Sweep { start: 1559.0, step: 0.16, count: 12 },
        idler_nm: None,
        band_width_nm: 0.16,
        integration_time_s: 1.0,
        avg_powers_uw: vec![20.0, 40.0, 60.0],
    });
    c.detection = Some(DetectionConfig {
        efficiency_signal: 0.1,
        efficiency_idler: 0.1,
        raman_cps_per_w: RamanConfig::Flat(1.5e8),
        calibration: CalibrationConfig::PerUnitMass(1e21),
    });
    c.seed = Some(5);
    c
}

#[test]
fn jsi_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridConfig { signal_nm: [1560.0, 1561.0], idler_nm: [1546.0, 1547.0], signal_points: 2, idler_points: 2 };
    let cfg = write_config(dir.path(), "c.json", &RunConfig::even(2, grid));
    let out = dir.path().join("out");
    let o = run("jsi", &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("jsi.csv"));
    assert_eq!(header, ["lambda_s_nm", "lambda_i_nm", "jsi"]);
    assert_eq!(rows.len(), 4);
    let m = manifest(&out);
    assert_eq!(m.command, "jsi");
    assert_eq!(m.files.len(), 2);
}

#[test]
fn jsi_catalogs_equal_layout_primaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &RunConfig::even(3, scan_grid_config(200)));
    let out = dir.path().join("out");
    assert!(run("jsi", &cfg, &out).status.success());
    let (_, rows) = read_csv(&out.join("islands.csv"));
    let primaries: Vec<(u32, f64, f64)> = rows
        .iter()
        .filter(|r| r[3] == "primary")
        .map(|r| (r[2].parse().unwrap(), r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    for (k, &(s, i)) in MEASURED_CENTERS_NM.iter().enumerate() {
        let &(_, cs, ci) = primaries.iter().find(|p| p.0 == k as u32 + 1).unwrap();
        assert!((cs - s).abs() <= 0.3 && (ci - i).abs() <= 0.3, "m={}: ({cs}, {ci})", k + 1);
    }
    assert!(rows.iter().any(|r| r[3] == "secondary"));
}

#[test]
fn jsi_binomial_layout_has_no_secondary_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &RunConfig::from_spec(&uneven(4), scan_grid_config(200)));
    let out = dir.path().join("out");
    assert!(run("jsi", &cfg, &out).status.success());
    let (_, rows) = read_csv(&out.join("islands.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[3] == "primary"));
}

#[test]
fn marginal_reports_visibilities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &RunConfig::even(4, scan_grid_config(551)));
    let out = dir.path().join("out");
    assert!(run("marginal", &cfg, &out).status.success());
    let (header, rows) = read_csv(&out.join("visibility.csv"));
    assert_eq!(header, ["axis", "m", "peak_nm", "trough_nm", "i_max", "i_min", "visibility"]);
    let first = rows.iter().find(|r| r[0] == "signal" && r[1] == "1").unwrap();
    let v: f64 = first[6].parse().unwrap();
    assert!((v - 0.957).abs() < 0.03, "{v}");
    let (h, ms) = read_csv(&out.join("marginal_s.csv"));
    assert_eq!(h, ["lambda_nm", "intensity"]);
    assert_eq!(ms.len(), 551);
}

#[test]
fn single_stage_marginal_has_empty_visibility_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &RunConfig::even(1, scan_grid_config(151)));
    let out = dir.path().join("out");
    assert!(run("marginal", &cfg, &out).status.success());
    let (header, rows) = read_csv(&out.join("visibility.csv"));
    assert_eq!(header.len(), 7);
    assert!(rows.is_empty());
}

#[test]
fn invalid_layout_is_rejected_with_violations() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = RunConfig::even(2, scan_grid_config(50));
    // two gaps in a row and a fiber with negative length
    c.segments.insert(1, SegmentConfig::from_segment(&FiberSegment::smf(5.0)));
    c.segments[0].length_m = -1.0;
    let cfg = write_config(dir.path(), "c.json", &c);
    let out = dir.path().join("out");
    let o = run("jsi", &cfg, &out);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.lines().filter(|l| l.trim_start().starts_with("- ")).count() >= 2, "{err}");
    assert!(!out.join("jsi.csv").exists());
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let mut v = serde_json::to_value(RunConfig::even(2, scan_grid_config(50))).unwrap();
    v["grid"]["points"] = 10.into();
    std::fs::write(&path, v.to_string()).unwrap();
    let o = run("jsi", &path, &dir.path().join("out"));
    assert!(!o.status.success());
}

#[test]
fn experiment_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = with_scan(RunConfig::even(3, scan_grid_config(151)));
    c.seed = None;
    let cfg = write_config(dir.path(), "c.json", &c);
    let o = run("experiment", &cfg, &dir.path().join("out"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    // a seed on the command line is enough
    let out = dir.path().join("seeded");
    let o = nli(&["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&out).seed, Some(3));
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &with_scan(RunConfig::even(3, scan_grid_config(151))));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("experiment", &cfg, &a).status.success());
    assert!(run("experiment", &cfg, &b).status.success());
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.config_sha256, mb.config_sha256);
    let (header, rows) = read_csv(&a.join("scan.csv"));
    assert_eq!(
        header,
        ["lambda_s_nm", "lambda_i_nm", "P_a_uW", "t_s", "singles_s", "singles_i", "cc", "cacc", "true"]
    );
    assert_eq!(rows.len(), 36);
    for r in &rows {
        let cc: i64 = r[6].parse().unwrap();
        let cacc: i64 = r[7].parse().unwrap();
        assert_eq!(r[8].parse::<i64>().unwrap(), cc - cacc);
    }

    let other = dir.path().join("other");
    let o = nli(&["experiment", "--config", cfg.to_str().unwrap(), "--out", other.to_str().unwrap(), "--seed", "6"]);
    assert!(o.status.success());
    assert_ne!(manifest(&other).files, ma.files);
}

#[test]
fn design_prints_lengths_and_flags() {
    let o = nli(&["design", "--stages", "3", "--l1", "50"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("50.000 / 100.000 / 50.000"), "{text}");
    assert_eq!(text.matches("<- round").count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = nli(&["design", "--stages", "4", "--l1", "33.3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (_, lengths) = read_csv(&out.join("design_lengths.csv"));
    let l: Vec<f64> = lengths.iter().map(|r| r[1].parse().unwrap()).collect();
    for (a, b) in l.iter().zip([33.3, 99.9, 99.9, 33.3]) {
        assert!((a - b).abs() < 1e-9, "{l:?}");
    }
    assert_eq!(l.len(), 4);
    let (_, rows) = read_csv(&out.join("design.csv"));
    assert_eq!(rows.iter().filter(|r| r[3] == "true").count(), 1);

    assert!(!nli(&["design", "--stages", "1", "--l1", "50"]).status.success());
}

#[test]
fn example_configs_load_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["fig2_even.json", "fig3_uneven.json", "fig4_power.json"] {
        let c = RunConfig::load(&dir.join(name)).unwrap();
        nli_core::model::validate_spec(&c.spec()).unwrap();
        c.grid.to_grid().unwrap();
        let (scan, _, _) = c.check_experiment().unwrap();
        scan.to_plan(&c.pump.to_pump().unwrap()).unwrap();
    }
}
