#![allow(dead_code)]

use nli_core::config::GridConfig;
use nli_core::engine::binomial_lengths;
use nli_core::model::{FiberSegment, InterferometerSpec, PumpPulse, SpectralGrid};

/// Measured island centers (signal, idler) in nm for orders 1 to 4.
pub const MEASURED_CENTERS_NM: [(f64, f64); 4] = [(1560.4, 1546.3), (1563.3, 1543.4), (1565.5, 1541.3), (1567.4, 1539.5)];

pub const SIGNAL_NM: [f64; 2] = [1558.0, 1569.0];
pub const IDLER_NM: [f64; 2] = [1537.5, 1548.5];

pub fn pump() -> PumpPulse {
    PumpPulse::reference()
}

pub fn gap() -> FiberSegment {
    FiberSegment::smf(10.0)
}

pub fn even(n: usize) -> InterferometerSpec {
    InterferometerSpec::even(n)
}

/// First-stage length of the binomial layouts: 50 m for three stages and
/// 33.3 m for four.
pub fn binomial_l1(n: usize) -> f64 {
    match n {
        3 => 50.0,
        4 => 33.3,
        _ => 100.0 / (n as f64 - 1.0),
    }
}

pub fn uneven(n: usize) -> InterferometerSpec {
    InterferometerSpec::with_stage_lengths(&binomial_lengths(n, binomial_l1(n)), 10.0)
}

pub fn scan_grid(points: usize) -> SpectralGrid {
    SpectralGrid::from_nm(SIGNAL_NM, IDLER_NM, points, points).unwrap()
}

pub fn scan_grid_config(points: usize) -> GridConfig {
    GridConfig {
        signal_nm: SIGNAL_NM,
        idler_nm: IDLER_NM,
        signal_points: points,
        idler_points: points,
    }
}

/// Square grid of half-width `half_nm` around a point.
pub fn grid_around(center: (f64, f64), half_nm: f64, points: usize) -> SpectralGrid {
    let (s, i) = (center.0 * 1e9, center.1 * 1e9);
    SpectralGrid::from_nm([s - half_nm, s + half_nm], [i - half_nm, i + half_nm], points, points).unwrap()
}
