//! Lissajous emission-area patterns traced by the two-axis galvo.

use std::f64::consts::PI;

use crate::error::{Result, SwiError};

/// Samples `(sin(2π·fx·t + phase), sin(2π·fy·t))` at `samples` uniformly
/// spaced times in `[0, duration]`.
pub fn lissajous_pattern(
    fx: f64,
    fy: f64,
    phase: f64,
    duration: f64,
    samples: usize,
) -> Result<Vec<[f64; 2]>> {
    if samples < 2 {
        return Err(SwiError::invalid("lissajous pattern needs at least 2 samples"));
    }
    if !(fx > 0.0 && fy > 0.0) {
        return Err(SwiError::invalid("lissajous frequencies must be positive"));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(SwiError::invalid("duration must be finite and non-negative"));
    }
    let dt = duration / (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| {
            let t = i as f64 * dt;
            [(2.0 * PI * fx * t + phase).sin(), (2.0 * PI * fy * t).sin()]
        })
        .collect())
}

/// Fraction of the cells of a `grid_resolution²` grid over `[-1, 1]²` that
/// contain at least one point.
pub fn coverage_metric(points: &[[f64; 2]], grid_resolution: usize) -> Result<f64> {
    if points.is_empty() {
        return Err(SwiError::EmptyPattern);
    }
    if grid_resolution == 0 {
        return Err(SwiError::invalid("grid_resolution must be at least 1"));
    }
    let r = grid_resolution;
    let cell = |v: f64| (((v + 1.0) / 2.0 * r as f64).floor().max(0.0) as usize).min(r - 1);
    let mut hit = vec![false; r * r];
    for p in points {
        hit[cell(p[1]) * r + cell(p[0])] = true;
    }
    Ok(hit.iter().filter(|&&h| h).count() as f64 / (r * r) as f64)
}
