//! Synthetic wavelength calibration: fit `E(l) = a + b·cos(2k_s·l + ψ)` to
//! envelope samples taken at a dense set of mirror positions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Expected synthetic wavelength in µm; centres the frequency search.
    pub nominal_lambda_s: f64,
    pub grid_size: usize,
    /// Search range as multiples of the nominal synthetic wavenumber.
    pub grid_span: (f64, f64),
    /// Maximum residual sum of squares as a fraction of the total sum of
    /// squares about the mean.
    pub max_residual_fraction: f64,
}

impl CalibrationOptions {
    pub fn new(nominal_lambda_s: f64) -> Self {
        Self {
            nominal_lambda_s,
            grid_size: 512,
            grid_span: (0.25, 4.0),
            max_residual_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub lambda_s: f64,
    pub k_s: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub residual_fraction: f64,
}

struct LinearFit {
    ssr: f64,
    coef: [f64; 3],
}

/// Least squares for `a + c·cos(ωl) + s·sin(ωl)` at fixed `ω`.
fn fit_at(omega: f64, ls: &[f64], es: &[f64]) -> LinearFit {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (&l, &e) in ls.iter().zip(es) {
        let (s, c) = (omega * l).sin_cos();
        let row = [1.0, c, s];
        for i in 0..3 {
            atb[i] += row[i] * e;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve3(ata, atb).unwrap_or([es.iter().sum::<f64>() / es.len() as f64, 0.0, 0.0]);
    let ssr = ls
        .iter()
        .zip(es)
        .map(|(&l, &e)| {
            let (s, c) = (omega * l).sin_cos();
            let r = e - (coef[0] + coef[1] * c + coef[2] * s);
            r * r
        })
        .sum();
    LinearFit { ssr, coef }
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, src) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn golden_section(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Estimates the synthetic wavelength from `(l, E)` samples by a coarse
/// frequency grid search followed by golden-section refinement.
pub fn calibrate_with(samples: &[(f64, f64)], opts: &CalibrationOptions) -> Result<CalibrationFit> {
    if samples.len() < 8 {
        return Err(SwiError::invalid(format!(
            "calibration needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    if !(opts.nominal_lambda_s > 0.0 && opts.grid_size >= 2 && opts.grid_span.0 > 0.0 && opts.grid_span.1 > opts.grid_span.0) {
        return Err(SwiError::invalid("invalid calibration options"));
    }
    if samples.iter().any(|(l, e)| !(l.is_finite() && e.is_finite())) {
        return Err(SwiError::invalid("calibration samples must be finite"));
    }
    let (lmin, lmax) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (l, _)| (lo.min(*l), hi.max(*l)));
    let span = lmax - lmin;
    let period = opts.nominal_lambda_s / 2.0;
    if span < period {
        return Err(SwiError::InsufficientSpan {
            span_um: span,
            period_um: period,
        });
    }

    // centre positions for conditioning; frequency is unaffected
    let centre = 0.5 * (lmin + lmax);
    let ls: Vec<f64> = samples.iter().map(|(l, _)| l - centre).collect();
    let es: Vec<f64> = samples.iter().map(|(_, e)| *e).collect();
    let mean = es.iter().sum::<f64>() / es.len() as f64;
    let sst: f64 = es.iter().map(|e| (e - mean).powi(2)).sum();
    if !(sst > 1e-24 * (mean * mean * es.len() as f64).max(1e-300)) {
        return Err(SwiError::FitDiverged(1.0));
    }

    // E oscillates at 2k_s in l
    let omega_nom = 4.0 * PI / opts.nominal_lambda_s;
    let (a, b) = (opts.grid_span.0 * omega_nom, opts.grid_span.1 * omega_nom);
    let step = (b - a) / (opts.grid_size - 1) as f64;
    let grid: Vec<f64> = (0..opts.grid_size).map(|i| a + i as f64 * step).collect();
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, &w)| (i, fit_at(w, &ls, &es).ssr))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let omega = golden_section(lo, hi, |w| fit_at(w, &ls, &es).ssr);
    let fit = fit_at(omega, &ls, &es);

    let residual_fraction = fit.ssr / sst;
    if residual_fraction > opts.max_residual_fraction {
        return Err(SwiError::FitDiverged(residual_fraction));
    }
    let [offset, c, s] = fit.coef;
    let k_s = omega / 2.0;
    Ok(CalibrationFit {
        lambda_s: 2.0 * PI / k_s,
        k_s,
        offset,
        amplitude: c.hypot(s),
        // phase relative to the original (uncentred) positions
        phase: ((-s).atan2(c) - omega * centre).rem_euclid(2.0 * PI),
        residual_fraction,
    })
}

/// Synthetic wavelength in µm fitted to `(l, E)` samples, searching around
/// `nominal_lambda_s`.
pub fn calibrate_synthetic_wavelength(samples: &[(f64, f64)], nominal_lambda_s: f64) -> Result<f64> {
    Ok(calibrate_with(samples, &CalibrationOptions::new(nominal_lambda_s))?.lambda_s)
}
