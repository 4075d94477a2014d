//! Optical parameters of a two-wavelength interferometer and the reference
//! mirror schedule used by the {M,N}-shift acquisition.
//!
//! Lengths are micrometers throughout the crate. Wavelengths enter in
//! nanometers and are converted once, here.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiError};

/// Two illumination wavelengths and every quantity derived from them.
///
/// `lambda1_nm` is always the larger wavelength `λ`; `lambda2_nm = λ/(1+ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    pub lambda1_nm: f64,
    pub lambda2_nm: f64,
    /// Relative separation `ε = |λ1 − λ2| / min(λ1, λ2)`.
    pub epsilon: f64,
    /// Optical wavenumber `2π/λ` in rad/µm.
    pub k: f64,
    /// Synthetic wavenumber `εk` in rad/µm.
    pub k_s: f64,
    /// Synthetic wavelength in µm.
    pub lambda_s: f64,
    /// Carrier wavelength `λ/2` in µm.
    pub lambda_c: f64,
}

impl OpticalConfig {
    /// Builds the configuration for two wavelengths given in nanometers.
    ///
    /// The synthetic wavelength uses the exact two-wavelength form
    /// `λ1·λ2/|λ1 − λ2|`, which equals `λ/ε` for the larger wavelength `λ`.
    pub fn from_wavelengths(lambda1_nm: f64, lambda2_nm: f64) -> Result<Self> {
        for l in [lambda1_nm, lambda2_nm] {
            if !(l.is_finite() && l > 0.0) {
                return Err(SwiError::InvalidWavelength(l));
            }
        }
        if lambda1_nm == lambda2_nm {
            return Err(SwiError::EqualWavelengths(lambda1_nm));
        }
        let long_nm = lambda1_nm.max(lambda2_nm);
        let short_nm = lambda1_nm.min(lambda2_nm);
        let lambda = long_nm * 1e-3;
        let epsilon = (long_nm - short_nm) / short_nm;
        let k = 2.0 * PI / lambda;
        let lambda_s = long_nm * short_nm / (long_nm - short_nm) * 1e-3;
        Ok(Self {
            lambda1_nm: long_nm,
            lambda2_nm: short_nm,
            epsilon,
            k,
            k_s: 2.0 * PI / lambda_s,
            lambda_s,
            lambda_c: lambda / 2.0,
        })
    }

    /// Primary optical wavelength `λ` in µm.
    pub fn lambda(&self) -> f64 {
        self.lambda1_nm * 1e-3
    }

    /// Carrier wavenumber `2k`, the fringe frequency as the mirror moves.
    pub fn k_c(&self) -> f64 {
        2.0 * self.k
    }

    /// Unambiguous depth range `λ_s/2`.
    pub fn unambiguous_range(&self) -> f64 {
        self.lambda_s / 2.0
    }

    /// Finds the second wavelength that yields `lambda_s_um` together with
    /// `lambda1_nm` (the shorter of the two solutions is returned).
    pub fn for_synthetic_wavelength(lambda1_nm: f64, lambda_s_um: f64) -> Result<Self> {
        if !(lambda_s_um.is_finite() && lambda_s_um > 0.0) {
            return Err(SwiError::invalid(format!(
                "synthetic wavelength must be positive, got {lambda_s_um}"
            )));
        }
        // λ1·λ2/(λ1 − λ2) = Λ  =>  λ2 = λ1·Λ/(Λ + λ1), all in nm.
        let big = lambda_s_um * 1e3;
        let lambda2_nm = lambda1_nm * big / (big + lambda1_nm);
        Self::from_wavelengths(lambda1_nm, lambda2_nm)
    }
}

/// Synthetic parameters for a pair of wavelengths in nanometers.
pub fn derive_synthetic(lambda1_nm: f64, lambda2_nm: f64) -> Result<OpticalConfig> {
    OpticalConfig::from_wavelengths(lambda1_nm, lambda2_nm)
}

/// Grid of reference mirror positions `l_n^m = l0 + n·λ_s/(2N) + m·λ_c/M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSchedule {
    pub m: usize,
    pub n: usize,
    pub l0: f64,
    pub synthetic_step: f64,
    pub carrier_step: f64,
    /// Row-major `positions[n * m + mm]`.
    positions: Vec<f64>,
}

impl ShiftSchedule {
    pub fn new(config: &OpticalConfig, m: usize, n: usize, l0: f64) -> Result<Self> {
        if m < 3 || n < 3 {
            return Err(SwiError::TooFewShifts { m, n });
        }
        if !l0.is_finite() {
            return Err(SwiError::invalid("l0 must be finite"));
        }
        let synthetic_step = config.lambda_s / (2.0 * n as f64);
        let carrier_step = config.lambda_c / m as f64;
        let positions = (0..n)
            .flat_map(|ni| {
                (0..m).map(move |mi| l0 + ni as f64 * synthetic_step + mi as f64 * carrier_step)
            })
            .collect();
        Ok(Self {
            m,
            n,
            l0,
            synthetic_step,
            carrier_step,
            positions,
        })
    }

    /// Mirror position for synthetic shift `n` and carrier shift `m`.
    pub fn position(&self, n: usize, m: usize) -> f64 {
        self.positions[n * self.m + m]
    }

    /// Synthetic-shift position `l_n`, where the envelope is sampled.
    pub fn envelope_position(&self, n: usize) -> f64 {
        self.l0 + n as f64 * self.synthetic_step
    }

    pub fn frame_count(&self) -> usize {
        self.m * self.n
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }
}

pub fn build_schedule(config: &OpticalConfig, m: usize, n: usize, l0: f64) -> Result<ShiftSchedule> {
    ShiftSchedule::new(config, m, n, l0)
}

/// Wraps a depth into the unambiguous interval `[0, λ_s/2)`.
pub fn wrap_depth(d: f64, config: &OpticalConfig) -> f64 {
    wrap_to(d, config.unambiguous_range())
}

pub(crate) fn wrap_to(d: f64, period: f64) -> f64 {
    let w = d.rem_euclid(period);
    // rem_euclid can round up to exactly `period` for tiny negative inputs
    if w >= period {
        0.0
    } else {
        w
    }
}

/// Signed wrapped difference in `[-period/2, period/2)`.
pub fn wrap_signed(d: f64, period: f64) -> f64 {
    wrap_to(d + period / 2.0, period) - period / 2.0
}
