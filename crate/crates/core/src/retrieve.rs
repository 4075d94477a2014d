//! {M,N}-shift phase retrieval: interference-free and envelope images per
//! synthetic shift, N-shift envelope phase, then depth.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Result, SwiError};
use crate::filter::{FilterKind, FilterSpec};
use crate::forward::FrameStack;
use crate::image::{DepthMap, Image};
use crate::optics::{OpticalConfig, ShiftSchedule};

/// Relative degeneracy threshold: pixels whose quadrature sums both fall
/// below this fraction of the median envelope are masked.
pub const DEFAULT_RELATIVE_THRESHOLD: f64 = 1e-3;

/// Squared-envelope and interference-free estimates for each synthetic shift.
#[derive(Debug, Clone)]
pub struct EnvelopeStack {
    pub envelopes: Vec<Image>,
    pub interference_free: Vec<Image>,
    pub schedule: ShiftSchedule,
}

/// Envelope phase in `[0, 2π)` with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub width: usize,
    pub height: usize,
    pub phase: Vec<f64>,
    pub mask: Vec<bool>,
}

fn check_group(frames: &[Image]) -> Result<()> {
    if frames.len() < 3 {
        return Err(SwiError::TooFewShifts {
            m: frames.len(),
            n: 3,
        });
    }
    for f in &frames[1..] {
        frames[0].check_shape(f, "carrier group")?;
    }
    Ok(())
}

/// Per-pixel mean of the `M` carrier-shifted frames.
pub fn interference_free(frames: &[Image]) -> Result<Image> {
    check_group(frames)?;
    let inv = 1.0 / frames.len() as f64;
    let mut out = frames[0].clone();
    for f in &frames[1..] {
        for (o, v) in out.data.iter_mut().zip(&f.data) {
            *o += v;
        }
    }
    for o in &mut out.data {
        *o *= inv;
    }
    Ok(out)
}

/// Squared envelope `(1/2M)·Σ_m (I_m − b)²`.
pub fn envelope_estimate(frames: &[Image], b: &Image) -> Result<Image> {
    check_group(frames)?;
    frames[0].check_shape(b, "interference-free image")?;
    let scale = 1.0 / (2.0 * frames.len() as f64);
    let mut out = Image::filled(b.width, b.height, 0.0);
    for f in frames {
        for ((o, v), bb) in out.data.iter_mut().zip(&f.data).zip(&b.data) {
            let r = v - bb;
            *o += r * r;
        }
    }
    for o in &mut out.data {
        *o *= scale;
    }
    Ok(out)
}

/// Runs [`interference_free`] and [`envelope_estimate`] for every `n`.
pub fn estimate_envelopes(stack: &FrameStack) -> Result<EnvelopeStack> {
    let per_n: Vec<Result<(Image, Image)>> = (0..stack.schedule.n)
        .into_par_iter()
        .map(|n| {
            let group = stack.carrier_group(n);
            let b = interference_free(group)?;
            let e = envelope_estimate(group, &b)?;
            Ok((e, b))
        })
        .collect();
    let mut envelopes = Vec::with_capacity(per_n.len());
    let mut interference_free = Vec::with_capacity(per_n.len());
    for r in per_n {
        let (e, b) = r?;
        envelopes.push(e);
        interference_free.push(b);
    }
    Ok(EnvelopeStack {
        envelopes,
        interference_free,
        schedule: stack.schedule.clone(),
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    let (_, &mut hi, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    if v.len() % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// N-shift phase from squared envelopes sampled at `l0 + n·λ_s/(2N)`.
///
/// With `E_n = sin²(φ/2 − πn/N)` both quadrature sums carry a minus sign,
/// `Σ E_n sin(2πn/N) = −(N/4)·sin φ` and `Σ E_n cos(2πn/N) = −(N/4)·cos φ`,
/// so the phase is `atan2(−S, −C)`. A pixel is masked when `|S|` and `|C|`
/// are both at most `threshold`.
pub fn phase_from_envelopes(envelopes: &[Image], threshold: f64) -> Result<PhaseMap> {
    let n = envelopes.len();
    if n < 3 {
        return Err(SwiError::TooFewShifts { m: 3, n });
    }
    for e in &envelopes[1..] {
        envelopes[0].check_shape(e, "envelope stack")?;
    }
    let (w, h) = (envelopes[0].width, envelopes[0].height);
    let basis: Vec<(f64, f64)> = (0..n)
        .map(|i| (TAU * i as f64 / n as f64).sin_cos())
        .collect();
    let (phase, mask): (Vec<f64>, Vec<bool>) = (0..w * h)
        .into_par_iter()
        .map(|p| {
            let (mut s, mut c) = (0.0, 0.0);
            for (e, (sn, cs)) in envelopes.iter().zip(&basis) {
                s += e.data[p] * sn;
                c += e.data[p] * cs;
            }
            if !(s.is_finite() && c.is_finite()) || (s.abs() <= threshold && c.abs() <= threshold) {
                return (0.0, false);
            }
            let mut phi = (-s).atan2(-c);
            if phi < 0.0 {
                phi += TAU;
            }
            if phi >= TAU {
                phi = 0.0;
            }
            (phi, true)
        })
        .unzip();
    Ok(PhaseMap {
        width: w,
        height: h,
        phase,
        mask,
    })
}

/// Phase retrieval with the default threshold, `1e−3` times the median of all
/// envelope values in the stack.
pub fn phase_retrieve(env: &EnvelopeStack) -> Result<PhaseMap> {
    if env.envelopes.len() != env.schedule.n {
        return Err(SwiError::Inconsistent(format!(
            "{} envelopes for a schedule with N = {}",
            env.envelopes.len(),
            env.schedule.n
        )));
    }
    phase_with_default_threshold(&env.envelopes)
}

fn phase_with_default_threshold(envelopes: &[Image]) -> Result<PhaseMap> {
    let all: Vec<f64> = envelopes
        .iter()
        .flat_map(|e| e.data.iter().copied())
        .filter(|v| v.is_finite())
        .collect();
    let tau = DEFAULT_RELATIVE_THRESHOLD * median(all).abs();
    phase_from_envelopes(envelopes, tau)
}

/// `d = l0 + φ/(2k_s)`, in `[l0, l0 + λ_s/2)`.
pub fn depth_from_phase(phase: &PhaseMap, schedule: &ShiftSchedule, config: &OpticalConfig) -> DepthMap {
    let scale = 1.0 / (2.0 * config.k_s);
    let depth = phase
        .phase
        .iter()
        .zip(&phase.mask)
        .map(|(&phi, &m)| if m { schedule.l0 + phi * scale } else { 0.0 })
        .collect();
    DepthMap::with_mask(phase.width, phase.height, depth, phase.mask.clone())
        .expect("phase map shape is valid")
}

/// Full pipeline: envelopes per synthetic shift, filter each envelope image,
/// retrieve phase, convert to depth.
pub fn reconstruct(stack: &FrameStack, filter: &FilterSpec, guide: Option<&Image>) -> Result<DepthMap> {
    let env = estimate_envelopes(stack)?;
    depth_from_envelopes(&env, &stack.config, filter, guide)
}

/// Filters already-estimated envelopes and finishes the pipeline. Lets
/// callers try several filters on one acquisition.
pub fn depth_from_envelopes(
    env: &EnvelopeStack,
    config: &OpticalConfig,
    filter: &FilterSpec,
    guide: Option<&Image>,
) -> Result<DepthMap> {
    filter.validate()?;
    if filter.kind == FilterKind::JointBilateral {
        let g = guide.ok_or(SwiError::MissingGuide)?;
        env.envelopes[0].check_shape(g, "guide")?;
    }
    let phase = if filter.kind == FilterKind::None {
        phase_retrieve(env)?
    } else {
        let envelopes = env
            .envelopes
            .par_iter()
            .map(|e| filter.apply(e, guide))
            .collect::<Result<Vec<_>>>()?;
        if envelopes.len() != env.schedule.n {
            return Err(SwiError::Inconsistent("envelope count does not match schedule".into()));
        }
        phase_with_default_threshold(&envelopes)?
    };
    Ok(depth_from_phase(&phase, &env.schedule, config))
}

/// Phase `2k_s(d − l0)` wrapped into `[0, 2π)`, the quantity the pipeline
/// recovers for a single direct path.
pub fn expected_phase(d: f64, l0: f64, config: &OpticalConfig) -> f64 {
    (2.0 * config.k_s * (d - l0)).rem_euclid(2.0 * PI)
}
