use serde::{Deserialize, Serialize};

use super::{median_abs, median_in_place, rms};
use crate::error::{Result, SwiError};
use crate::filter::{joint_bilateral_upsample, subsample, FilterKind, FilterSpec};
use crate::forward::{acquire_stack, AcquisitionSettings, IlluminationMode, SceneModel};
use crate::image::{DepthMap, Image};
use crate::optics::{wrap_signed, OpticalConfig, ShiftSchedule};
use crate::retrieve::{depth_from_envelopes, estimate_envelopes, reconstruct};

/// One row of the depth-tracking accuracy table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub kernel_width: f64,
    pub rmse_swept: f64,
    pub medae_swept: f64,
    pub rmse_coherent: f64,
    pub medae_coherent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetResult {
    pub mode: IlluminationMode,
    pub kernel_width: f64,
    pub offset: f64,
    /// Mean recovered shift relative to the first offset.
    pub recovered_shift: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub rows: Vec<AccuracyRow>,
    pub per_offset: Vec<OffsetResult>,
}

/// Depth-tracking protocol: translate the scene through `offsets`, acquire
/// with both illumination modes, and reconstruct with a Gaussian envelope
/// filter of each kernel width (`6σ`, in µm; `0` disables filtering).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingProtocol {
    pub config: OpticalConfig,
    pub m: usize,
    pub n: usize,
    pub l0: f64,
    pub offsets: Vec<f64>,
    pub swept: AcquisitionSettings,
    pub coherent: AcquisitionSettings,
    pub kernel_widths: Vec<f64>,
    pub pixel_pitch: f64,
}

fn width_filter(width: f64, pitch: f64) -> FilterSpec {
    if width > 0.0 {
        FilterSpec::gaussian_width(width, pitch)
    } else {
        FilterSpec::none()
    }
}

/// Signed, wrap-aware residuals `est − gt` over jointly valid pixels.
fn wrapped_residuals(est: &DepthMap, gt: &DepthMap, period: f64) -> Vec<Option<f64>> {
    est.depth
        .iter()
        .zip(&gt.depth)
        .zip(est.mask.iter().zip(&gt.mask))
        .map(|((e, g), (me, mg))| (*me && *mg).then(|| wrap_signed(e - g, period)))
        .collect()
}

/// RMSE of wrap-aware residuals: depths that differ by a multiple of `λ_s/2`
/// count as equal.
pub fn wrapped_rmse(est: &DepthMap, gt: &DepthMap, config: &OpticalConfig) -> Result<f64> {
    est.check_shape(gt.width, gt.height, "estimate vs ground truth")?;
    let r: Vec<f64> = wrapped_residuals(est, gt, config.unambiguous_range())
        .into_iter()
        .flatten()
        .collect();
    if r.is_empty() {
        return Err(SwiError::EmptyMask);
    }
    Ok(rms(&r))
}

/// Median absolute wrap-aware residual.
pub fn wrapped_medae(est: &DepthMap, gt: &DepthMap, config: &OpticalConfig) -> Result<f64> {
    est.check_shape(gt.width, gt.height, "estimate vs ground truth")?;
    let r: Vec<f64> = wrapped_residuals(est, gt, config.unambiguous_range())
        .into_iter()
        .flatten()
        .collect();
    if r.is_empty() {
        return Err(SwiError::EmptyMask);
    }
    Ok(median_abs(&r))
}

/// Runs the tracking protocol. For every mode and kernel width, residuals
/// against the translated ground truth are pooled over all offsets, the
/// common offset (the unknown absolute reference position) is removed by
/// their median, and RMSE and MedAE are reported.
pub fn depth_tracking_experiment(scene: &SceneModel, protocol: &TrackingProtocol) -> Result<TrackingReport> {
    if protocol.offsets.len() < 2 {
        return Err(SwiError::invalid(format!(
            "tracking needs at least 2 offsets, got {}",
            protocol.offsets.len()
        )));
    }
    if protocol.offsets.iter().any(|o| !o.is_finite()) {
        return Err(SwiError::invalid("offsets must be finite"));
    }
    if protocol.kernel_widths.is_empty() {
        return Err(SwiError::invalid("at least one kernel width is required"));
    }
    let config = &protocol.config;
    let period = config.unambiguous_range();
    let schedule = ShiftSchedule::new(config, protocol.m, protocol.n, protocol.l0)?;
    let widths = &protocol.kernel_widths;

    let mut per_mode = Vec::new();
    let mut per_offset = Vec::new();
    for settings in [&protocol.swept, &protocol.coherent] {
        // residuals[width][offset] = per-pixel residuals
        let mut residuals: Vec<Vec<Vec<Option<f64>>>> = vec![Vec::new(); widths.len()];
        let mut depths: Vec<Vec<DepthMap>> = vec![Vec::new(); widths.len()];
        for &offset in &protocol.offsets {
            let moved = scene.translated(offset);
            let stack = acquire_stack(&moved, &schedule, settings, config)?;
            let env = estimate_envelopes(&stack)?;
            for (wi, &w) in widths.iter().enumerate() {
                let est = depth_from_envelopes(&env, config, &width_filter(w, protocol.pixel_pitch), None)?;
                residuals[wi].push(wrapped_residuals(&est, &moved.depth, period));
                depths[wi].push(est);
            }
        }
        let mut stats = Vec::with_capacity(widths.len());
        for (wi, &w) in widths.iter().enumerate() {
            let mut pooled: Vec<f64> = residuals[wi].iter().flatten().flatten().copied().collect();
            if pooled.is_empty() {
                return Err(SwiError::EmptyMask);
            }
            let common = median_in_place(&mut pooled.clone());
            for r in &mut pooled {
                *r = wrap_signed(*r - common, period);
            }
            stats.push((rms(&pooled), median_abs(&pooled)));

            let first = &depths[wi][0];
            for (oi, &offset) in protocol.offsets.iter().enumerate() {
                let own: Vec<f64> = residuals[wi][oi]
                    .iter()
                    .flatten()
                    .map(|r| wrap_signed(r - common, period))
                    .collect();
                let shifts: Vec<f64> = wrapped_residuals(&depths[wi][oi], first, period)
                    .into_iter()
                    .flatten()
                    .collect();
                per_offset.push(OffsetResult {
                    mode: settings.mode,
                    kernel_width: w,
                    offset,
                    recovered_shift: if shifts.is_empty() {
                        f64::NAN
                    } else {
                        shifts.iter().sum::<f64>() / shifts.len() as f64
                    },
                    rmse: if own.is_empty() { f64::NAN } else { rms(&own) },
                });
            }
        }
        per_mode.push(stats);
    }
    let rows = widths
        .iter()
        .enumerate()
        .map(|(wi, &w)| AccuracyRow {
            kernel_width: w,
            rmse_swept: per_mode[0][wi].0,
            medae_swept: per_mode[0][wi].1,
            rmse_coherent: per_mode[1][wi].0,
            medae_coherent: per_mode[1][wi].1,
        })
        .collect();
    Ok(TrackingReport { rows, per_offset })
}

/// Swept-angle settings for a given emission-area coverage in `[0, 1]`:
/// indirect rejection `1 − coverage` and `max(1, round(64·coverage))`
/// angular speckle draws.
pub fn coverage_settings(coverage: f64, base: &AcquisitionSettings) -> Result<AcquisitionSettings> {
    if !(0.0..=1.0).contains(&coverage) {
        return Err(SwiError::invalid(format!("coverage must lie in [0, 1], got {coverage}")));
    }
    Ok(AcquisitionSettings {
        mode: IlluminationMode::SweptAngle,
        indirect_rejection: 1.0 - coverage,
        speckle_realizations: ((64.0 * coverage).round() as usize).max(1),
        ..*base
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub m: usize,
    pub n: usize,
    pub coverage: f64,
    pub rmse: f64,
    pub frames_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffProtocol {
    pub config: OpticalConfig,
    pub l0: f64,
    pub shifts: Vec<(usize, usize)>,
    pub coverages: Vec<f64>,
    /// Noise, seed, ambient and carrier model shared by every run.
    pub base: AcquisitionSettings,
    pub filter: FilterSpec,
}

/// Acquisition-time versus quality sweep over `{M, N}` and emission-area
/// coverage. Points are ordered by `shifts`, then `coverages`.
pub fn tradeoff_sweep(scene: &SceneModel, protocol: &TradeoffProtocol) -> Result<Vec<TradeoffPoint>> {
    let guide = (protocol.filter.kind == FilterKind::JointBilateral).then_some(&scene.guide);
    let mut out = Vec::with_capacity(protocol.shifts.len() * protocol.coverages.len());
    for &(m, n) in &protocol.shifts {
        let schedule = ShiftSchedule::new(&protocol.config, m, n, protocol.l0)?;
        for &coverage in &protocol.coverages {
            let settings = coverage_settings(coverage, &protocol.base)?;
            let stack = acquire_stack(scene, &schedule, &settings, &protocol.config)?;
            let est = reconstruct(&stack, &protocol.filter, guide)?;
            out.push(TradeoffPoint {
                m,
                n,
                coverage,
                rmse: wrapped_rmse(&est, &scene.depth, &protocol.config)?,
                frames_used: schedule.frame_count(),
            });
        }
    }
    Ok(out)
}

/// Per-axis downsampling factor that gives a point-scanning system the same
/// total acquisition time: `round(width / floor(√floor(rate·time/images)))`.
pub fn scanning_equivalent_factor(
    scan_rate: f64,
    images_per_depth: usize,
    total_time: f64,
    image_width: usize,
) -> Result<usize> {
    if !(scan_rate > 0.0 && total_time > 0.0 && images_per_depth > 0 && image_width > 0) {
        return Err(SwiError::invalid("scan parameters must be positive"));
    }
    let points_2d = (scan_rate * total_time / images_per_depth as f64).floor();
    let points_1d = points_2d.sqrt().floor();
    if points_1d < 1.0 {
        return Err(SwiError::ZeroPoints);
    }
    Ok((image_width as f64 / points_1d).round() as usize)
}

/// Emulates a point-scanning acquisition: keep one depth sample per
/// `factor × factor` block, then joint-bilateral upsample with the guide.
pub fn emulate_scanning(full: &DepthMap, factor: usize, guide: &Image, spec: &FilterSpec) -> Result<DepthMap> {
    if spec.kind != FilterKind::JointBilateral {
        return Err(SwiError::invalid("scanning emulation upsamples with a joint bilateral filter"));
    }
    spec.validate()?;
    full.check_shape(guide.width, guide.height, "guide")?;
    let low = subsample(full, factor)?;
    joint_bilateral_upsample(&low, guide, factor, spec.sigma_pixels(), spec.intensity_sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanComparison {
    pub factor: usize,
    pub rmse_full: f64,
    pub rmse_scanned: f64,
}

/// Wrap-aware RMSE of the full-resolution depth and of its scanning
/// emulation against ground truth, optionally restricted to `region`.
pub fn scan_comparison(
    full: &DepthMap,
    gt: &DepthMap,
    guide: &Image,
    factor: usize,
    spec: &FilterSpec,
    config: &OpticalConfig,
    region: Option<&[bool]>,
) -> Result<ScanComparison> {
    let scanned = emulate_scanning(full, factor, guide, spec)?;
    let restrict = |d: &DepthMap| -> Result<DepthMap> {
        match region {
            Some(r) => {
                let mask = d.mask.iter().zip(r).map(|(a, b)| *a && *b).collect();
                DepthMap::with_mask(d.width, d.height, d.depth.clone(), mask)
            }
            None => Ok(d.clone()),
        }
    };
    Ok(ScanComparison {
        factor,
        rmse_full: wrapped_rmse(&restrict(full)?, gt, config)?,
        rmse_scanned: wrapped_rmse(&restrict(&scanned)?, gt, config)?,
    })
}
