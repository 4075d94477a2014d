//! Error metrics, synthetic-wavelength calibration, and the experiment
//! protocols built on top of the forward model and the reconstruction
//! pipeline.

mod calibrate;
mod experiments;
pub mod scenes;

pub use calibrate::{
    calibrate_synthetic_wavelength, calibrate_with, CalibrationFit, CalibrationOptions,
};
pub use experiments::{
    coverage_settings, depth_tracking_experiment, emulate_scanning, scan_comparison,
    scanning_equivalent_factor, tradeoff_sweep, wrapped_medae, wrapped_rmse, AccuracyRow, OffsetResult,
    ScanComparison, TrackingProtocol, TrackingReport, TradeoffPoint, TradeoffProtocol,
};

use crate::error::{Result, SwiError};
use crate::image::DepthMap;

fn joint_errors(est: &DepthMap, gt: &DepthMap) -> Result<Vec<f64>> {
    est.check_shape(gt.width, gt.height, "estimate vs ground truth")?;
    let errs: Vec<f64> = est
        .depth
        .iter()
        .zip(&gt.depth)
        .zip(est.mask.iter().zip(&gt.mask))
        .filter(|(_, (a, b))| **a && **b)
        .map(|((e, g), _)| e - g)
        .collect();
    if errs.is_empty() {
        return Err(SwiError::EmptyMask);
    }
    Ok(errs)
}

pub(crate) fn rms(errs: &[f64]) -> f64 {
    (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt()
}

/// Median of absolute values; even counts average the two central values.
pub(crate) fn median_abs(errs: &[f64]) -> f64 {
    let mut a: Vec<f64> = errs.iter().map(|e| e.abs()).collect();
    median_in_place(&mut a)
}

pub(crate) fn median_in_place(a: &mut [f64]) -> f64 {
    assert!(!a.is_empty(), "median of an empty set");
    let mid = a.len() / 2;
    let odd = a.len() % 2 == 1;
    let (lower, &mut hi, _) = a.select_nth_unstable_by(mid, f64::total_cmp);
    if odd {
        hi
    } else {
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Root-mean-square depth error over jointly valid pixels.
pub fn rmse(est: &DepthMap, gt: &DepthMap) -> Result<f64> {
    Ok(rms(&joint_errors(est, gt)?))
}

/// Median absolute depth error over jointly valid pixels.
pub fn medae(est: &DepthMap, gt: &DepthMap) -> Result<f64> {
    Ok(median_abs(&joint_errors(est, gt)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(v: &[f64]) -> DepthMap {
        DepthMap::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn identical_maps_have_zero_error() {
        let a = dm(&[1.0, 2.0, 3.0]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(medae(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn rmse_of_three_four() {
        let r = rmse(&dm(&[3.0, 4.0]), &dm(&[0.0, 0.0])).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn medae_conventions() {
        let zero = dm(&[0.0, 0.0, 0.0]);
        assert_eq!(medae(&dm(&[1.0, -2.0, 3.0]), &zero).unwrap(), 2.0);
        assert_eq!(medae(&dm(&[1.0, 3.0]), &dm(&[0.0, 0.0])).unwrap(), 2.0);
        let gt = dm(&[10.0, 20.0, 30.0, 40.0]);
        assert!((medae(&gt.translated(5.0), &gt).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_masks() {
        let a = DepthMap::with_mask(2, 1, vec![1.0, 2.0], vec![true, false]).unwrap();
        let b = DepthMap::with_mask(2, 1, vec![1.0, 2.0], vec![false, true]).unwrap();
        assert!(matches!(rmse(&a, &b), Err(SwiError::EmptyMask)));
        assert!(matches!(medae(&a, &b), Err(SwiError::EmptyMask)));
    }

    #[test]
    fn masked_pixels_are_excluded() {
        let a = DepthMap::with_mask(3, 1, vec![1.0, 100.0, 1.0], vec![true, false, true]).unwrap();
        let b = dm(&[1.0, 0.0, 1.0]);
        assert_eq!(rmse(&a, &b).unwrap(), 0.0);
    }
}
