//! Envelope denoising and guided upsampling.
//!
//! All kernels are square windows truncated at `ceil(3σ)` pixels and
//! renormalized over the samples that fall inside the image and are valid, so
//! constant inputs pass through unchanged, borders included.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiError};
use crate::image::{DepthMap, Image};

/// Pixel pitch of the reference sensor in µm.
pub const DEFAULT_PIXEL_PITCH_UM: f64 = 3.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    #[default]
    None,
    Gaussian,
    JointBilateral,
}

fn default_pitch() -> f64 {
    DEFAULT_PIXEL_PITCH_UM
}

/// Filter applied to each envelope image before phase retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Spatial standard deviation in µm on the object.
    #[serde(default)]
    pub spatial_sigma: f64,
    /// Range standard deviation in guide-intensity units.
    #[serde(default)]
    pub intensity_sigma: f64,
    #[serde(default = "default_pitch")]
    pub pixel_pitch: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl FilterSpec {
    pub fn none() -> Self {
        Self {
            kind: FilterKind::None,
            spatial_sigma: 0.0,
            intensity_sigma: 0.0,
            pixel_pitch: DEFAULT_PIXEL_PITCH_UM,
        }
    }

    pub fn gaussian(spatial_sigma_um: f64, pixel_pitch: f64) -> Self {
        Self {
            kind: FilterKind::Gaussian,
            spatial_sigma: spatial_sigma_um,
            intensity_sigma: 0.0,
            pixel_pitch,
        }
    }

    /// Gaussian whose reported kernel width (`6σ`, i.e. the full ±3σ
    /// support) is `width_um`.
    pub fn gaussian_width(width_um: f64, pixel_pitch: f64) -> Self {
        Self::gaussian(width_um / 6.0, pixel_pitch)
    }

    pub fn joint_bilateral(spatial_sigma_um: f64, intensity_sigma: f64, pixel_pitch: f64) -> Self {
        Self {
            kind: FilterKind::JointBilateral,
            spatial_sigma: spatial_sigma_um,
            intensity_sigma,
            pixel_pitch,
        }
    }

    /// Reported kernel width `6σ` in µm.
    pub fn kernel_width(&self) -> f64 {
        6.0 * self.spatial_sigma
    }

    pub fn sigma_pixels(&self) -> f64 {
        self.spatial_sigma / self.pixel_pitch
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == FilterKind::None {
            return Ok(());
        }
        if !(self.pixel_pitch > 0.0 && self.pixel_pitch.is_finite()) {
            return Err(SwiError::invalid("pixel pitch must be positive"));
        }
        if !(self.spatial_sigma > 0.0 && self.spatial_sigma.is_finite()) {
            return Err(SwiError::invalid("spatial sigma must be positive"));
        }
        if self.kind == FilterKind::JointBilateral && !(self.intensity_sigma > 0.0) {
            return Err(SwiError::invalid("intensity sigma must be positive"));
        }
        Ok(())
    }

    /// Applies the filter to one image.
    pub fn apply(&self, img: &Image, guide: Option<&Image>) -> Result<Image> {
        self.validate()?;
        match self.kind {
            FilterKind::None => Ok(img.clone()),
            FilterKind::Gaussian => Ok(gaussian_filter(img, self.sigma_pixels())),
            FilterKind::JointBilateral => {
                let guide = guide.ok_or(SwiError::MissingGuide)?;
                joint_bilateral(img, guide, self.sigma_pixels(), self.intensity_sigma)
            }
        }
    }
}

fn radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil().max(1.0) as usize
}

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = radius(sigma) as isize;
    (-r..=r)
        .map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

fn check_sigma(sigma: f64) {
    assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive, got {sigma}");
}

/// Normalized Gaussian blur with standard deviation `sigma` pixels.
pub fn gaussian_filter(img: &Image, sigma: f64) -> Image {
    let mask = vec![true; img.len()];
    gaussian_filter_masked(img, &mask, sigma).0
}

/// Gaussian blur that ignores masked-out samples. Returns the filtered image
/// and a mask that is false where no valid sample fell inside the kernel.
pub fn gaussian_filter_masked(img: &Image, mask: &[bool], sigma: f64) -> (Image, Vec<bool>) {
    check_sigma(sigma);
    assert_eq!(mask.len(), img.len(), "mask length must match image");
    let (w, h) = (img.width, img.height);
    let taps = gaussian_taps(sigma);
    let r = radius(sigma) as isize;

    let weighted: Vec<f64> = img
        .data
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    let support: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();

    // horizontal pass over (value·mask, mask)
    let horizontal = |src: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; w * h];
        out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            let line = &src[y * w..(y + 1) * w];
            for (x, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, t) in (-r..=r).enumerate() {
                    let xx = x as isize + t;
                    if xx >= 0 && (xx as usize) < w {
                        acc += taps[k] * line[xx as usize];
                    }
                }
                *o = acc;
            }
        });
        out
    };
    let vertical = |src: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; w * h];
        out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (k, t) in (-r..=r).enumerate() {
                let yy = y as isize + t;
                if yy < 0 || yy as usize >= h {
                    continue;
                }
                let line = &src[yy as usize * w..(yy as usize + 1) * w];
                for (o, v) in row.iter_mut().zip(line) {
                    *o += taps[k] * v;
                }
            }
        });
        out
    };

    let num = vertical(&horizontal(&weighted));
    let den = vertical(&horizontal(&support));
    let mut out_mask = vec![false; w * h];
    let data = num
        .iter()
        .zip(&den)
        .zip(out_mask.iter_mut())
        .map(|((n, d), m)| {
            if *d > 0.0 {
                *m = true;
                n / d
            } else {
                0.0
            }
        })
        .collect();
    (
        Image {
            width: w,
            height: h,
            data,
        },
        out_mask,
    )
}

/// Edge-preserving blur of `img` steered by `guide` intensities.
pub fn joint_bilateral(img: &Image, guide: &Image, spatial_sigma: f64, intensity_sigma: f64) -> Result<Image> {
    let mask = vec![true; img.len()];
    Ok(joint_bilateral_masked(img, &mask, guide, spatial_sigma, intensity_sigma)?.0)
}

pub fn joint_bilateral_masked(
    img: &Image,
    mask: &[bool],
    guide: &Image,
    spatial_sigma: f64,
    intensity_sigma: f64,
) -> Result<(Image, Vec<bool>)> {
    img.check_shape(guide, "joint bilateral guide")?;
    if mask.len() != img.len() {
        return Err(SwiError::DimensionMismatch("mask length must match image".into()));
    }
    if !(spatial_sigma > 0.0 && intensity_sigma > 0.0) {
        return Err(SwiError::invalid("bilateral sigmas must be positive"));
    }
    let (w, h) = (img.width, img.height);
    let r = radius(spatial_sigma) as isize;
    let taps = gaussian_taps(spatial_sigma);
    let range_scale = 1.0 / (2.0 * intensity_sigma * intensity_sigma);

    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut vals = Vec::with_capacity(w);
            let mut valid = Vec::with_capacity(w);
            for x in 0..w {
                let g0 = guide.get(x, y);
                let (mut num, mut den) = (0.0, 0.0);
                for (ky, dy) in (-r..=r).enumerate() {
                    let yy = y as isize + dy;
                    if yy < 0 || yy as usize >= h {
                        continue;
                    }
                    for (kx, dx) in (-r..=r).enumerate() {
                        let xx = x as isize + dx;
                        if xx < 0 || xx as usize >= w {
                            continue;
                        }
                        let j = yy as usize * w + xx as usize;
                        if !mask[j] {
                            continue;
                        }
                        let dg = guide.data[j] - g0;
                        let wgt = taps[ky] * taps[kx] * (-dg * dg * range_scale).exp();
                        num += wgt * img.data[j];
                        den += wgt;
                    }
                }
                if den > 0.0 {
                    vals.push(num / den);
                    valid.push(true);
                } else {
                    vals.push(0.0);
                    valid.push(false);
                }
            }
            (vals, valid)
        })
        .collect();
    let mut data = Vec::with_capacity(w * h);
    let mut out_mask = Vec::with_capacity(w * h);
    for (v, m) in rows {
        data.extend(v);
        out_mask.extend(m);
    }
    Ok((
        Image {
            width: w,
            height: h,
            data,
        },
        out_mask,
    ))
}

/// Offset of the first sample when a full-resolution axis is subsampled with
/// stride `factor`: samples sit at the centres of `factor`-wide blocks.
pub fn sample_offset(factor: usize) -> usize {
    factor / 2
}

/// Number of samples along an axis of length `full` at stride `factor`.
pub fn sample_count(full: usize, factor: usize) -> usize {
    let off = sample_offset(factor);
    if full <= off {
        1
    } else {
        (full - off).div_ceil(factor)
    }
}

/// Subsamples a depth map on the stride-`factor` grid used by
/// [`joint_bilateral_upsample`].
pub fn subsample(full: &DepthMap, factor: usize) -> Result<DepthMap> {
    if factor == 0 {
        return Err(SwiError::invalid("factor must be at least 1"));
    }
    let off = sample_offset(factor);
    let (lw, lh) = (sample_count(full.width, factor), sample_count(full.height, factor));
    let mut depth = Vec::with_capacity(lw * lh);
    let mut mask = Vec::with_capacity(lw * lh);
    for j in 0..lh {
        let y = (j * factor + off).min(full.height - 1);
        for i in 0..lw {
            let x = (i * factor + off).min(full.width - 1);
            let k = y * full.width + x;
            depth.push(full.depth[k]);
            mask.push(full.mask[k]);
        }
    }
    DepthMap::with_mask(lw, lh, depth, mask)
}

/// Joint bilateral upsampling of a low-resolution depth map to the guide's
/// resolution.
///
/// `spatial_sigma` is measured in low-resolution samples, so `factor = 1`
/// reduces to [`joint_bilateral`]. Range weights compare the guide at each
/// output pixel with the guide at the sample sites.
pub fn joint_bilateral_upsample(
    low: &DepthMap,
    guide: &Image,
    factor: usize,
    spatial_sigma: f64,
    intensity_sigma: f64,
) -> Result<DepthMap> {
    if factor == 0 {
        return Err(SwiError::invalid("factor must be at least 1"));
    }
    if !(spatial_sigma > 0.0 && intensity_sigma > 0.0) {
        return Err(SwiError::invalid("bilateral sigmas must be positive"));
    }
    let (w, h) = (guide.width, guide.height);
    let (lw, lh) = (sample_count(w, factor), sample_count(h, factor));
    low.check_shape(lw, lh, "upsampling grid")?;
    let off = sample_offset(factor);
    let f = factor as f64;
    let r = radius(spatial_sigma) as isize;
    let spatial_scale = 1.0 / (2.0 * spatial_sigma * spatial_sigma);
    let range_scale = 1.0 / (2.0 * intensity_sigma * intensity_sigma);
    let site = |j: usize, len: usize| (j * factor + off).min(len - 1);
    let nearest = |p: usize, lowlen: usize| -> isize {
        let c = ((p as f64 - off as f64) / f).round();
        c.clamp(0.0, (lowlen - 1) as f64) as isize
    };

    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let cy = nearest(y, lh);
            let mut vals = Vec::with_capacity(w);
            let mut valid = Vec::with_capacity(w);
            for x in 0..w {
                let cx = nearest(x, lw);
                let g0 = guide.get(x, y);
                let (mut num, mut den) = (0.0, 0.0);
                for jy in (cy - r).max(0)..=(cy + r).min(lh as isize - 1) {
                    let sy = site(jy as usize, h);
                    let dy = (y as f64 - sy as f64) / f;
                    for jx in (cx - r).max(0)..=(cx + r).min(lw as isize - 1) {
                        let k = jy as usize * lw + jx as usize;
                        if !low.mask[k] {
                            continue;
                        }
                        let sx = site(jx as usize, w);
                        let dx = (x as f64 - sx as f64) / f;
                        let dg = guide.get(sx, sy) - g0;
                        let wgt = (-(dx * dx + dy * dy) * spatial_scale - dg * dg * range_scale).exp();
                        num += wgt * low.depth[k];
                        den += wgt;
                    }
                }
                if den > 0.0 {
                    vals.push(num / den);
                    valid.push(true);
                } else {
                    vals.push(0.0);
                    valid.push(false);
                }
            }
            (vals, valid)
        })
        .collect();
    let mut depth = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for (v, m) in rows {
        depth.extend(v);
        mask.extend(m);
    }
    DepthMap::with_mask(w, h, depth, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))
    }

    fn variance(v: &[f64]) -> f64 {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn impulse_gives_normalized_kernel() {
        let mut img = Image::filled(21, 21, 0.0);
        img.set(10, 10, 1.0);
        let out = gaussian_filter(&img, 1.5);
        let total: f64 = out.data.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        // symmetric and peaked at the centre
        assert!((out.get(8, 10) - out.get(12, 10)).abs() < 1e-15);
        assert!(out.get(10, 10) > out.get(11, 10));
    }

    #[test]
    fn constants_pass_through() {
        let img = Image::filled(13, 9, 4.25);
        let guide = noise_image(13, 9, 1);
        for out in [
            gaussian_filter(&img, 2.3),
            joint_bilateral(&img, &guide, 1.7, 0.2).unwrap(),
        ] {
            assert!(out.data.iter().all(|v| (v - 4.25).abs() < 1e-12));
        }
        let low = DepthMap::filled(5, 4, 17.0);
        let up = joint_bilateral_upsample(&low, &noise_image(5 * 3, 4 * 3, 2), 3, 1.0, 0.3).unwrap();
        assert!(up.depth.iter().all(|v| (v - 17.0).abs() < 1e-12));
    }

    #[test]
    fn smoothing_contracts_white_noise() {
        let img = noise_image(64, 64, 3);
        let out = gaussian_filter(&img, 2.0);
        assert!(variance(&out.data) < variance(&img.data));
    }

    #[test]
    fn gaussian_is_linear() {
        let a = noise_image(17, 11, 4);
        let b = noise_image(17, 11, 5);
        let combo = Image::new(
            17,
            11,
            a.data.iter().zip(&b.data).map(|(x, y)| 2.5 * x - 0.75 * y).collect(),
        )
        .unwrap();
        let fa = gaussian_filter(&a, 1.3);
        let fb = gaussian_filter(&b, 1.3);
        let fc = gaussian_filter(&combo, 1.3);
        for i in 0..fc.len() {
            assert!((fc.data[i] - (2.5 * fa.data[i] - 0.75 * fb.data[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn bilateral_with_constant_guide_is_gaussian() {
        let img = noise_image(23, 19, 6);
        let guide = Image::filled(23, 19, 0.4);
        let jb = joint_bilateral(&img, &guide, 1.8, 0.05).unwrap();
        let g = gaussian_filter(&img, 1.8);
        for (a, b) in jb.data.iter().zip(&g.data) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bilateral_wide_range_converges_to_gaussian() {
        let img = noise_image(20, 20, 7);
        let guide = noise_image(20, 20, 8);
        let (lo, hi) = guide.min_max();
        let jb = joint_bilateral(&img, &guide, 1.5, 1e6 * (hi - lo)).unwrap();
        let g = gaussian_filter(&img, 1.5);
        for (a, b) in jb.data.iter().zip(&g.data) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn bilateral_preserves_step_edges() {
        let (w, h) = (40, 20);
        let step = 10.0;
        let guide = Image::from_fn(w, h, |x, _| if x < w / 2 { 0.0 } else { 1.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = Image::from_fn(w, h, |x, _| {
            (if x < w / 2 { 0.0 } else { step }) + rng.random_range(-0.5..0.5)
        });
        let out = joint_bilateral(&img, &guide, 2.5, 0.01).unwrap();
        for y in 0..h {
            // pixels adjacent to the edge must stay on their own side
            let left = out.get(w / 2 - 1, y);
            let right = out.get(w / 2, y);
            assert!(left.abs() < 0.5 + 0.01 * step, "left {left}");
            assert!((right - step).abs() < 0.5 + 0.01 * step, "right {right}");
        }
        let gauss = gaussian_filter(&img, 2.5);
        assert!(gauss.get(w / 2 - 1, 0) > 0.1 * step);
    }

    #[test]
    fn bilateral_output_within_input_range() {
        let img = noise_image(16, 16, 10);
        let guide = noise_image(16, 16, 11);
        let out = joint_bilateral(&img, &guide, 1.2, 0.3).unwrap();
        let (lo, hi) = img.min_max();
        assert!(out.data.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
    }

    #[test]
    fn masked_samples_are_ignored() {
        let mut img = Image::filled(9, 9, 2.0);
        let mut mask = vec![true; 81];
        img.set(4, 4, 1e9);
        mask[4 * 9 + 4] = false;
        let (g, gm) = gaussian_filter_masked(&img, &mask, 1.0);
        assert!(g.data.iter().all(|v| (v - 2.0).abs() < 1e-9));
        assert!(gm.iter().all(|&m| m));
        let guide = Image::filled(9, 9, 0.0);
        let (b, _) = joint_bilateral_masked(&img, &mask, &guide, 1.0, 1.0).unwrap();
        assert!(b.data.iter().all(|v| (v - 2.0).abs() < 1e-9));
        // a fully masked neighbourhood yields an invalid output pixel
        let (_, none) = gaussian_filter_masked(&img, &[false; 81], 1.0);
        assert!(none.iter().all(|&m| !m));
    }

    #[test]
    fn upsample_factor_one_is_bilateral() {
        let img = noise_image(15, 12, 12);
        let guide = noise_image(15, 12, 13);
        let low = DepthMap::from_image(&img);
        let up = joint_bilateral_upsample(&low, &guide, 1, 1.4, 0.25).unwrap();
        let jb = joint_bilateral(&img, &guide, 1.4, 0.25).unwrap();
        for (a, b) in up.depth.iter().zip(&jb.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn subsample_grid_matches_upsampler() {
        let full = DepthMap::from_image(&noise_image(256, 200, 14));
        let low = subsample(&full, 35).unwrap();
        assert_eq!((low.width, low.height), (7, 6));
        assert_eq!(low.get(0, 0), full.get(17, 17));
        let guide = Image::filled(256, 200, 0.5);
        assert!(joint_bilateral_upsample(&low, &guide, 35, 1.0, 0.1).is_ok());
        let wrong = Image::filled(100, 200, 0.5);
        assert!(matches!(
            joint_bilateral_upsample(&low, &wrong, 35, 1.0, 0.1),
            Err(SwiError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mismatched_guide_rejected() {
        let img = Image::filled(4, 4, 0.0);
        let guide = Image::filled(5, 4, 0.0);
        assert!(matches!(
            joint_bilateral(&img, &guide, 1.0, 1.0),
            Err(SwiError::DimensionMismatch(_))
        ));
    }
}
