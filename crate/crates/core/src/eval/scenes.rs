//! Procedural test scenes. All lengths scale with the synthetic wavelength so
//! the same scene can be posed at microscopic and macroscopic ranges.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::forward::{PathContribution, Roughness, SceneModel};
use crate::image::{DepthMap, Image};
use crate::optics::OpticalConfig;

/// Smooth relief spanning roughly 25–55% of the unambiguous range.
fn relief(x: usize, y: usize, w: usize, h: usize, range: f64) -> f64 {
    let u = x as f64 / w as f64;
    let v = y as f64 / h as f64;
    range
        * (0.4
            + 0.08 * (2.0 * PI * u).sin() * (PI * v).cos()
            + 0.05 * (2.0 * PI * (u + v)).cos()
            + 0.02 * (u - 0.5))
}

/// Material label of a pixel: four patches with different appearance and
/// scattering.
fn material(x: usize, y: usize, w: usize, h: usize) -> usize {
    let u = x as f64 / w as f64 - 0.5;
    let v = y as f64 / h as f64 - 0.5;
    if u * u + v * v < 0.06 {
        3
    } else {
        usize::from(u > 0.0) + 2 * usize::from(v > 0.1)
    }
}

const ALBEDO: [f64; 4] = [0.45, 0.6, 0.75, 0.9];
/// Total indirect weight of each material.
const SCATTER_WEIGHT: [f64; 4] = [0.2, 0.45, 0.3, 0.6];
/// Mean excess path as a fraction of the unambiguous range.
const SCATTER_LENGTH: [f64; 4] = [0.03, 0.06, 0.045, 0.08];

/// Rough, subsurface-scattering scene: smooth relief, four materials with
/// different albedo and scattering, two indirect paths per pixel with
/// exponentially distributed excess lengths.
pub fn subsurface_scene(width: usize, height: usize, config: &OpticalConfig, seed: u64) -> SceneModel {
    let range = config.unambiguous_range();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = Image::from_fn(width, height, |x, y| relief(x, y, width, height, range));
    let labels: Vec<usize> = (0..height)
        .flat_map(|y| (0..width).map(move |x| material(x, y, width, height)))
        .collect();
    let albedo = Image::new(width, height, labels.iter().map(|&m| ALBEDO[m]).collect())
        .expect("shape is valid");
    let indirect = labels
        .iter()
        .map(|&m| {
            let exp = Exp::new(1.0 / (SCATTER_LENGTH[m] * range)).expect("positive rate");
            let split: f64 = rng.random_range(0.3..0.7);
            [split, 1.0 - split]
                .into_iter()
                .map(|share| PathContribution {
                    extra_length: exp.sample(&mut rng),
                    weight: SCATTER_WEIGHT[m] * share,
                })
                .collect()
        })
        .collect();
    let guide = albedo.clone();
    SceneModel::new(DepthMap::from_image(&depth), albedo, indirect, Roughness::Rough, guide)
        .expect("procedural scene is valid")
}

/// Flat, specular, direct-only scene at depth `d`.
pub fn flat_scene(width: usize, height: usize, d: f64, albedo: f64) -> SceneModel {
    SceneModel::direct_only(DepthMap::filled(width, height, d), albedo).expect("valid albedo")
}

/// Specular direct-only scene with the smooth relief.
pub fn relief_scene(width: usize, height: usize, config: &OpticalConfig) -> SceneModel {
    let range = config.unambiguous_range();
    let depth = Image::from_fn(width, height, |x, y| relief(x, y, width, height, range));
    SceneModel::direct_only(DepthMap::from_image(&depth), 0.8).expect("valid albedo")
}

/// Mask of the raised strokes drawn by [`feature_scene`].
pub fn feature_mask(width: usize, height: usize) -> Vec<bool> {
    let stroke = 3;
    let mut mask = vec![false; width * height];
    // a lattice of short horizontal and vertical strokes, like printed text
    let pitch = 16;
    for cy in (pitch / 2..height.saturating_sub(pitch / 2)).step_by(pitch) {
        for cx in (pitch / 2..width.saturating_sub(pitch / 2)).step_by(pitch) {
            let vertical = (cx / pitch + cy / pitch) % 2 == 0;
            for t in 0..10 {
                for s in 0..stroke {
                    let (x, y) = if vertical {
                        (cx + s, cy + t - 5)
                    } else {
                        (cx + t - 5, cy + s)
                    };
                    if x < width && y < height {
                        mask[y * width + x] = true;
                    }
                }
            }
        }
    }
    mask
}

/// Rough scene with 3 px wide raised strokes on a gentle slope. Stroke height
/// is 5% of the unambiguous range; strokes are darker in the guide.
pub fn feature_scene(width: usize, height: usize, config: &OpticalConfig) -> SceneModel {
    let range = config.unambiguous_range();
    let mask = feature_mask(width, height);
    let depth = Image::from_fn(width, height, |x, y| {
        let base = range * (0.3 + 0.1 * x as f64 / width as f64 + 0.05 * y as f64 / height as f64);
        if mask[y * width + x] {
            base + 0.05 * range
        } else {
            base
        }
    });
    let albedo = Image::from_fn(width, height, |x, y| if mask[y * width + x] { 0.4 } else { 0.85 });
    let guide = albedo.clone();
    SceneModel::new(DepthMap::from_image(&depth), albedo, Vec::new(), Roughness::Rough, guide)
        .expect("procedural scene is valid")
}
