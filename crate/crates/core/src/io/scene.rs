//! Scene documents: a JSON file referencing image files by relative path.
//!
//! ```json
//! {
//!   "depth": "depth.pfm",
//!   "albedo": "albedo.png",
//!   "guide": "guide.png",
//!   "roughness": "rough",
//!   "indirect": [
//!     { "extra_length": 40.0, "weight": 0.3 },
//!     { "extra_length": 0.0, "weight": 1.0,
//!       "extra_length_map": "path0_length.pfm", "weight_map": "path0_weight.pfm" }
//!   ]
//! }
//! ```
//!
//! `albedo` is a number or an image path; `guide` defaults to the albedo.
//! A layer contributes one indirect path per pixel with length
//! `extra_length + extra_length_map` and weight `weight · weight_map`.
//! Images ending in `.pfm` are float maps, anything else is read as PNG.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pfm::{read_depth_pfm, read_pfm, write_depth_pfm, write_pfm};
use super::png::{read_gray_png, write_gray_png};
use super::{read_json, write_json};
use crate::error::{Result, SwiError};
use crate::forward::{PathContribution, Roughness, SceneModel};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlbedoSource {
    Uniform(f64),
    Map(PathBuf),
}

impl Default for AlbedoSource {
    fn default() -> Self {
        AlbedoSource::Uniform(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndirectLayer {
    #[serde(default)]
    pub extra_length: f64,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_length_map: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_map: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDoc {
    pub depth: PathBuf,
    #[serde(default)]
    pub albedo: AlbedoSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guide: Option<PathBuf>,
    #[serde(default)]
    pub roughness: Roughness,
    #[serde(default)]
    pub indirect: Vec<IndirectLayer>,
}

pub fn read_image(path: &Path) -> Result<Image> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm")) {
        read_pfm(path)
    } else {
        read_gray_png(path)
    }
}

fn check_dims(img: &Image, w: usize, h: usize, path: &Path) -> Result<()> {
    if img.width != w || img.height != h {
        return Err(SwiError::DimensionMismatch(format!(
            "{} is {}x{}, depth map is {w}x{h}",
            path.display(),
            img.width,
            img.height
        )));
    }
    Ok(())
}

pub fn load_scene(path: &Path) -> Result<SceneModel> {
    let doc: SceneDoc = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let depth = read_depth_pfm(&base.join(&doc.depth))?;
    let (w, h) = (depth.width, depth.height);
    let load = |p: &Path| -> Result<Image> {
        let full = base.join(p);
        let img = read_image(&full)?;
        check_dims(&img, w, h, &full)?;
        Ok(img)
    };
    let albedo = match &doc.albedo {
        AlbedoSource::Uniform(a) => Image::filled(w, h, *a),
        AlbedoSource::Map(p) => load(p)?,
    };
    let guide = match &doc.guide {
        Some(p) => load(p)?,
        None => albedo.clone(),
    };
    let mut indirect = Vec::new();
    if !doc.indirect.is_empty() {
        indirect = vec![Vec::with_capacity(doc.indirect.len()); w * h];
        for layer in &doc.indirect {
            let lengths = layer.extra_length_map.as_deref().map(load).transpose()?;
            let weights = layer.weight_map.as_deref().map(load).transpose()?;
            for (i, paths) in indirect.iter_mut().enumerate() {
                let len = layer.extra_length + lengths.as_ref().map_or(0.0, |l| l.data[i]);
                let wt = layer.weight * weights.as_ref().map_or(1.0, |m| m.data[i]);
                if wt > 0.0 {
                    paths.push(PathContribution::new(len, wt)?);
                }
            }
        }
    }
    SceneModel::new(depth, albedo, indirect, doc.roughness, guide)
}

/// Writes `scene.json` and its images into `dir`. Albedo, guide and
/// per-path maps are stored as float maps so the scene reloads exactly.
pub fn save_scene(dir: &Path, scene: &SceneModel) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| SwiError::io(dir, e))?;
    write_depth_pfm(&dir.join("depth.pfm"), &scene.depth)?;
    write_pfm(&dir.join("albedo.pfm"), &scene.albedo)?;
    write_pfm(&dir.join("guide.pfm"), &scene.guide)?;
    write_gray_png(&dir.join("guide.png"), &scene.guide, true)?;
    let (w, h) = (scene.width(), scene.height());
    let layers = scene.indirect.iter().map(Vec::len).max().unwrap_or(0);
    let mut indirect = Vec::with_capacity(layers);
    for k in 0..layers {
        let pick = |f: fn(&PathContribution) -> f64| {
            Image::from_fn(w, h, |x, y| scene.indirect[y * w + x].get(k).map_or(0.0, f))
        };
        let len_name = PathBuf::from(format!("path{k}_length.pfm"));
        let wt_name = PathBuf::from(format!("path{k}_weight.pfm"));
        write_pfm(&dir.join(&len_name), &pick(|p| p.extra_length))?;
        write_pfm(&dir.join(&wt_name), &pick(|p| p.weight))?;
        indirect.push(IndirectLayer {
            extra_length: 0.0,
            weight: 1.0,
            extra_length_map: Some(len_name),
            weight_map: Some(wt_name),
        });
    }
    let doc = SceneDoc {
        depth: "depth.pfm".into(),
        albedo: AlbedoSource::Map("albedo.pfm".into()),
        guide: Some("guide.pfm".into()),
        roughness: scene.roughness,
        indirect,
    };
    let path = dir.join("scene.json");
    write_json(&path, &doc)?;
    Ok(path)
}
