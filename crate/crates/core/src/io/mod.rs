//! File formats: PFM, PNG, JSON documents, CSV tables and frame-stack
//! directories.

pub mod pfm;
pub mod png;
pub mod scene;
pub mod stack;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiError};
use crate::filter::FilterSpec;
use crate::optics::OpticalConfig;

pub use self::pfm::{read_depth_pfm, read_pfm, write_depth_pfm, write_pfm};
pub use self::png::{read_gray_png, write_depth_colormap, write_gray_png, write_mask_png, ColorRange};
pub use scene::{load_scene, save_scene, SceneDoc};
pub use stack::{read_stack, write_stack, StackSidecar};

pub const MANIFEST: &str = "manifest.json";

/// Metadata stored next to a reconstructed depth map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub lambda_s: f64,
    pub l0: f64,
    pub m: usize,
    pub n: usize,
    pub filter: FilterSpec,
    pub config: OpticalConfig,
}

/// Pretty JSON with a trailing newline. Object keys are sorted, so equal
/// values give byte-identical files.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let v = serde_json::to_value(value).map_err(|e| SwiError::format(path, e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| SwiError::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| SwiError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| SwiError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| SwiError::format(path, e.to_string()))
}

/// RFC 4180 CSV with a header row taken from the record field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => SwiError::io(path, io),
        other => SwiError::format(path, format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    for r in rows {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| SwiError::io(path, e))
}

pub fn write_manifest<T: Serialize>(dir: &Path, manifest: &T) -> Result<()> {
    write_json(&dir.join(MANIFEST), manifest)
}
