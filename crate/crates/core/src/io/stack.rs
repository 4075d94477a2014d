//! Frame-stack directories: `frame_n{n}_m{m}.pfm` plus `stack.json`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pfm::{read_pfm, write_pfm};
use super::{read_json, write_json};
use crate::error::{Result, SwiError};
use crate::forward::{AcquisitionSettings, FrameStack};
use crate::optics::{OpticalConfig, ShiftSchedule};

pub const SIDECAR: &str = "stack.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackSidecar {
    pub config: OpticalConfig,
    pub m: usize,
    pub n: usize,
    pub l0: f64,
    pub width: usize,
    pub height: usize,
    /// Mirror positions, row-major over `(n, m)`; informational.
    #[serde(default)]
    pub positions: Vec<f64>,
    /// Absent for stacks recorded by an instrument.
    #[serde(default)]
    pub settings: Option<AcquisitionSettings>,
}

pub fn frame_name(n: usize, m: usize) -> String {
    format!("frame_n{n}_m{m}.pfm")
}

fn parse_frame_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("frame_n")?.strip_suffix(".pfm")?;
    let (n, m) = rest.split_once("_m")?;
    Some((n.parse().ok()?, m.parse().ok()?))
}

pub fn write_stack(dir: &Path, stack: &FrameStack, settings: Option<&AcquisitionSettings>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SwiError::io(dir, e))?;
    let s = &stack.schedule;
    for n in 0..s.n {
        for m in 0..s.m {
            write_pfm(&dir.join(frame_name(n, m)), stack.frame(n, m))?;
        }
    }
    let sidecar = StackSidecar {
        config: stack.config,
        m: s.m,
        n: s.n,
        l0: s.l0,
        width: stack.width(),
        height: stack.height(),
        positions: s.positions().to_vec(),
        settings: settings.copied(),
    };
    write_json(&dir.join(SIDECAR), &sidecar)
}

/// Loads a stack, failing with [`SwiError::Inconsistent`] when the frames on
/// disk do not match the sidecar's `{M, N}`.
pub fn read_stack(dir: &Path) -> Result<(FrameStack, StackSidecar)> {
    let sidecar: StackSidecar = read_json(&dir.join(SIDECAR))?;
    let schedule = ShiftSchedule::new(&sidecar.config, sidecar.m, sidecar.n, sidecar.l0)?;
    let entries = fs::read_dir(dir).map_err(|e| SwiError::io(dir, e))?;
    let mut found = BTreeSet::new();
    for entry in entries {
        let entry = entry.map_err(|e| SwiError::io(dir, e))?;
        if let Some(key) = entry.file_name().to_str().and_then(parse_frame_name) {
            found.insert(key);
        }
    }
    let expected: BTreeSet<_> = (0..sidecar.n).flat_map(|n| (0..sidecar.m).map(move |m| (n, m))).collect();
    if found != expected {
        let missing: Vec<String> = expected.difference(&found).map(|&(n, m)| frame_name(n, m)).collect();
        let extra: Vec<String> = found.difference(&expected).map(|&(n, m)| frame_name(n, m)).collect();
        return Err(SwiError::Inconsistent(format!(
            "sidecar declares {{M, N}} = {{{}, {}}} ({} frames), found {} frames; missing [{}], unexpected [{}]",
            sidecar.m,
            sidecar.n,
            expected.len(),
            found.len(),
            missing.join(", "),
            extra.join(", ")
        )));
    }
    let mut frames = Vec::with_capacity(expected.len());
    for &(n, m) in &expected {
        let path: PathBuf = dir.join(frame_name(n, m));
        let img = read_pfm(&path)?;
        if img.width != sidecar.width || img.height != sidecar.height {
            return Err(SwiError::Inconsistent(format!(
                "{} is {}x{}, sidecar declares {}x{}",
                path.display(),
                img.width,
                img.height,
                sidecar.width,
                sidecar.height
            )));
        }
        frames.push(img);
    }
    Ok((FrameStack::new(frames, schedule, sidecar.config)?, sidecar))
}
