//! Forward model: synthesizes the intensity frames a sensor records while the
//! reference mirror steps through a [`ShiftSchedule`].
//!
//! Each pixel sees a direct path plus an optional mixture of indirect paths
//! (subsurface scattering, stray aberration paths). Every path contributes a
//! two-wavelength correlation whose real part is a fast carrier fringe times a
//! slow envelope `sin(k_s(d − l))`. Swept-angle illumination is modelled as an
//! already-integrated angular sum: indirect paths are attenuated and their
//! speckle phasors are averaged over independent angular draws, while the
//! direct path keeps one phasor for every angle.

mod lissajous;

pub use lissajous::{coverage_metric, lissajous_pattern};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiError};
use crate::image::{DepthMap, Image};
use crate::optics::{OpticalConfig, ShiftSchedule};

/// One indirect light path relative to the direct path of its pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathContribution {
    /// One-way excess path length in µm.
    pub extra_length: f64,
    /// Field power relative to the direct path.
    pub weight: f64,
}

impl PathContribution {
    pub fn new(extra_length: f64, weight: f64) -> Result<Self> {
        let p = Self {
            extra_length,
            weight,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !self.extra_length.is_finite() {
            return Err(SwiError::invalid("path extra_length must be finite"));
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(SwiError::invalid(format!(
                "path weight must be finite and non-negative, got {}",
                self.weight
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Roughness {
    /// Deterministic phase, no speckle.
    #[default]
    Specular,
    /// Random speckle phase per path.
    Rough,
}

/// Ground truth for one simulated scene.
#[derive(Debug, Clone)]
pub struct SceneModel {
    pub depth: DepthMap,
    pub albedo: Image,
    /// Per-pixel indirect mixture, row-major. Empty means no indirect light.
    pub indirect: Vec<Vec<PathContribution>>,
    pub roughness: Roughness,
    /// Ambient-light appearance; used as the joint bilateral guide.
    pub guide: Image,
}

impl SceneModel {
    pub fn new(
        depth: DepthMap,
        albedo: Image,
        indirect: Vec<Vec<PathContribution>>,
        roughness: Roughness,
        guide: Image,
    ) -> Result<Self> {
        let scene = Self {
            depth,
            albedo,
            indirect,
            roughness,
            guide,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Direct-only specular scene with a uniform albedo; the guide is the albedo.
    pub fn direct_only(depth: DepthMap, albedo: f64) -> Result<Self> {
        let albedo = Image::filled(depth.width, depth.height, albedo);
        let guide = albedo.clone();
        Self::new(depth, albedo, Vec::new(), Roughness::Specular, guide)
    }

    pub fn width(&self) -> usize {
        self.depth.width
    }

    pub fn height(&self) -> usize {
        self.depth.height
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.depth.width, self.depth.height);
        self.depth.check_shape(self.albedo.width, self.albedo.height, "albedo")?;
        self.depth.check_shape(self.guide.width, self.guide.height, "guide")?;
        if self.albedo.data.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(SwiError::invalid("albedo must lie in [0, 1]"));
        }
        if !self.indirect.is_empty() && self.indirect.len() != w * h {
            return Err(SwiError::DimensionMismatch(format!(
                "indirect mixture has {} pixels, scene has {}",
                self.indirect.len(),
                w * h
            )));
        }
        for paths in &self.indirect {
            for p in paths {
                p.validate()?;
            }
        }
        Ok(())
    }

    /// Same scene with every depth moved by `offset` µm.
    pub fn translated(&self, offset: f64) -> SceneModel {
        SceneModel {
            depth: self.depth.translated(offset),
            ..self.clone()
        }
    }

    fn indirect_at(&self, i: usize) -> &[PathContribution] {
        self.indirect.get(i).map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IlluminationMode {
    #[default]
    SweptAngle,
    FullFieldCoherent,
}

/// How the carrier fringe is synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CarrierModel {
    /// Carrier `sin(2k(d − l_n^m))` times an envelope held at `l_n`: carrier
    /// shifts never move the envelope.
    #[default]
    Product,
    /// Full two-wavelength correlation at the actual mirror position, carrier
    /// wavenumber `k(2+ε)`.
    Exact,
}

fn default_realizations() -> usize {
    1
}

fn default_reference() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSettings {
    #[serde(default)]
    pub mode: IlluminationMode,
    /// Fraction of indirect correlation that survives swept-angle probing.
    #[serde(default)]
    pub indirect_rejection: f64,
    /// Laser-to-ambient signal-to-background ratio; `None` means no ambient light.
    #[serde(default)]
    pub sbr: Option<f64>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub speckle_realizations: usize,
    #[serde(default)]
    pub carrier: CarrierModel,
    /// Reference-arm intensity.
    #[serde(default = "default_reference")]
    pub reference_intensity: f64,
}

impl Default for AcquisitionSettings {
    fn default() -> Self {
        Self {
            mode: IlluminationMode::SweptAngle,
            indirect_rejection: 0.0,
            sbr: None,
            noise_sigma: 0.0,
            seed: 0,
            speckle_realizations: 1,
            carrier: CarrierModel::Product,
            reference_intensity: 1.0,
        }
    }
}

impl AcquisitionSettings {
    pub fn swept(indirect_rejection: f64, speckle_realizations: usize) -> Self {
        Self {
            mode: IlluminationMode::SweptAngle,
            indirect_rejection,
            speckle_realizations,
            ..Self::default()
        }
    }

    pub fn coherent() -> Self {
        Self {
            mode: IlluminationMode::FullFieldCoherent,
            indirect_rejection: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.indirect_rejection) {
            return Err(SwiError::invalid(format!(
                "indirect_rejection must lie in [0, 1], got {}",
                self.indirect_rejection
            )));
        }
        if self.speckle_realizations == 0 {
            return Err(SwiError::invalid("speckle_realizations must be at least 1"));
        }
        if let Some(s) = self.sbr {
            if !(s > 0.0) {
                return Err(SwiError::invalid(format!("sbr must be positive, got {s}")));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SwiError::invalid("noise_sigma must be finite and non-negative"));
        }
        if !(self.reference_intensity.is_finite() && self.reference_intensity >= 0.0) {
            return Err(SwiError::invalid("reference_intensity must be non-negative"));
        }
        Ok(())
    }

    fn ambient_factor(&self) -> f64 {
        self.sbr.map_or(0.0, |s| 1.0 / s)
    }
}

/// Mirror position used for one frame. The envelope is evaluated at
/// `envelope` and the carrier at `carrier`; they coincide for a plain `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePosition {
    pub envelope: f64,
    pub carrier: f64,
}

impl From<f64> for ReferencePosition {
    fn from(l: f64) -> Self {
        Self {
            envelope: l,
            carrier: l,
        }
    }
}

/// Recorded frames for every `(n, m)` of a schedule.
#[derive(Debug, Clone)]
pub struct FrameStack {
    /// Row-major over `(n, m)`: `frames[n * M + m]`.
    pub frames: Vec<Image>,
    pub schedule: ShiftSchedule,
    pub config: OpticalConfig,
}

impl FrameStack {
    pub fn new(frames: Vec<Image>, schedule: ShiftSchedule, config: OpticalConfig) -> Result<Self> {
        if frames.len() != schedule.frame_count() {
            return Err(SwiError::Inconsistent(format!(
                "schedule {{{}, {}}} needs {} frames, got {}",
                schedule.m,
                schedule.n,
                schedule.frame_count(),
                frames.len()
            )));
        }
        let first = &frames[0];
        for f in &frames[1..] {
            first.check_shape(f, "frame stack")?;
        }
        if frames.iter().any(|f| f.data.iter().any(|v| !(*v >= 0.0))) {
            return Err(SwiError::Inconsistent(
                "frames must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            frames,
            schedule,
            config,
        })
    }

    pub fn frame(&self, n: usize, m: usize) -> &Image {
        &self.frames[n * self.schedule.m + m]
    }

    /// The `M` carrier-shifted frames of synthetic shift `n`.
    pub fn carrier_group(&self, n: usize) -> &[Image] {
        let m = self.schedule.m;
        &self.frames[n * m..(n + 1) * m]
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }
}

/// Two-wavelength correlation `exp(−2ik(d−l))·[1 + exp(−2ikε(d−l))]`.
pub fn path_correlation(d_path: f64, l: f64, config: &OpticalConfig) -> Complex64 {
    let x = d_path - l;
    let carrier = Complex64::from_polar(1.0, -2.0 * config.k * x);
    carrier * (1.0 + Complex64::from_polar(1.0, -2.0 * config.k_s * x))
}

/// Correlation with the second laser in antiphase,
/// `exp(−2ik(d−l))·[1 − exp(−2ikε(d−l))]`. Its real part is
/// `2 sin(k(2+ε)(d−l))·sin(k_s(d−l))`, the product of carrier and envelope
/// whose squared envelope is `sin²(k_s(d−l))`. Frames are rendered from this
/// form.
pub fn quadrature_correlation(d_path: f64, l: f64, config: &OpticalConfig) -> Complex64 {
    let x = d_path - l;
    let carrier = Complex64::from_polar(1.0, -2.0 * config.k * x);
    carrier * (1.0 - Complex64::from_polar(1.0, -2.0 * config.k_s * x))
}

/// Squared envelope amplitude `sin²(k_s(d − l))`.
pub fn envelope_squared(d: f64, l: f64, config: &OpticalConfig) -> f64 {
    let s = (config.k_s * (d - l)).sin();
    s * s
}

/// Per-pixel effective paths: `(extra_length, complex amplitude)` with the
/// direct path first.
#[derive(Debug, Clone)]
struct EffectivePaths {
    offsets: Vec<usize>,
    paths: Vec<(f64, Complex64)>,
    /// Interference-free intensity (scene + reference + ambient).
    baseline: Vec<f64>,
}

impl EffectivePaths {
    fn pixel(&self, i: usize) -> &[(f64, Complex64)] {
        &self.paths[self.offsets[i]..self.offsets[i + 1]]
    }
}

const SPECKLE_STREAM: u64 = 0x5eed_5be0_c1e5_0001;
const NOISE_STREAM: u64 = 0x5eed_0015_e000_0002;

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, tag: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(mix64(mix64(seed ^ tag) ^ a) ^ b))
}

fn random_phasor(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

/// Draws speckle phasors and folds albedo, path weights, and illumination
/// mode into one complex amplitude per path. Phasors come from one RNG stream
/// per row, consumed in (pixel, path, realization) order.
fn effective_paths(scene: &SceneModel, settings: &AcquisitionSettings) -> EffectivePaths {
    let (w, h) = (scene.width(), scene.height());
    let swept = settings.mode == IlluminationMode::SweptAngle;
    let rejection = if swept { settings.indirect_rejection } else { 1.0 };
    let realizations = if swept { settings.speckle_realizations } else { 1 };
    let rough = scene.roughness == Roughness::Rough;
    let ambient = settings.ambient_factor();

    // per row: path counts, (extra length, amplitude) pairs, baselines
    type Row = (Vec<usize>, Vec<(f64, Complex64)>, Vec<f64>);
    let rows: Vec<Row> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut rng = stream_rng(settings.seed, SPECKLE_STREAM, y as u64, 0);
            let mut counts = Vec::with_capacity(w);
            let mut paths = Vec::new();
            let mut baseline = Vec::with_capacity(w);
            for x in 0..w {
                let i = y * w + x;
                let albedo = scene.albedo.data[i];
                let indirect = scene.indirect_at(i);
                // Field amplitudes add coherently at most; using that bound for
                // the scene-arm intensity keeps noiseless frames non-negative.
                let amp_sum: f64 = 1.0 + indirect.iter().map(|p| p.weight.sqrt()).sum::<f64>();
                baseline.push(
                    albedo * amp_sum * amp_sum
                        + settings.reference_intensity
                        + albedo * ambient,
                );
                if !scene.depth.mask[i] {
                    counts.push(0);
                    continue;
                }
                let direct = if rough {
                    random_phasor(&mut rng)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                let a = albedo.sqrt();
                paths.push((0.0, direct * a));
                for p in indirect {
                    let phasor = if rough {
                        let sum: Complex64 = (0..realizations).map(|_| random_phasor(&mut rng)).sum();
                        sum / realizations as f64
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    let amp = (p.weight * albedo).sqrt() * rejection;
                    paths.push((p.extra_length, phasor * amp));
                }
                counts.push(1 + indirect.len());
            }
            (counts, paths, baseline)
        })
        .collect();

    let mut offsets = Vec::with_capacity(w * h + 1);
    offsets.push(0);
    let mut all_paths = Vec::new();
    let mut all_baseline = Vec::with_capacity(w * h);
    for (counts, paths, baseline) in rows {
        for c in counts {
            let last = *offsets.last().expect("offsets start at zero");
            offsets.push(last + c);
        }
        all_paths.extend(paths);
        all_baseline.extend(baseline);
    }
    EffectivePaths {
        offsets,
        paths: all_paths,
        baseline: all_baseline,
    }
}

fn render_with(
    scene: &SceneModel,
    eff: &EffectivePaths,
    pos: ReferencePosition,
    settings: &AcquisitionSettings,
    config: &OpticalConfig,
    frame_index: u64,
) -> Image {
    let (w, h) = (scene.width(), scene.height());
    let noise = (settings.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, settings.noise_sigma).expect("sigma validated"));
    let data: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let mut rng = noise
                .as_ref()
                .map(|_| stream_rng(settings.seed, NOISE_STREAM, frame_index, y as u64));
            let mut row = Vec::with_capacity(w);
            for x in 0..w {
                let i = y * w + x;
                let d = scene.depth.depth[i];
                let mut value = eff.baseline[i];
                for &(extra, amp) in eff.pixel(i) {
                    let dp = d + extra;
                    value += match settings.carrier {
                        CarrierModel::Product => {
                            let envelope = (config.k_s * (dp - pos.envelope)).sin();
                            let fringe = amp
                                * Complex64::i()
                                * Complex64::from_polar(1.0, -2.0 * config.k * (dp - pos.carrier));
                            2.0 * envelope * fringe.re
                        }
                        CarrierModel::Exact => {
                            (amp * quadrature_correlation(dp, pos.carrier, config)).re
                        }
                    };
                }
                if let (Some(dist), Some(rng)) = (noise.as_ref(), rng.as_mut()) {
                    value += dist.sample(rng);
                }
                row.push(value.max(0.0));
            }
            row
        })
        .collect();
    Image {
        width: w,
        height: h,
        data,
    }
}

/// Renders the intensity image for one mirror position.
///
/// Per pixel `I = b + Σ_p Re{A_p·c_p}` where `c_p` is the quadrature
/// correlation of path `p` and `A_p = √(w_p·albedo)·s_p`, so a unit-albedo
/// direct path peaks at `±2`. Ambient light adds `albedo/sbr`; noise is added
/// last and the result is clamped at zero.
pub fn render_frame(
    scene: &SceneModel,
    position: impl Into<ReferencePosition>,
    settings: &AcquisitionSettings,
    config: &OpticalConfig,
) -> Result<Image> {
    scene.validate()?;
    settings.validate()?;
    let eff = effective_paths(scene, settings);
    Ok(render_with(scene, &eff, position.into(), settings, config, 0))
}

/// Interference-free level `b` the renderer uses for each pixel.
pub fn interference_free_level(scene: &SceneModel, settings: &AcquisitionSettings) -> Result<Image> {
    scene.validate()?;
    settings.validate()?;
    let eff = effective_paths(scene, settings);
    Image::new(scene.width(), scene.height(), eff.baseline)
}

/// Renders every frame of `schedule`. Speckle is drawn once and shared by all
/// frames; the frame `(n, m)` uses noise stream `n·M + m`.
pub fn acquire_stack(
    scene: &SceneModel,
    schedule: &ShiftSchedule,
    settings: &AcquisitionSettings,
    config: &OpticalConfig,
) -> Result<FrameStack> {
    scene.validate()?;
    settings.validate()?;
    let eff = effective_paths(scene, settings);
    let frames = (0..schedule.n)
        .flat_map(|n| (0..schedule.m).map(move |m| (n, m)))
        .map(|(n, m)| {
            let pos = match settings.carrier {
                CarrierModel::Product => ReferencePosition {
                    envelope: schedule.envelope_position(n),
                    carrier: schedule.position(n, m),
                },
                CarrierModel::Exact => ReferencePosition::from(schedule.position(n, m)),
            };
            render_with(scene, &eff, pos, settings, config, (n * schedule.m + m) as u64)
        })
        .collect();
    FrameStack::new(frames, schedule.clone(), *config)
}
