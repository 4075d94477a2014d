use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiError};
use crate::filter::{FilterKind, FilterSpec, DEFAULT_PIXEL_PITCH_UM};
use crate::forward::{AcquisitionSettings, IlluminationMode};
use crate::optics::{OpticalConfig, ShiftSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    #[default]
    Subsurface,
    Flat,
    Relief,
    Features,
}

/// Everything a run needs. Loaded from `--config`, then overridden by flags;
/// the resolved value is written to each run's manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: Option<PathBuf>,
    pub frames: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub guide: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    /// Wavelengths in nm.
    pub lambda1: f64,
    pub lambda2: f64,
    /// Synthetic wavelength in µm; overrides `lambda2` when set.
    pub lambda_s: Option<f64>,
    pub m: usize,
    pub n: usize,
    pub l0: f64,
    pub acquisition: AcquisitionSettings,
    pub filter: FilterKind,
    /// Spatial sigma in µm on the object.
    pub sigma_s: f64,
    pub sigma_i: f64,
    pub pixel_pitch: f64,
    pub scene_kind: SceneKind,
    pub scene_size: [usize; 2],
    /// Tracking: applied depth offsets and Gaussian kernel widths, µm.
    pub offsets: Vec<f64>,
    pub kernel_widths: Vec<f64>,
    pub swept_rejection: f64,
    pub swept_realizations: usize,
    /// Trade-off sweep grid.
    pub coverages: Vec<f64>,
    pub shifts: Vec<[usize; 2]>,
    /// Calibration: `(l, E)` CSV; a sweep is simulated when absent.
    pub samples: Option<PathBuf>,
    pub sweep_points: usize,
    /// Simulated sweep span in multiples of λ_s.
    pub sweep_span: f64,
    /// Scanning comparison budget.
    pub scan_rate: f64,
    pub images_per_depth: usize,
    pub total_time: f64,
    pub scan_width: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: None,
            frames: None,
            out: None,
            guide: None,
            gt: None,
            lambda1: 780.0,
            lambda2: 781.0,
            lambda_s: None,
            m: 4,
            n: 4,
            l0: 0.0,
            acquisition: AcquisitionSettings::default(),
            filter: FilterKind::None,
            sigma_s: DEFAULT_PIXEL_PITCH_UM,
            sigma_i: 0.1,
            pixel_pitch: DEFAULT_PIXEL_PITCH_UM,
            scene_kind: SceneKind::Subsurface,
            scene_size: [128, 128],
            offsets: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            kernel_widths: vec![7.0, 15.0, 21.0, 30.0],
            swept_rejection: 0.1,
            swept_realizations: 16,
            coverages: vec![0.25, 0.5, 1.0],
            shifts: vec![[3, 3], [4, 4], [5, 5]],
            samples: None,
            sweep_points: 400,
            sweep_span: 2.0,
            scan_rate: 30000.0,
            images_per_depth: 16,
            total_time: 1.0,
            scan_width: 1600,
        }
    }
}

impl RunConfig {
    pub fn optics(&self) -> Result<OpticalConfig> {
        match self.lambda_s {
            Some(ls) => OpticalConfig::for_synthetic_wavelength(self.lambda1, ls),
            None => OpticalConfig::from_wavelengths(self.lambda1, self.lambda2),
        }
    }

    pub fn schedule(&self, config: &OpticalConfig) -> Result<ShiftSchedule> {
        ShiftSchedule::new(config, self.m, self.n, self.l0)
    }

    pub fn filter_spec(&self) -> FilterSpec {
        match self.filter {
            FilterKind::None => FilterSpec::none(),
            FilterKind::Gaussian => FilterSpec::gaussian(self.sigma_s, self.pixel_pitch),
            FilterKind::JointBilateral => FilterSpec::joint_bilateral(self.sigma_s, self.sigma_i, self.pixel_pitch),
        }
    }

    pub fn swept_settings(&self) -> AcquisitionSettings {
        AcquisitionSettings {
            mode: IlluminationMode::SweptAngle,
            indirect_rejection: self.swept_rejection,
            speckle_realizations: self.swept_realizations,
            ..self.acquisition
        }
    }

    pub fn coherent_settings(&self) -> AcquisitionSettings {
        AcquisitionSettings {
            mode: IlluminationMode::FullFieldCoherent,
            indirect_rejection: 1.0,
            speckle_realizations: 1,
            ..self.acquisition
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optics()?;
        self.acquisition.validate()?;
        self.filter_spec().validate()?;
        if self.scene_size.contains(&0) {
            return Err(SwiError::invalid("scene_size must be positive"));
        }
        Ok(())
    }
}
