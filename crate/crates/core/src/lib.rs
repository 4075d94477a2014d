//! Simulation and depth reconstruction for swept-angle synthetic wavelength
//! interferometry.
//!
//! * [`optics`]: wavelengths, synthetic/carrier parameters, mirror schedules.
//! * [`forward`]: frame synthesis with speckle, indirect light, ambient light
//!   and sensor noise; Lissajous emission patterns.
//! * [`retrieve`]: the {M,N}-shift phase retrieval pipeline.
//! * [`filter`]: Gaussian and joint bilateral envelope filters, joint
//!   bilateral upsampling.
//! * [`eval`]: metrics, calibration, and experiment protocols.
//! * [`io`]: PFM/PNG/JSON/CSV files and frame-stack directories.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod eval;
pub mod filter;
pub mod forward;
pub mod image;
pub mod io;
pub mod optics;
pub mod retrieve;

pub use error::{Result, SwiError};
pub use filter::{FilterKind, FilterSpec};
pub use forward::{AcquisitionSettings, FrameStack, IlluminationMode, PathContribution, Roughness, SceneModel};
pub use image::{DepthMap, Image};
pub use optics::{derive_synthetic, OpticalConfig, ShiftSchedule};
