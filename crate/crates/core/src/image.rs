//! Dense single-channel rasters.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiError};

/// Row-major `f64` raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(SwiError::DimensionMismatch(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(SwiError::DimensionMismatch(format!(
                "{}x{} image needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &Image, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(SwiError::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Per-pixel depth in µm with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub mask: Vec<bool>,
}

impl DepthMap {
    /// All-valid depth map. Non-finite samples are masked out.
    pub fn new(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        let mask = depth.iter().map(|d| d.is_finite()).collect();
        Self::with_mask(width, height, depth, mask)
    }

    pub fn with_mask(width: usize, height: usize, depth: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(SwiError::DimensionMismatch(format!(
                "depth map must be non-empty, got {width}x{height}"
            )));
        }
        if depth.len() != width * height || mask.len() != width * height {
            return Err(SwiError::DimensionMismatch(format!(
                "{width}x{height} depth map with {} depths and {} mask entries",
                depth.len(),
                mask.len()
            )));
        }
        let mask = mask
            .into_iter()
            .zip(&depth)
            .map(|(m, d)| m && d.is_finite())
            .collect();
        Ok(Self {
            width,
            height,
            depth,
            mask,
        })
    }

    pub fn from_image(img: &Image) -> Self {
        Self::new(img.width, img.height, img.data.clone()).expect("image shape is valid")
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("non-empty depth map")
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.depth[i])
    }

    /// Depth as an image; invalid pixels become NaN.
    pub fn to_image(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self
                .depth
                .iter()
                .zip(&self.mask)
                .map(|(&d, &m)| if m { d } else { f64::NAN })
                .collect(),
        }
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn translated(&self, offset: f64) -> DepthMap {
        DepthMap {
            width: self.width,
            height: self.height,
            depth: self.depth.iter().map(|d| d + offset).collect(),
            mask: self.mask.clone(),
        }
    }

    pub(crate) fn check_shape(&self, width: usize, height: usize, what: &str) -> Result<()> {
        if self.width == width && self.height == height {
            Ok(())
        } else {
            Err(SwiError::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, width, height
            )))
        }
    }
}
