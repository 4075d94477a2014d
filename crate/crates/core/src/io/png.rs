//! Grayscale PNG input, 8/16-bit grayscale and colormapped RGB output.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiError};
use crate::image::{DepthMap, Image};

/// Reads an 8- or 16-bit PNG as intensities in `[0, 1]`. Colour images are
/// reduced to Rec. 709 luma; alpha is ignored.
pub fn read_gray_png(path: &Path) -> Result<Image> {
    let file = File::open(path).map_err(|e| SwiError::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| SwiError::format(path, e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| SwiError::format(path, "PNG too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| SwiError::format(path, e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let sixteen = info.bit_depth == png::BitDepth::Sixteen;
    let sample = |i: usize| -> f64 {
        if sixteen {
            u16::from_be_bytes([buf[2 * i], buf[2 * i + 1]]) as f64 / 65535.0
        } else {
            buf[i] as f64 / 255.0
        }
    };
    let data = (0..w * h)
        .map(|p| {
            let base = p * channels;
            match channels {
                1 | 2 => sample(base),
                _ => 0.2126 * sample(base) + 0.7152 * sample(base + 1) + 0.0722 * sample(base + 2),
            }
        })
        .collect();
    Image::new(w, h, data)
}

fn write_png(path: &Path, w: usize, h: usize, color: png::ColorType, depth: png::BitDepth, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| SwiError::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    let to_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => SwiError::io(path, io),
        other => SwiError::format(path, other.to_string()),
    };
    let mut writer = enc.write_header().map_err(to_err)?;
    writer.write_image_data(data).map_err(to_err)?;
    writer.finish().map_err(to_err)
}

/// Writes intensities clamped to `[0, 1]` as 8- or 16-bit grayscale.
pub fn write_gray_png(path: &Path, img: &Image, sixteen_bit: bool) -> Result<()> {
    let q = |v: f64, max: f64| (v.clamp(0.0, 1.0) * max).round();
    if sixteen_bit {
        let data: Vec<u8> = img
            .data
            .iter()
            .flat_map(|&v| (q(v, 65535.0) as u16).to_be_bytes())
            .collect();
        write_png(path, img.width, img.height, png::ColorType::Grayscale, png::BitDepth::Sixteen, &data)
    } else {
        let data: Vec<u8> = img.data.iter().map(|&v| q(v, 255.0) as u8).collect();
        write_png(path, img.width, img.height, png::ColorType::Grayscale, png::BitDepth::Eight, &data)
    }
}

/// Validity mask as 8-bit black/white.
pub fn write_mask_png(path: &Path, depth: &DepthMap) -> Result<()> {
    let data: Vec<u8> = depth.mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_png(path, depth.width, depth.height, png::ColorType::Grayscale, png::BitDepth::Eight, &data)
}

// Viridis control points at 1/8 steps.
const RAMP: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

/// Maps `t ∈ [0, 1]` onto the ramp.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (RAMP[i][c] * (1.0 - f) + RAMP[i + 1][c] * f).round() as u8;
    }
    out
}

/// Depth range mapped onto the colormap ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorRange {
    pub min: f64,
    pub max: f64,
}

/// Writes an 8-bit RGB rendering of the valid depths; masked pixels are
/// black. Returns the range used.
pub fn write_depth_colormap(path: &Path, depth: &DepthMap) -> Result<ColorRange> {
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (d, m) in depth.depth.iter().zip(&depth.mask) {
        if *m {
            min = min.min(*d);
            max = max.max(*d);
        }
    }
    if !min.is_finite() {
        min = 0.0;
        max = 0.0;
    }
    let span = if max > min { max - min } else { 1.0 };
    let data: Vec<u8> = depth
        .depth
        .iter()
        .zip(&depth.mask)
        .flat_map(|(d, m)| if *m { colormap((d - min) / span) } else { [0, 0, 0] })
        .collect();
    write_png(path, depth.width, depth.height, png::ColorType::Rgb, png::BitDepth::Eight, &data)?;
    Ok(ColorRange { min, max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(5, 3, |x, y| (x + 5 * y) as f64 / 14.0);
        for sixteen in [false, true] {
            let p = dir.path().join(format!("g{sixteen}.png"));
            write_gray_png(&p, &img, sixteen).unwrap();
            let back = read_gray_png(&p).unwrap();
            let tol = if sixteen { 1.0 / 65535.0 } else { 1.0 / 255.0 };
            for (a, b) in img.data.iter().zip(&back.data) {
                assert!((a - b).abs() <= tol);
            }
        }
    }

    #[test]
    fn ramp_endpoints_and_monotone_luma() {
        assert_eq!(colormap(0.0), [68, 1, 84]);
        assert_eq!(colormap(1.0), [253, 231, 37]);
        let luma = |c: [u8; 3]| 0.2126 * c[0] as f64 + 0.7152 * c[1] as f64 + 0.0722 * c[2] as f64;
        let mut prev = luma(colormap(0.0));
        for i in 1..=100 {
            let l = luma(colormap(i as f64 / 100.0));
            assert!(l >= prev - 1.0);
            prev = l;
        }
    }

    #[test]
    fn missing_png_is_io_error() {
        assert!(matches!(read_gray_png(Path::new("/nonexistent/x.png")), Err(SwiError::Io { .. })));
    }
}
