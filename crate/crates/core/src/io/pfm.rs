//! Portable float map, single channel (`Pf`).
//!
//! Writes little-endian (scale `-1.0`) with rows bottom-up. Reads either
//! endianness.

use std::fs;
use std::path::Path;

use crate::error::{Result, SwiError};
use crate::image::{DepthMap, Image};

pub fn encode_pfm(img: &Image) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    out.reserve(img.len() * 4);
    for y in (0..img.height).rev() {
        for &v in &img.data[y * img.width..(y + 1) * img.width] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<Image> {
    let bad = |msg: &str| SwiError::format(path, msg);
    // Three whitespace-separated header fields, then exactly one whitespace byte.
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos || pos >= bytes.len() {
            return Err(bad("truncated PFM header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII PFM header"))?);
    }
    pos += 1;
    match fields[0] {
        "Pf" => {}
        "PF" => return Err(bad("colour PFM is not supported; expected single-channel Pf")),
        _ => return Err(bad("not a PFM file")),
    }
    let width: usize = fields[1].parse().map_err(|_| bad("bad PFM width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("bad PFM height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("bad PFM scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("PFM scale must be non-zero"));
    }
    let little = scale < 0.0;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("PFM dimensions overflow"))?;
    let body = &bytes[pos..];
    if body.len() < expected {
        return Err(bad(&format!("PFM body has {} bytes, expected {expected}", body.len())));
    }
    let mut data = vec![0.0; width * height];
    for (i, chunk) in body[..expected].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (row, x) = (i / width, i % width);
        data[(height - 1 - row) * width + x] = v as f64;
    }
    Image::new(width, height, data)
}

pub fn write_pfm(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, encode_pfm(img)).map_err(|e| SwiError::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| SwiError::io(path, e))?;
    decode_pfm(&bytes, path)
}

/// Masked pixels are stored as NaN.
pub fn write_depth_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    write_pfm(path, &depth.to_image())
}

/// Non-finite samples become masked pixels.
pub fn read_depth_pfm(path: &Path) -> Result<DepthMap> {
    let img = read_pfm(path)?;
    DepthMap::new(img.width, img.height, img.data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_orientation() {
        let img = Image::from_fn(3, 2, |x, y| (10 * y + x) as f64 + 0.5);
        let bytes = encode_pfm(&img);
        assert!(bytes.starts_with(b"Pf\n3 2\n-1.0\n"));
        // first stored row is the bottom row
        let first = f32::from_le_bytes(bytes[12..16].try_into().unwrap());
        assert_eq!(first, 10.5);
        assert_eq!(decode_pfm(&bytes, Path::new("x")).unwrap(), img);
    }

    #[test]
    fn big_endian_is_accepted() {
        let mut bytes = b"Pf 2 1 1.0\n".to_vec();
        bytes.extend_from_slice(&1.5f32.to_be_bytes());
        bytes.extend_from_slice(&(-2.0f32).to_be_bytes());
        let img = decode_pfm(&bytes, Path::new("x")).unwrap();
        assert_eq!(img.data, vec![1.5, -2.0]);
    }

    #[test]
    fn malformed_input_is_rejected() {
        for bytes in [&b"P6\n1 1\n-1.0\n\0\0\0\0"[..], b"Pf\n2 2\n-1.0\n\0\0\0\0", b"Pf\n1", b"PF\n1 1\n-1\n"] {
            assert!(decode_pfm(bytes, Path::new("x")).is_err());
        }
    }

    #[test]
    fn masked_depth_survives_as_nan() {
        let d = DepthMap::with_mask(2, 1, vec![1.0, 2.0], vec![true, false]).unwrap();
        let img = decode_pfm(&encode_pfm(&d.to_image()), Path::new("x")).unwrap();
        let back = DepthMap::new(2, 1, img.data).unwrap();
        assert_eq!(back.mask, vec![true, false]);
        assert_eq!(back.depth[0], 1.0);
    }
}
