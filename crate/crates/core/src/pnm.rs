//! Binary Netpbm I/O: PGM (`P5`) for grayscale, PPM (`P6`) for RGB, 8-bit only.
//!
//! Samples map linearly `0..=255 <-> 0.0..=1.0`. Writing clamps to `[0, 1]`
//! and rounds to the nearest level, so a read/write cycle of 8-bit data is
//! lossless.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Decodes a P5/P6 byte stream. `path` is only used for diagnostics.
pub fn decode(bytes: &[u8], path: &Path) -> Result<Image> {
    let err = |offset: usize, reason: &str| Error::Format { path: path.to_path_buf(), offset, reason: reason.into() };
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(err(0, "missing Netpbm magic number"));
    }
    let channels = match bytes[1] {
        b'5' => 1,
        b'6' => 3,
        _ => return Err(err(1, "only binary P5/P6 are supported")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (k, field) in fields.iter_mut().enumerate() {
        // whitespace and comments before each header field
        let ws_start = pos;
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        if pos == ws_start {
            return Err(err(pos, "expected whitespace in header"));
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(err(pos, ["expected width", "expected height", "expected maxval"][k]));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).map_err(|_| err(start, "bad header digits"))?;
        *field = text.parse().map_err(|_| err(start, "header value out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(err(pos, &format!("unsupported maxval {maxval} (only 255)")));
    }
    if width == 0 || height == 0 {
        return Err(err(pos, "zero image dimension"));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(err(pos, "expected single whitespace after maxval")),
    }
    let expected = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(err(
            bytes.len(),
            &format!("truncated payload: {} of {expected} bytes", payload.len()),
        ));
    }
    let data = payload[..expected].iter().map(|&b| f64::from(b) / 255.0).collect();
    Image::new(height, width, channels, data)
}

/// Quantizes a value in `[0, 1]` to an 8-bit level.
pub fn quantize(value: f64) -> u8 {
    (value.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes an image as P5 (1 channel) or P6 (3 channels).
pub fn encode(image: &Image) -> Vec<u8> {
    let magic = if image.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| quantize(v)));
    out
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    decode(&bytes, path)
}

pub fn write_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(image)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
