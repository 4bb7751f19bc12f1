//! Real-valued raster images and patch extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `H x W x C` raster stored row-major with interleaved channels.
///
/// Values are nominally in `[0, 1]`, but intermediate results (residuals,
/// filtered outputs) may leave that range. All values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!("empty dimensions {height}x{width}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!("unsupported channel count {channels}")));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", height * width * channels),
                got: format!("{} values", data.len()),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Single-channel image from a generator `f(row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, 1, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }

    pub(crate) fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected: self.shape_string(), got: other.shape_string() })
        }
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// Extracts one channel as a single-channel image.
    pub fn channel(&self, channel: usize) -> Image {
        assert!(channel < self.channels, "channel {channel} out of range");
        let data = self.data.iter().skip(channel).step_by(self.channels).copied().collect();
        Image { height: self.height, width: self.width, channels: 1, data }
    }

    /// Interleaves single-channel planes into one image.
    pub fn from_channels(planes: &[Image]) -> Result<Image> {
        let first = planes.first().ok_or_else(|| Error::InvalidImage("no channel planes".into()))?;
        let channels = planes.len();
        let mut data = vec![0.0; first.height * first.width * channels];
        for (c, plane) in planes.iter().enumerate() {
            if plane.channels != 1 || plane.height != first.height || plane.width != first.width {
                return Err(Error::ShapeMismatch { expected: first.shape_string(), got: plane.shape_string() });
            }
            for (i, v) in plane.data.iter().enumerate() {
                data[i * channels + c] = *v;
            }
        }
        Image::new(first.height, first.width, channels, data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Image> {
        Image::new(self.height, self.width, self.channels, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        self.ensure_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Image::new(self.height, self.width, self.channels, data)
    }

    pub fn sub(&self, other: &Image) -> Result<Image> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Image) -> Result<Image> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Copy with every value clamped to `[0, 1]`.
    pub fn clamped(&self) -> Image {
        Image { data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(), ..self.clone() }
    }

    /// Rectangular crop; `(top, left)` is the anchor.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Image> {
        if height == 0 || width == 0 || top + height > self.height || left + width > self.width {
            return Err(Error::InvalidImage(format!(
                "crop {height}x{width} at ({top}, {left}) exceeds {}",
                self.shape_string()
            )));
        }
        let mut data = Vec::with_capacity(height * width * self.channels);
        for r in top..top + height {
            let start = (r * self.width + left) * self.channels;
            data.extend_from_slice(&self.data[start..start + width * self.channels]);
        }
        Image::new(height, width, self.channels, data)
    }

    /// Writes `patch` into `self` with its top-left corner at `(top, left)`.
    pub fn paste(&mut self, patch: &Image, top: usize, left: usize) -> Result<()> {
        if patch.channels != self.channels || top + patch.height > self.height || left + patch.width > self.width {
            return Err(Error::ShapeMismatch {
                expected: format!("patch inside {}", self.shape_string()),
                got: format!("{} at ({top}, {left})", patch.shape_string()),
            });
        }
        let row_len = patch.width * self.channels;
        for r in 0..patch.height {
            let dst = ((top + r) * self.width + left) * self.channels;
            self.data[dst..dst + row_len].copy_from_slice(&patch.data[r * row_len..(r + 1) * row_len]);
        }
        Ok(())
    }
}

/// Patches of size `patch x patch`, top-left anchored, enumerated row-major.
///
/// The count is `(floor((H - patch) / stride) + 1) * (floor((W - patch) / stride) + 1)`.
pub fn extract_patches(image: &Image, patch: usize, stride: usize) -> Result<Vec<Image>> {
    if patch == 0 || stride == 0 {
        return Err(crate::error::invalid("patch/stride", "must be positive"));
    }
    if patch > image.height.min(image.width) {
        return Err(crate::error::invalid(
            "patch",
            format!("patch {patch} exceeds image {}x{}", image.height, image.width),
        ));
    }
    let rows = (image.height - patch) / stride + 1;
    let cols = (image.width - patch) / stride + 1;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(image.crop(i * stride, j * stride, patch, patch)?);
        }
    }
    Ok(out)
}
