//! Synthetic clean scenes and additive degradations `Y = X + N`.
//!
//! Every generator is a pure function of its inputs and a 64-bit seed. The
//! random stream is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`),
//! which is specified independently of platform and word size. Generators
//! never clip; residuals are returned as `degraded − clean` so additivity
//! holds bit-exactly in memory.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::image::Image;
use crate::spectral::{conjugate_index, dft2, inverse_real_part, is_self_conjugate};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SceneModel {
    /// Background plus 3–8 axis-aligned rectangles of distinct intensities.
    PiecewiseConstant,
    /// Plane plus one low-frequency sinusoid; per-pixel differences are at
    /// most `max_slope` in each direction.
    SmoothGradient { max_slope: f64 },
}

pub fn gen_clean(height: usize, width: usize, channels: usize, scene: SceneModel, seed: u64) -> Result<Image> {
    Image::zeros(height, width, channels)?;
    let mut rng = rng_from_seed(seed);
    let planes: Vec<Image> = match scene {
        SceneModel::PiecewiseConstant => {
            let count = rng.random_range(3..=8usize);
            let mut levels: Vec<Vec<f64>> = Vec::with_capacity(count + 1);
            while levels.len() < count + 1 {
                let level: Vec<f64> = (0..channels).map(|_| rng.random::<f64>()).collect();
                if levels.iter().all(|l| l.iter().zip(&level).all(|(a, b)| a != b)) {
                    levels.push(level);
                }
            }
            let mut canvas = vec![0usize; height * width];
            for k in 1..=count {
                let rh = rng.random_range(1..=height.div_ceil(2).max(1));
                let rw = rng.random_range(1..=width.div_ceil(2).max(1));
                let top = rng.random_range(0..=height - rh);
                let left = rng.random_range(0..=width - rw);
                for r in top..top + rh {
                    canvas[r * width + left..r * width + left + rw].fill(k);
                }
            }
            (0..channels)
                .map(|c| Image::from_fn(height, width, |r, col| levels[canvas[r * width + col]][c]))
                .collect::<Result<_>>()?
        }
        SceneModel::SmoothGradient { max_slope } => {
            if !(max_slope > 0.0 && max_slope.is_finite()) {
                return Err(invalid("max_slope", format!("must be positive, got {max_slope}")));
            }
            (0..channels)
                .map(|_| {
                    let half = 0.5 * max_slope;
                    let sx = rng.random_range(-half..=half);
                    let sy = rng.random_range(-half..=half);
                    let wx: f64 = rng.random_range(0.0..=0.3);
                    let wy: f64 = rng.random_range(0.0..=0.3);
                    // amplitude * frequency stays within the remaining half slope
                    let amp = rng.random_range(0.0..=half / wx.max(wy).max(1e-3)).min(0.25);
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    let base = 0.5 - sx * (width as f64 - 1.0) / 2.0 - sy * (height as f64 - 1.0) / 2.0;
                    Image::from_fn(height, width, |r, c| {
                        let (x, y) = (c as f64, r as f64);
                        (base + sx * x + sy * y + amp * (wx * x + wy * y + phase).sin()).clamp(0.0, 1.0)
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    Image::from_channels(&planes)
}

/// Canonical representatives (index ≤ conjugate index) of all non-DC frequencies.
fn frequency_candidates(height: usize, width: usize) -> Vec<usize> {
    (1..height * width).filter(|&i| i <= conjugate_index(i, height, width)).collect()
}

/// Draws `k` distinct non-DC frequency pairs, each given by its canonical index.
pub fn draw_frequency_support(height: usize, width: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    let candidates = frequency_candidates(height, width);
    if k > height * width / 2 || k > candidates.len() {
        return Err(invalid("k", format!("{k} spikes do not fit a {height}x{width} spectrum")));
    }
    let mut rng = rng_from_seed(seed);
    let mut picked: Vec<usize> = sample(&mut rng, candidates.len(), k).into_iter().map(|i| candidates[i]).collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Adds a residual whose spectrum is nonzero exactly on the given frequency
/// pairs, each with magnitude `amplitude` and a seeded random phase (sign for
/// self-conjugate frequencies). Channels receive independent phases.
pub fn apply_freq_sparse_noise_on(image: &Image, support: &[usize], amplitude: f64, seed: u64) -> Result<(Image, Image)> {
    let (h, w) = (image.height(), image.width());
    if let Some(&bad) = support.iter().find(|&&i| i == 0 || i >= h * w) {
        return Err(invalid("support", format!("frequency index {bad} is DC or out of range")));
    }
    if !amplitude.is_finite() {
        return Err(invalid("amplitude", "must be finite"));
    }
    let mut rng = rng_from_seed(seed);
    let mut planes = Vec::with_capacity(image.channels());
    for _ in 0..image.channels() {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); h * w];
        for &idx in support {
            let value = if is_self_conjugate(idx, h, w) {
                Complex64::new(if rng.random::<bool>() { amplitude } else { -amplitude }, 0.0)
            } else {
                Complex64::from_polar(amplitude, rng.random_range(0.0..std::f64::consts::TAU))
            };
            coeffs[idx] = value;
            coeffs[conjugate_index(idx, h, w)] = value.conj();
        }
        planes.push(Image::new(h, w, 1, inverse_real_part(&coeffs, h, w))?);
    }
    finish(image, &Image::from_channels(&planes)?)
}

/// Frequency-sparse noise with `k` conjugate pairs drawn from `seed`.
pub fn apply_freq_sparse_noise(image: &Image, k: usize, amplitude: f64, seed: u64) -> Result<(Image, Image)> {
    let support = draw_frequency_support(image.height(), image.width(), k, seed)?;
    apply_freq_sparse_noise_on(image, &support, amplitude, seed.wrapping_add(0x5eed))
}

fn finish(clean: &Image, noise: &Image) -> Result<(Image, Image)> {
    let degraded = clean.add(noise)?;
    let residual = degraded.sub(clean)?;
    Ok((degraded, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainParams {
    pub count: usize,
    /// Streak direction in degrees from vertical.
    pub angle_deg: f64,
    /// Streak length in pixels.
    pub length: f64,
    pub intensity: f64,
}

/// Adds `count` anti-aliased straight streaks. Each pixel's residual is its
/// total streak coverage, capped at one, times `intensity`.
pub fn apply_rain_streaks(image: &Image, params: &RainParams, seed: u64) -> Result<(Image, Image)> {
    let RainParams { count, angle_deg, length, intensity } = *params;
    if !(length > 0.0 && length.is_finite()) {
        return Err(invalid("length", format!("streaks need positive length, got {length}")));
    }
    if !(intensity >= 0.0 && intensity.is_finite()) || !angle_deg.is_finite() {
        return Err(invalid("rain", "intensity must be >= 0 and the angle finite"));
    }
    let (h, w) = (image.height(), image.width());
    let mut rng = rng_from_seed(seed);
    let (dx, dy) = (angle_deg.to_radians().sin(), angle_deg.to_radians().cos());
    let step = 0.25;
    let samples = (length / step).ceil() as usize;
    let mut coverage = vec![0.0; h * w];
    for _ in 0..count {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let mut layer = vec![0.0; h * w];
        for s in 0..=samples {
            let t = s as f64 / samples as f64 - 0.5;
            let (x, y) = (cx + t * length * dx, cy + t * length * dy);
            let (x0, y0) = (x.floor(), y.floor());
            let (fx, fy) = (x - x0, y - y0);
            let weight = length / (samples + 1) as f64;
            for (oy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
                for (ox, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
                    let (px, py) = (x0 + ox, y0 + oy);
                    let contribution = weight * wx * wy;
                    if contribution > 0.0 && px >= 0.0 && py >= 0.0 && (px as usize) < w && (py as usize) < h {
                        layer[py as usize * w + px as usize] += contribution;
                    }
                }
            }
        }
        for (c, l) in coverage.iter_mut().zip(layer) {
            *c += l.min(1.0);
        }
    }
    let channels = image.channels();
    let noise: Vec<f64> = coverage.iter().flat_map(|c| std::iter::repeat_n(c.min(1.0) * intensity, channels)).collect();
    finish(image, &Image::new(h, w, channels, noise)?)
}

/// Fraction of non-DC spectral energy of a single-channel image whose
/// frequency direction lies within `half_width_deg` of `angle_deg`
/// (measured from the horizontal-frequency axis).
pub fn spectral_energy_fraction_along(image: &Image, angle_deg: f64, half_width_deg: f64) -> Result<f64> {
    let s = dft2(&image.channel(0))?;
    let (h, w) = (s.height() as i64, s.width() as i64);
    let (mut inside, mut total) = (0.0, 0.0);
    for (idx, z) in s.coeffs().iter().enumerate().skip(1) {
        let (u, v) = (idx as i64 / w, idx as i64 % w);
        let fu = if u > h / 2 { u - h } else { u } as f64 / h as f64;
        let fv = if v > w / 2 { v - w } else { v } as f64 / w as f64;
        let dir = fu.atan2(fv).to_degrees();
        let mut diff = (dir - angle_deg).rem_euclid(180.0);
        if diff > 90.0 {
            diff = 180.0 - diff;
        }
        let e = z.norm_sqr();
        total += e;
        if diff <= half_width_deg {
            inside += e;
        }
    }
    Ok(if total > 0.0 { inside / total } else { 0.0 })
}

/// Atmospheric scattering: `degraded = t·x + (1 − t)·A`.
pub fn apply_haze(image: &Image, transmission: f64, airlight: f64) -> Result<(Image, Image)> {
    if !(0.0..=1.0).contains(&transmission) || !(0.0..=1.0).contains(&airlight) {
        return Err(invalid("haze", format!("need t, A in [0, 1], got t = {transmission}, A = {airlight}")));
    }
    let degraded = image.map(|x| transmission * x + (1.0 - transmission) * airlight)?;
    let residual = degraded.sub(image)?;
    Ok((degraded, residual))
}

fn cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

fn reflect(index: i64, len: usize) -> usize {
    let n = len as i64;
    let period = 2 * n;
    let k = index.rem_euclid(period);
    (if k < n { k } else { period - 1 - k }) as usize
}

/// Per output sample, the contributing input indices and normalized weights.
fn resample_weights(input: usize, output: usize, scale: f64) -> Vec<Vec<(usize, f64)>> {
    let kernel_scale = scale.min(1.0);
    let support = 2.0 / kernel_scale;
    (0..output)
        .map(|o| {
            let centre = (o as f64 + 0.5) / scale - 0.5;
            let first = (centre - support).floor() as i64;
            let last = (centre + support).ceil() as i64;
            let mut taps: Vec<(usize, f64)> = (first..=last)
                .map(|i| (reflect(i, input), kernel_scale * cubic(kernel_scale * (centre - i as f64))))
                .filter(|&(_, wgt)| wgt != 0.0)
                .collect();
            let sum: f64 = taps.iter().map(|t| t.1).sum();
            taps.iter_mut().for_each(|t| t.1 /= sum);
            taps
        })
        .collect()
}

/// Bicubic resampling (`a = −0.5`, symmetric boundary) by a factor in
/// `{1/4, 1/2, 1, 2, 4}`. Downscaling widens the kernel to suppress aliasing.
pub fn bicubic_resize(image: &Image, factor: f64) -> Result<Image> {
    if ![0.25, 0.5, 1.0, 2.0, 4.0].contains(&factor) {
        return Err(invalid("factor", format!("unsupported resize factor {factor}")));
    }
    if factor == 1.0 {
        return Ok(image.clone());
    }
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    if factor < 1.0 {
        let d = (1.0 / factor) as usize;
        if h % d != 0 || w % d != 0 {
            return Err(invalid("factor", format!("{h}x{w} is not divisible by {d}")));
        }
    }
    let (oh, ow) = ((h as f64 * factor) as usize, (w as f64 * factor) as usize);
    let wx = resample_weights(w, ow, factor);
    let wy = resample_weights(h, oh, factor);
    let src = image.data();
    let mut rows = vec![0.0; h * ow * ch];
    for r in 0..h {
        for (o, taps) in wx.iter().enumerate() {
            for c in 0..ch {
                rows[(r * ow + o) * ch + c] = taps.iter().map(|&(i, wt)| wt * src[(r * w + i) * ch + c]).sum();
            }
        }
    }
    let mut out = vec![0.0; oh * ow * ch];
    for (o, taps) in wy.iter().enumerate() {
        for col in 0..ow {
            for c in 0..ch {
                out[(o * ow + col) * ch + c] = taps.iter().map(|&(i, wt)| wt * rows[(i * ow + col) * ch + c]).sum();
            }
        }
    }
    Image::new(oh, ow, ch, out)
}

/// Downscale then upscale by `factor` (2 or 4), the usual super-resolution input.
pub fn apply_sr_bicubic(image: &Image, factor: usize) -> Result<(Image, Image)> {
    if factor != 2 && factor != 4 {
        return Err(invalid("factor", format!("super-resolution factor must be 2 or 4, got {factor}")));
    }
    let low = bicubic_resize(image, 1.0 / factor as f64)?;
    let degraded = bicubic_resize(&low, factor as f64)?;
    let residual = degraded.sub(image)?;
    Ok((degraded, residual))
}

/// A degradation and its parameters. The seed is supplied separately so one
/// spec can be applied across a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DegradationSpec {
    /// `k` spike pairs of magnitude `amplitude`. With `support_seed` set the
    /// frequencies are shared by every image and only phases vary.
    FreqSparse { k: usize, amplitude: f64, support_seed: Option<u64> },
    RainStreaks { count: usize, angle_deg: f64, length: f64, intensity: f64 },
    Haze { transmission: f64, airlight: f64 },
    SrBicubic { factor: usize },
}

impl DegradationSpec {
    /// Returns `(degraded, residual)`.
    pub fn apply(&self, image: &Image, seed: u64) -> Result<(Image, Image)> {
        match *self {
            DegradationSpec::FreqSparse { k, amplitude, support_seed: Some(s) } => {
                let support = draw_frequency_support(image.height(), image.width(), k, s)?;
                apply_freq_sparse_noise_on(image, &support, amplitude, seed)
            }
            DegradationSpec::FreqSparse { k, amplitude, support_seed: None } => {
                apply_freq_sparse_noise(image, k, amplitude, seed)
            }
            DegradationSpec::RainStreaks { count, angle_deg, length, intensity } => {
                apply_rain_streaks(image, &RainParams { count, angle_deg, length, intensity }, seed)
            }
            DegradationSpec::Haze { transmission, airlight } => apply_haze(image, transmission, airlight),
            DegradationSpec::SrBicubic { factor } => apply_sr_bicubic(image, factor),
        }
    }
}
