//! PSNR and SSIM.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::image::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `10 log10(peak² / MSE)`; identical images give `+∞`.
pub fn psnr(x: &Image, reference: &Image, peak: f64) -> Result<f64> {
    x.ensure_same_shape(reference)?;
    let mse = x.sub(reference)?.squared_norm() / x.len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (peak * peak / mse).log10() })
}

pub fn mse(x: &Image, reference: &Image) -> Result<f64> {
    Ok(x.sub(reference)?.squared_norm() / x.len() as f64)
}

fn gaussian_taps() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let taps: Vec<f64> = (0..SSIM_WINDOW).map(|i| (-(i as f64 - half).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Neumaier-compensated mean.
fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp, mut n) = (0.0f64, 0.0f64, 0usize);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
        n += 1;
    }
    (sum + comp) / n as f64
}

fn mirror(i: i64, n: usize) -> usize {
    let n = n as i64;
    let k = i.rem_euclid(2 * n);
    (if k < n { k } else { 2 * n - 1 - k }) as usize
}

/// Separable Gaussian filter with symmetric (half-sample) boundary.
fn blur(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as i64;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            tmp[r * w + c] = taps.iter().enumerate().map(|(k, t)| t * plane[r * w + mirror(c as i64 + k as i64 - half, w)]).sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = taps.iter().enumerate().map(|(k, t)| t * tmp[mirror(r as i64 + k as i64 - half, h) * w + c]).sum();
        }
    }
    out
}

/// Mean SSIM map over all pixels (and channels) with an 11×11 Gaussian
/// window, `σ = 1.5`, `C1 = (0.01·peak)²`, `C2 = (0.03·peak)²`.
pub fn ssim(x: &Image, reference: &Image, peak: f64) -> Result<f64> {
    x.ensure_same_shape(reference)?;
    let (h, w) = (x.height(), x.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(invalid("image", format!("{h}x{w} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")));
    }
    let taps = gaussian_taps();
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let mut total = 0.0;
    for ch in 0..x.channels() {
        // Moments are taken about the plane mean to avoid cancellation in
        // E[x²] − μ²; flat regions then give exactly zero variance.
        let centered = |img: &Image| {
            let data = img.channel(ch).into_data();
            let shift = mean(data.iter().copied());
            let data: Vec<f64> = data.iter().map(|v| v - shift).collect();
            (shift, data)
        };
        let (sa, a) = centered(x);
        let (sb, b) = centered(reference);
        let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).collect::<Vec<_>>();
        let mu_a = blur(&a, h, w, &taps);
        let mu_b = blur(&b, h, w, &taps);
        let aa = blur(&prod(&a, &a), h, w, &taps);
        let bb = blur(&prod(&b, &b), h, w, &taps);
        let ab = blur(&prod(&a, &b), h, w, &taps);
        total += mean((0..h * w).map(|i| {
            let va = aa[i] - mu_a[i] * mu_a[i];
            let vb = bb[i] - mu_b[i] * mu_b[i];
            let cov = ab[i] - mu_a[i] * mu_b[i];
            let (ma, mb) = (mu_a[i] + sa, mu_b[i] + sb);
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        }));
    }
    Ok(total / x.channels() as f64)
}

pub(crate) fn serialize_db<S: Serializer>(value: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if value.is_infinite() && *value > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*value)
    }
}

fn deserialize_db<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Db {
        Num(f64),
        Text(String),
    }
    match Db::deserialize(d)? {
        Db::Num(v) => Ok(v),
        Db::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Db::Text(t) => Err(serde::de::Error::custom(format!("invalid dB value {t:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub name: String,
    #[serde(serialize_with = "serialize_db", deserialize_with = "deserialize_db")]
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub images: Vec<ImageMetrics>,
    #[serde(serialize_with = "serialize_db", deserialize_with = "deserialize_db")]
    pub mean_psnr_db: f64,
    pub mean_ssim: f64,
    /// LPIPS/PI need pretrained networks and are not computed.
    pub perceptual_metrics: String,
}

impl MetricReport {
    pub fn from_images(images: Vec<ImageMetrics>) -> Self {
        let n = images.len().max(1) as f64;
        let mean_psnr_db = images.iter().map(|m| m.psnr_db).sum::<f64>() / n;
        let mean_ssim = images.iter().map(|m| m.ssim).sum::<f64>() / n;
        Self { images, mean_psnr_db, mean_ssim, perceptual_metrics: "unavailable".into() }
    }
}

/// PSNR/SSIM (peak 1) of every `(name, restored, reference)` triple.
pub fn evaluate<'a>(items: impl IntoIterator<Item = (String, &'a Image, &'a Image)>) -> Result<MetricReport> {
    let images = items
        .into_iter()
        .map(|(name, x, r)| Ok(ImageMetrics { name, psnr_db: psnr(x, r, 1.0)?, ssim: ssim(x, r, 1.0)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_images(images))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pattern() -> Image {
        Image::from_fn(24, 24, |r, c| 0.5 + 0.3 * ((r as f64 / 3.0).sin() * (c as f64 / 4.0).cos())).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let x = pattern();
        assert_eq!(psnr(&x, &x, 1.0).unwrap(), f64::INFINITY);
        let a = Image::filled(4, 4, 1, 0.5).unwrap();
        let b = Image::filled(4, 4, 1, 0.6).unwrap();
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let c = Image::filled(4, 4, 1, 0.51).unwrap();
        assert!((psnr(&a, &c, 1.0).unwrap() - 40.0).abs() < 1e-9);
        assert!(psnr(&a, &Image::zeros(4, 5, 1).unwrap(), 1.0).is_err());
    }

    #[test]
    fn ssim_examples() {
        let x = pattern();
        assert!((ssim(&x, &x, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let (a, b) = (0.3, 0.7);
        let ca = Image::filled(16, 16, 1, a).unwrap();
        let cb = Image::filled(16, 16, 1, b).unwrap();
        let c1 = (0.01f64).powi(2);
        let expected = (2.0 * a * b + c1) / (a * a + b * b + c1);
        assert!((ssim(&ca, &cb, 1.0).unwrap() - expected).abs() < 1e-15);
        let mean = x.mean();
        let negated = x.map(|v| 2.0 * mean - v).unwrap();
        assert!(ssim(&negated, &x, 1.0).unwrap() < 0.0);
        assert!(ssim(&Image::zeros(10, 30, 1).unwrap(), &Image::zeros(10, 30, 1).unwrap(), 1.0).is_err());
    }

    #[test]
    fn symmetry_and_monotonicity() {
        let x = pattern();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.02, 0.05, 0.1, 0.2] {
            let y = Image::new(24, 24, 1, x.data().iter().zip(&noise).map(|(v, n)| v + amp * n).collect()).unwrap();
            let p = psnr(&y, &x, 1.0).unwrap();
            assert_eq!(p, psnr(&x, &y, 1.0).unwrap());
            assert!((ssim(&y, &x, 1.0).unwrap() - ssim(&x, &y, 1.0).unwrap()).abs() < 1e-12);
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn report_serializes_infinity() {
        let x = pattern();
        let report = evaluate([("a.pgm".to_string(), &x, &x)]).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"psnr_db\":\"inf\""));
        assert!(json.contains("\"perceptual_metrics\":\"unavailable\""));
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
