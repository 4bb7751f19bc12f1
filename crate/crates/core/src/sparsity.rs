//! Frequency-domain statistics of degradation residuals: magnitude histograms
//! of `|DFT(y − x)|` averaged over image pairs, and a generalized-Gaussian
//! shape fit (`γ < 1` is hyper-Laplacian, `γ = 2` Gaussian).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::image::Image;
use crate::spectral::{dft2_channels, is_self_conjugate, NORMALIZATION};

pub const DEFAULT_BINS: usize = 200;

/// Lower end of the shape search interval.
pub const GAMMA_MIN: f64 = 0.05;
/// Upper end of the shape search interval.
pub const GAMMA_MAX: f64 = 10.0;

/// Minimum number of samples for a shape fit.
pub const MIN_FIT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinLayout {
    #[default]
    Linear,
    /// Geometric edges from `max_magnitude * 1e-6` up; smaller values land in the first bin.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramParams {
    pub nbins: usize,
    pub max_magnitude: f64,
    pub layout: BinLayout,
    pub include_dc: bool,
}

impl Default for HistogramParams {
    fn default() -> Self {
        Self { nbins: DEFAULT_BINS, max_magnitude: 1.0, layout: BinLayout::Linear, include_dc: true }
    }
}

/// Histogram of residual spectrum magnitudes, counts averaged per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<f64>,
    /// Averaged number of magnitudes above the last edge.
    pub overflow: f64,
    pub pair_count: usize,
    pub normalization: String,
    pub layout: BinLayout,
    pub include_dc: bool,
}

impl Histogram {
    pub fn total_mass(&self) -> f64 {
        self.counts.iter().sum::<f64>() + self.overflow
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.bin_edges[k], self.bin_edges[k + 1], c));
        }
        out
    }
}

fn edges(params: &HistogramParams) -> Vec<f64> {
    let HistogramParams { nbins, max_magnitude, layout, .. } = *params;
    match layout {
        BinLayout::Linear => (0..=nbins).map(|k| max_magnitude * k as f64 / nbins as f64).collect(),
        BinLayout::Log => {
            let lo = max_magnitude * 1e-6;
            let mut e: Vec<f64> = (0..nbins).map(|k| lo * (max_magnitude / lo).powf(k as f64 / (nbins - 1) as f64)).collect();
            e.insert(0, 0.0);
            e
        }
    }
}

fn check_pairs(pairs: &[(Image, Image)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(invalid("pairs", "at least one degraded/clean pair is required"));
    }
    let first = &pairs[0].0;
    for (k, (y, x)) in pairs.iter().enumerate() {
        y.ensure_same_shape(x).map_err(|e| invalid("pairs", format!("pair {k}: {e}")))?;
        first.ensure_same_shape(y).map_err(|e| invalid("pairs", format!("pair {k}: {e}")))?;
    }
    Ok(())
}

/// Histogram of `|DFT(y − x)|` over every coefficient and channel, divided by
/// the number of pairs. Magnitudes beyond `max_magnitude` go to `overflow`.
pub fn residual_spectrum_histogram(pairs: &[(Image, Image)], params: &HistogramParams) -> Result<Histogram> {
    check_pairs(pairs)?;
    if params.nbins < 2 {
        return Err(invalid("nbins", "need at least two bins"));
    }
    if !(params.max_magnitude > 0.0 && params.max_magnitude.is_finite()) {
        return Err(invalid("max_magnitude", format!("must be positive, got {}", params.max_magnitude)));
    }
    let bin_edges = edges(params);
    let mut counts = vec![0.0; params.nbins];
    let mut overflow = 0.0;
    for (y, x) in pairs {
        for spectrum in dft2_channels(&y.sub(x)?)? {
            for (idx, z) in spectrum.coeffs().iter().enumerate() {
                if idx == 0 && !params.include_dc {
                    continue;
                }
                let mag = z.norm();
                if mag > params.max_magnitude {
                    overflow += 1.0;
                    continue;
                }
                // first edge strictly above mag, minus one
                let bin = bin_edges.partition_point(|&e| e <= mag).saturating_sub(1).min(params.nbins - 1);
                counts[bin] += 1.0;
            }
        }
    }
    let l = pairs.len() as f64;
    counts.iter_mut().for_each(|c| *c /= l);
    Ok(Histogram {
        bin_edges,
        counts,
        overflow: overflow / l,
        pair_count: pairs.len(),
        normalization: NORMALIZATION.to_string(),
        layout: params.layout,
        include_dc: params.include_dc,
    })
}

/// Real and imaginary parts of every residual spectrum coefficient, pooled.
/// Imaginary parts of self-conjugate frequencies (identically zero for real
/// input) are skipped.
pub fn residual_spectrum_samples(pairs: &[(Image, Image)]) -> Result<Vec<f64>> {
    check_pairs(pairs)?;
    let mut samples = Vec::new();
    for (y, x) in pairs {
        for s in dft2_channels(&y.sub(x)?)? {
            for (idx, z) in s.coeffs().iter().enumerate() {
                samples.push(z.re);
                if !is_self_conjugate(idx, s.height(), s.width()) {
                    samples.push(z.im);
                }
            }
        }
    }
    Ok(samples)
}

/// Fitted generalized Gaussian `p(x) ∝ exp(−|x/α|^γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GGFit {
    pub alpha: f64,
    pub gamma: f64,
    pub diagnostics: FitDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub mean_abs: f64,
    pub mean_square: f64,
    /// `E|x| / sqrt(E x²)`
    pub ratio: f64,
    pub samples: f64,
    /// True when the ratio fell outside the attainable range and γ was clamped.
    pub clamped: bool,
}

/// `Γ(2/γ) / sqrt(Γ(1/γ) Γ(3/γ))`, increasing in γ.
pub fn gg_moment_ratio(gamma: f64) -> f64 {
    (ln_gamma(2.0 / gamma) - 0.5 * (ln_gamma(1.0 / gamma) + ln_gamma(3.0 / gamma))).exp()
}

fn fit_from_moments(mean_abs: f64, mean_square: f64, samples: f64) -> Result<GGFit> {
    if samples < MIN_FIT_SAMPLES as f64 {
        return Err(invalid("samples", format!("need at least {MIN_FIT_SAMPLES} samples, got {samples}")));
    }
    if mean_square <= 0.0 {
        return Err(invalid("samples", "all samples are zero; shape is undefined"));
    }
    let ratio = mean_abs / mean_square.sqrt();
    let (mut lo, mut hi) = (GAMMA_MIN, GAMMA_MAX);
    let clamped = ratio <= gg_moment_ratio(lo) || ratio >= gg_moment_ratio(hi);
    let gamma = if ratio <= gg_moment_ratio(lo) {
        lo
    } else if ratio >= gg_moment_ratio(hi) {
        hi
    } else {
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if gg_moment_ratio(mid) < ratio {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    // E x² = α² Γ(3/γ) / Γ(1/γ)
    let alpha = (mean_square * (ln_gamma(1.0 / gamma) - ln_gamma(3.0 / gamma)).exp()).sqrt();
    Ok(GGFit { alpha, gamma, diagnostics: FitDiagnostics { mean_abs, mean_square, ratio, samples, clamped } })
}

/// Moment-ratio fit of a zero-mean generalized Gaussian to raw samples.
pub fn fit_generalized_gaussian(samples: &[f64]) -> Result<GGFit> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(invalid("samples", "non-finite sample"));
    }
    let n = samples.len() as f64;
    let mean_abs = samples.iter().map(|v| v.abs()).sum::<f64>() / n.max(1.0);
    let mean_square = samples.iter().map(|v| v * v).sum::<f64>() / n.max(1.0);
    fit_from_moments(mean_abs, mean_square, n)
}

/// Moment-ratio fit using bin centres of a magnitude histogram as `|x|`.
///
/// Overflow mass is ignored. This is coarser than fitting raw samples, and
/// magnitudes of complex coefficients are not distributed like `|x|` of a
/// real generalized Gaussian; prefer [`fit_generalized_gaussian`] on
/// [`residual_spectrum_samples`] when the pairs are available.
pub fn fit_histogram(hist: &Histogram) -> Result<GGFit> {
    let mut n = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (k, &c) in hist.counts.iter().enumerate() {
        let centre = 0.5 * (hist.bin_edges[k] + hist.bin_edges[k + 1]);
        n += c;
        s1 += c * centre;
        s2 += c * centre * centre;
    }
    let effective = n * hist.pair_count as f64;
    if n <= 0.0 {
        return Err(invalid("histogram", "empty histogram"));
    }
    fit_from_moments(s1 / n, s2 / n, effective)
}
