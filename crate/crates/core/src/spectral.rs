//! Unitary two-dimensional discrete Fourier transform.
//!
//! Both directions are scaled by `1 / sqrt(H * W)`, so the transform is an
//! isometry: the squared ℓ2 norm of an image equals the summed squared
//! magnitudes of its spectrum.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Tolerance for the Hermitian-symmetry check in [`idft2`], relative to
/// `max(1, max |coefficient|)`.
pub const HERMITIAN_TOL: f64 = 1e-6;

/// Normalization tag carried by every spectrum and every report derived from one.
pub const NORMALIZATION: &str = "unitary";

/// Complex `H x W` coefficient array, row-major, unitary normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    height: usize,
    width: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(height: usize, width: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!("empty spectrum {height}x{width}")));
        }
        if coeffs.len() != height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{} coefficients", height * width),
                got: format!("{} coefficients", coeffs.len()),
            });
        }
        if let Some(index) = coeffs.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { height, width, coeffs })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![Complex64::new(0.0, 0.0); height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn normalization(&self) -> &'static str {
        NORMALIZATION
    }

    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.coeffs[u * self.width + v]
    }

    pub fn squared_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest `|c(u,v) - conj(c(-u,-v))|` and where it occurs.
    pub fn hermitian_deviation(&self) -> (f64, usize, usize) {
        hermitian_deviation(&self.coeffs, self.height, self.width)
    }
}

/// Index of the frequency `(-u mod H, -v mod W)` in a row-major `H x W` grid.
pub fn conjugate_index(index: usize, height: usize, width: usize) -> usize {
    let (u, v) = (index / width, index % width);
    ((height - u) % height) * width + (width - v) % width
}

/// True when a frequency is its own conjugate partner (DC and Nyquist lines).
pub fn is_self_conjugate(index: usize, height: usize, width: usize) -> bool {
    conjugate_index(index, height, width) == index
}

/// Free-function form of [`Spectrum::hermitian_deviation`] over a raw coefficient buffer.
pub fn hermitian_deviation(coeffs: &[Complex64], height: usize, width: usize) -> (f64, usize, usize) {
    let mut worst = (0.0, 0, 0);
    for (i, z) in coeffs.iter().enumerate() {
        let d = (z - coeffs[conjugate_index(i, height, width)].conj()).norm();
        if d > worst.0 {
            worst = (d, i / width, i % width);
        }
    }
    worst
}

/// Projects a coefficient array onto the Hermitian-symmetric subspace.
pub fn hermitian_project(coeffs: &mut [Complex64], height: usize, width: usize) {
    for i in 0..coeffs.len() {
        let j = conjugate_index(i, height, width);
        if j < i {
            continue;
        }
        let avg = (coeffs[i] + coeffs[j].conj()) * 0.5;
        coeffs[i] = avg;
        coeffs[j] = avg.conj();
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// In-place unitary 2-D transform of a row-major complex buffer.
pub(crate) fn fft2_in_place(buf: &mut [Complex64], height: usize, width: usize, direction: FftDirection) {
    let row_fft = plan(width, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); row_fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }
    if height > 1 {
        let col_fft = plan(height, direction);
        let mut column = vec![Complex64::new(0.0, 0.0); height];
        scratch.resize(col_fft.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        for c in 0..width {
            for r in 0..height {
                column[r] = buf[r * width + c];
            }
            col_fft.process_with_scratch(&mut column, &mut scratch);
            for r in 0..height {
                buf[r * width + c] = column[r];
            }
        }
    }
    let scale = 1.0 / ((height * width) as f64).sqrt();
    for z in buf.iter_mut() {
        *z *= scale;
    }
}

/// Forward transform of a real plane given as raw samples. No validation.
pub(crate) fn forward_real(data: &[f64], height: usize, width: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut buf, height, width, FftDirection::Forward);
    buf
}

/// Real part of the inverse transform of an arbitrary coefficient array.
///
/// For Hermitian-symmetric input this is the exact inverse; for asymmetric
/// input it is the orthogonal projection of the complex result onto the reals.
pub fn inverse_real_part(coeffs: &[Complex64], height: usize, width: usize) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    fft2_in_place(&mut buf, height, width, FftDirection::Inverse);
    buf.into_iter().map(|z| z.re).collect()
}

/// Unitary forward DFT of a single-channel image.
pub fn dft2(image: &Image) -> Result<Spectrum> {
    if image.channels() != 1 {
        return Err(Error::ShapeMismatch { expected: "single-channel image".into(), got: image.shape_string() });
    }
    Spectrum::new(image.height(), image.width(), forward_real(image.data(), image.height(), image.width()))
}

/// Per-channel spectra of an image of any channel count.
pub fn dft2_channels(image: &Image) -> Result<Vec<Spectrum>> {
    (0..image.channels()).map(|c| dft2(&image.channel(c))).collect()
}

/// Unitary inverse DFT. Rejects spectra that are not Hermitian-symmetric,
/// since those have no real-valued preimage.
pub fn idft2(spectrum: &Spectrum) -> Result<Image> {
    let (h, w) = (spectrum.height, spectrum.width);
    let max_abs = spectrum.coeffs.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let (deviation, row, col) = spectrum.hermitian_deviation();
    if deviation > HERMITIAN_TOL * max_abs {
        return Err(Error::NotHermitian { deviation, row, col });
    }
    Image::new(h, w, 1, inverse_real_part(&spectrum.coeffs, h, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct O(N^2) unitary DFT, independent of the FFT path.
    fn direct_dft(data: &[f64], h: usize, w: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); h * w];
        for u in 0..h {
            for v in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..h {
                    for c in 0..w {
                        let phase = -2.0 * std::f64::consts::PI
                            * ((u * r) as f64 / h as f64 + (v * c) as f64 / w as f64);
                        acc += data[r * w + c] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[u * w + v] = acc / ((h * w) as f64).sqrt();
            }
        }
        out
    }

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, |_, _| rng.random::<f64>()).unwrap()
    }

    #[test]
    fn delta_is_flat() {
        let img = Image::from_fn(4, 4, |r, c| if r == 0 && c == 0 { 1.0 } else { 0.0 }).unwrap();
        let s = dft2(&img).unwrap();
        for z in s.coeffs() {
            assert!((z - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_is_dc() {
        let c = 0.37;
        let s = dft2(&Image::filled(8, 8, 1, c).unwrap()).unwrap();
        assert!((s.get(0, 0) - Complex64::new(8.0 * c, 0.0)).norm() < 1e-14);
        assert!(s.coeffs()[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn dc_only_inverts_to_constant() {
        let c = 0.61;
        let mut s = Spectrum::zeros(8, 8).unwrap();
        s.coeffs_mut()[0] = Complex64::new(8.0 * c, 0.0);
        let img = idft2(&s).unwrap();
        assert!(img.data().iter().all(|v| (v - c).abs() < 1e-14));
        let zero = idft2(&Spectrum::zeros(8, 8).unwrap()).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn roundtrip_16() {
        let img = random_image(16, 16, 3);
        let back = idft2(&dft2(&img).unwrap()).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_direct_dft_for_all_sizes_up_to_64() {
        let sizes: Vec<(usize, usize)> =
            (1..=64).map(|n| (n, 1 + (n * 7) % 64)).chain([(64, 64), (1, 1), (7, 9), (33, 17)]).collect();
        for (k, &(h, w)) in sizes.iter().enumerate() {
            let img = random_image(h, w, k as u64);
            let fast = dft2(&img).unwrap();
            let slow = direct_dft(img.data(), h, w);
            let err = fast.coeffs().iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{h}x{w}: {err}");
        }
    }

    #[test]
    fn rejects_asymmetric_spectrum() {
        let mut s = Spectrum::zeros(4, 4).unwrap();
        s.coeffs_mut()[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(idft2(&s), Err(Error::NotHermitian { .. })));
        hermitian_project(s.coeffs_mut(), 4, 4);
        assert!(idft2(&s).is_ok());
    }

    #[test]
    fn rejects_multichannel_and_nonfinite() {
        assert!(dft2(&Image::zeros(2, 2, 3).unwrap()).is_err());
        assert!(Spectrum::new(1, 1, vec![Complex64::new(f64::INFINITY, 0.0)]).is_err());
    }

    #[test]
    fn conjugate_index_pairs() {
        for (h, w) in [(4, 4), (5, 3), (1, 6)] {
            for i in 0..h * w {
                assert_eq!(conjugate_index(conjugate_index(i, h, w), h, w), i);
            }
        }
        assert_eq!((0..16).filter(|&i| is_self_conjugate(i, 4, 4)).count(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parseval_and_hermitian(h in 1usize..20, w in 1usize..20, seed in any::<u64>()) {
            let img = random_image(h, w, seed);
            let s = dft2(&img).unwrap();
            let e = img.squared_norm();
            prop_assert!((s.squared_norm() - e).abs() <= 1e-9 * e.max(1e-300));
            prop_assert!(s.hermitian_deviation().0 < 1e-9);
            let back = idft2(&s).unwrap();
            for (a, b) in img.data().iter().zip(back.data()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn linearity(n in 1usize..12, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let x = random_image(n, n + 1, seed);
            let y = random_image(n, n + 1, seed ^ 0x9e37);
            let combo = x.zip_with(&y, |p, q| a * p + b * q).unwrap();
            let lhs = dft2(&combo).unwrap();
            let (sx, sy) = (dft2(&x).unwrap(), dft2(&y).unwrap());
            for ((l, p), q) in lhs.coeffs().iter().zip(sx.coeffs()).zip(sy.coeffs()) {
                prop_assert!((l - (a * p + b * q)).norm() < 1e-10);
            }
        }
    }
}
