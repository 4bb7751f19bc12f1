//! Fidelity costs: the spatial `‖r‖₂^β` cost and the complex ℓq cost on DFT
//! coefficients, `Σ (ℜ² + ℑ² + eps²)^(q/2)`, with its gradient.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::image::Image;
use crate::spectral::{dft2_channels, Spectrum};

/// Magnitudes at or below this count as zero for the exact ℓ0 cost.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Default smoothing for the ℓq cost, in normalized pixel units.
pub const DEFAULT_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostKind {
    /// `‖r‖₂^β` on the spatial residual, `β ≥ 1`.
    SpatialLbeta { beta: f64 },
    /// Complex ℓq on the unitary spectrum of the residual, `q ∈ [0,1] ∪ {2}`.
    FrequencyLq { q: f64 },
}

/// A validated fidelity cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    #[serde(flatten)]
    pub kind: CostKind,
    #[serde(default)]
    pub smoothing_eps: f64,
}

impl CostSpec {
    pub fn spatial(beta: f64) -> Result<Self> {
        let spec = Self { kind: CostKind::SpatialLbeta { beta }, smoothing_eps: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn frequency(q: f64, eps: f64) -> Result<Self> {
        let spec = Self { kind: CostKind::FrequencyLq { q }, smoothing_eps: eps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing_eps >= 0.0 && self.smoothing_eps.is_finite()) {
            return Err(invalid("smoothing_eps", format!("must be finite and >= 0, got {}", self.smoothing_eps)));
        }
        match self.kind {
            CostKind::SpatialLbeta { beta } => check_beta(beta),
            CostKind::FrequencyLq { q } => check_q(q),
        }
    }

    /// Whether gradient-based operations accept this cost.
    pub fn differentiable(&self) -> bool {
        match self.kind {
            CostKind::SpatialLbeta { .. } => true,
            CostKind::FrequencyLq { q } => q == 2.0 || self.smoothing_eps > 0.0,
        }
    }

    /// Evaluates the cost of a residual image, summed over channels.
    pub fn evaluate(&self, residual: &Image) -> Result<f64> {
        self.validate()?;
        match self.kind {
            CostKind::SpatialLbeta { beta } => spatial_cost(residual, beta),
            CostKind::FrequencyLq { q } => {
                let mut total = 0.0;
                for s in dft2_channels(residual)? {
                    total += complex_lq(&s, q, self.smoothing_eps)?;
                }
                Ok(total)
            }
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 1.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid("beta", format!("must be >= 1, got {beta}")))
    }
}

fn check_q(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) || q == 2.0 {
        Ok(())
    } else {
        Err(invalid("q", format!("must lie in [0, 1] or equal 2, got {q}")))
    }
}

/// `(Σ r_i²)^(β/2)` over every sample of the residual.
pub fn spatial_cost(residual: &Image, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(residual.squared_norm().powf(beta / 2.0))
}

/// Complex ℓq cost of a spectrum. See [`complex_lq_coeffs`].
pub fn complex_lq(spectrum: &Spectrum, q: f64, eps: f64) -> Result<f64> {
    complex_lq_coeffs(spectrum.coeffs(), q, eps)
}

/// `Σ (ℜ² + ℑ² + eps²)^(q/2)`. With `q = 0` and `eps = 0` this is the number of
/// coefficients whose magnitude exceeds [`ZERO_THRESHOLD`].
pub fn complex_lq_coeffs(coeffs: &[Complex64], q: f64, eps: f64) -> Result<f64> {
    check_q(q)?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be finite and >= 0, got {eps}")));
    }
    let e2 = eps * eps;
    let total = if q == 0.0 && eps == 0.0 {
        coeffs.iter().filter(|z| z.norm() > ZERO_THRESHOLD).count() as f64
    } else if q == 2.0 {
        coeffs.iter().map(|z| z.norm_sqr() + e2).sum()
    } else {
        coeffs.iter().map(|z| (z.norm_sqr() + e2).powf(q / 2.0)).sum()
    };
    Ok(total)
}

/// Gradient of [`complex_lq_coeffs`] with respect to real and imaginary parts,
/// packed as `∂/∂ℜ + i ∂/∂ℑ` per coefficient.
///
/// Requires `eps > 0` whenever `q < 2`.
pub fn complex_lq_grad_coeffs(coeffs: &[Complex64], q: f64, eps: f64) -> Result<Vec<Complex64>> {
    check_q(q)?;
    if q < 2.0 && !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be > 0 for q = {q} < 2, got {eps}")));
    }
    if q == 2.0 {
        return Ok(coeffs.iter().map(|z| z * 2.0).collect());
    }
    let e2 = eps * eps;
    Ok(coeffs.iter().map(|z| z * (q * (z.norm_sqr() + e2).powf(q / 2.0 - 1.0))).collect())
}

pub fn complex_lq_grad(spectrum: &Spectrum, q: f64, eps: f64) -> Result<Spectrum> {
    let g = complex_lq_grad_coeffs(spectrum.coeffs(), q, eps)?;
    Spectrum::new(spectrum.height(), spectrum.width(), g)
}

/// Ground cost between two points of `ℝ^d`, used by the transport solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroundCost {
    /// `‖x − y‖₂²`
    SquaredL2,
    /// `Σ |x_i − y_i|^q`, `q ∈ [0, 1]`; `q = 0` counts entries above [`ZERO_THRESHOLD`].
    Lq { q: f64 },
    /// `‖x − y‖₂^β`
    L2Power { beta: f64 },
}

impl GroundCost {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GroundCost::SquaredL2 => Ok(()),
            GroundCost::Lq { q } if (0.0..=1.0).contains(&q) => Ok(()),
            GroundCost::Lq { q } => Err(invalid("q", format!("ground ℓq cost needs q in [0, 1], got {q}"))),
            GroundCost::L2Power { beta } => check_beta(beta),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let diffs = x.iter().zip(y).map(|(a, b)| a - b);
        match *self {
            GroundCost::SquaredL2 => diffs.map(|d| d * d).sum(),
            GroundCost::Lq { q: 0.0 } => diffs.filter(|d| d.abs() > ZERO_THRESHOLD).count() as f64,
            GroundCost::Lq { q } => diffs.map(|d| d.abs().powf(q)).sum(),
            GroundCost::L2Power { beta } => diffs.map(|d| d * d).sum::<f64>().powf(beta / 2.0),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            GroundCost::SquaredL2 => "l2".to_string(),
            GroundCost::Lq { q } => format!("l{q}"),
            GroundCost::L2Power { beta } => format!("l2^{beta}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dft2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spatial_examples() {
        let r = Image::new(1, 2, 1, vec![3.0, 4.0]).unwrap();
        assert_eq!(spatial_cost(&r, 1.0).unwrap(), 5.0);
        assert!((spatial_cost(&r, 2.0).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(spatial_cost(&Image::zeros(3, 3, 1).unwrap(), 1.7).unwrap(), 0.0);
        assert!(spatial_cost(&r, 0.5).is_err());
    }

    #[test]
    fn complex_lq_examples() {
        assert!((complex_lq_coeffs(&[c(3.0, 4.0)], 1.0, 0.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((complex_lq_coeffs(&[c(3.0, 4.0)], 0.5, 0.0).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(complex_lq_coeffs(&[c(3.0, 4.0), c(0.0, 0.0), c(1e-13, 0.0)], 0.0, 0.0).unwrap(), 1.0);
        assert!(complex_lq_coeffs(&[c(1.0, 0.0)], 1.5, 0.0).is_err());
        assert!(complex_lq_coeffs(&[c(1.0, 0.0)], -0.1, 0.0).is_err());
    }

    #[test]
    fn q2_matches_spatial_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = Image::from_fn(12, 7, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let freq = complex_lq(&dft2(&r).unwrap(), 2.0, 0.0).unwrap();
        let spatial = spatial_cost(&r, 2.0).unwrap();
        assert!((freq - spatial).abs() <= 1e-9 * spatial);
    }

    #[test]
    fn gradient_examples() {
        let g = complex_lq_grad_coeffs(&[c(3.0, 0.0)], 2.0, 0.0).unwrap();
        assert_eq!(g, vec![c(6.0, 0.0)]);
        let z = complex_lq_grad_coeffs(&[c(0.0, 0.0); 3], 0.5, 1e-3).unwrap();
        assert!(z.iter().all(|g| g.norm() == 0.0));
        assert!(complex_lq_grad_coeffs(&[c(1.0, 1.0)], 1.0, 0.0).is_err());
    }

    fn fd_check(coeffs: &[Complex64], q: f64, eps: f64) -> f64 {
        let g = complex_lq_grad_coeffs(coeffs, q, eps).unwrap();
        let h = 1e-6;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..coeffs.len() {
            for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut p = coeffs.to_vec();
                let mut m = coeffs.to_vec();
                p[i] += dir * h;
                m[i] -= dir * h;
                let fd = (complex_lq_coeffs(&p, q, eps).unwrap() - complex_lq_coeffs(&m, q, eps).unwrap()) / (2.0 * h);
                let an = if dir.re == 1.0 { g[i].re } else { g[i].im };
                num += (fd - an).powi(2);
                den += fd * fd;
            }
        }
        (num / den).sqrt()
    }

    #[test]
    fn gradient_matches_central_differences() {
        assert!(fd_check(&[c(3.0, 4.0)], 1.0, 1e-3) < 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..100 {
            let q = [0.5, 1.0, 2.0][trial % 3];
            let coeffs: Vec<_> = (0..6).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
            let err = fd_check(&coeffs, q, 1e-4);
            assert!(err < 1e-4, "trial {trial} q={q}: {err}");
        }
    }

    #[test]
    fn ground_costs() {
        let x = [1.0, 0.0, 2.0];
        let y = [0.0, 0.0, 0.0];
        assert_eq!(GroundCost::SquaredL2.eval(&x, &y), 5.0);
        assert_eq!(GroundCost::Lq { q: 0.0 }.eval(&x, &y), 2.0);
        assert_eq!(GroundCost::Lq { q: 1.0 }.eval(&x, &y), 3.0);
        assert!((GroundCost::L2Power { beta: 1.0 }.eval(&x, &y) - 5f64.sqrt()).abs() < 1e-15);
        assert!(GroundCost::Lq { q: 2.0 }.validate().is_err());
    }

    #[test]
    fn cost_spec_validation() {
        assert!(CostSpec::frequency(0.3, 0.0).is_ok());
        assert!(!CostSpec::frequency(0.3, 0.0).unwrap().differentiable());
        assert!(CostSpec::frequency(2.0, 0.0).unwrap().differentiable());
        assert!(CostSpec::spatial(0.9).is_err());
        assert!(CostSpec::frequency(1.0, -1.0).is_err());
        let r = Image::new(1, 2, 1, vec![3.0, 4.0]).unwrap();
        let spec = CostSpec::frequency(2.0, 0.0).unwrap();
        assert!((spec.evaluate(&r).unwrap() - 25.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn homogeneity(re in -5.0f64..5.0, im in -5.0f64..5.0, re2 in -5.0f64..5.0, s in -4.0f64..4.0, qi in 0usize..4) {
            let q = [0.0, 0.5, 1.0, 2.0][qi];
            let m = [c(re, im), c(re2, 0.0)];
            let scaled: Vec<_> = m.iter().map(|z| z * s).collect();
            let lhs = complex_lq_coeffs(&scaled, q, 0.0).unwrap();
            let rhs = if q == 0.0 {
                if s.abs() * 5.0 > ZERO_THRESHOLD { complex_lq_coeffs(&m, 0.0, 0.0).unwrap() } else { lhs }
            } else {
                s.abs().powf(q) * complex_lq_coeffs(&m, q, 0.0).unwrap()
            };
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn sparsity_preference(a in 0.01f64..10.0, b in 0.01f64..10.0, m in 1usize..30, qi in 0usize..3) {
            let q = [0.0, 0.5, 1.0][qi];
            let mut u = vec![c(0.0, 0.0); m];
            u[0] = c(a, 0.0);
            let v = vec![c(0.0, b); m];
            let cu = complex_lq_coeffs(&u, q, 0.0).unwrap();
            let cv = complex_lq_coeffs(&v, q, 0.0).unwrap();
            let lhs = if q == 0.0 { 1.0 } else { a.powf(q) };
            let rhs = if q == 0.0 { m as f64 } else { m as f64 * b.powf(q) };
            prop_assume!((lhs - rhs).abs() > 1e-9);
            prop_assert_eq!(cu < cv, lhs < rhs);
        }

        #[test]
        fn monotone_in_eps(re in -3.0f64..3.0, im in -3.0f64..3.0, e1 in 0.0f64..1.0, de in 0.0f64..1.0, qi in 0usize..4) {
            let q = [0.0, 0.5, 1.0, 2.0][qi];
            let m = [c(re, im), c(0.0, 0.0)];
            let lo = complex_lq_coeffs(&m, q, e1).unwrap();
            let hi = complex_lq_coeffs(&m, q, e1 + de).unwrap();
            prop_assert!(hi >= lo - 1e-12);
        }
    }
}
