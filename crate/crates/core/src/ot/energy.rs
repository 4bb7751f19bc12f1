//! Energy distance between two empirical point clouds (V-statistic form):
//! `2 E‖u − v‖ − E‖u − u′‖ − E‖v − v′‖`.

use crate::error::{invalid, Result};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Result<usize> {
    let first = a.first().ok_or_else(|| invalid("samples", "first sample set is empty"))?;
    if b.is_empty() {
        return Err(invalid("samples", "second sample set is empty"));
    }
    let d = first.as_ref().len();
    if a.iter().chain(b).any(|p| p.as_ref().len() != d) {
        return Err(invalid("samples", "sample dimensions differ"));
    }
    Ok(d)
}

fn mean_pairwise<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> f64 {
    let mut total = 0.0;
    for u in a {
        for v in b {
            total += dist(u.as_ref(), v.as_ref());
        }
    }
    total / (a.len() * b.len()) as f64
}

pub fn energy_distance<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Result<f64> {
    check(a, b)?;
    let value = 2.0 * mean_pairwise(a, b) - mean_pairwise(a, a) - mean_pairwise(b, b);
    // the V-statistic is a squared MMD and cannot be negative; clip round-off
    Ok(value.max(0.0))
}

/// Energy distance and its gradient with respect to each point of `a`.
///
/// Coincident points contribute a zero subgradient.
pub fn energy_distance_grad<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Result<(f64, Vec<Vec<f64>>)> {
    let d = check(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut grads = vec![vec![0.0; d]; a.len()];
    let mut cross = 0.0;
    let mut within = 0.0;
    for (i, u) in a.iter().enumerate() {
        let u = u.as_ref();
        for v in b {
            let v = v.as_ref();
            let r = dist(u, v);
            cross += r;
            if r > 0.0 {
                let s = 2.0 / (n * m * r);
                for k in 0..d {
                    grads[i][k] += s * (u[k] - v[k]);
                }
            }
        }
        for (i2, w) in a.iter().enumerate().skip(i + 1) {
            let w = w.as_ref();
            let r = dist(u, w);
            within += 2.0 * r;
            if r > 0.0 {
                // each unordered pair appears twice in the n² sum
                let s = 2.0 / (n * n * r);
                for k in 0..d {
                    let t = s * (u[k] - w[k]);
                    grads[i][k] -= t;
                    grads[i2][k] += t;
                }
            }
        }
    }
    let value = 2.0 * cross / (n * m) - within / (n * n) - mean_pairwise(b, b);
    Ok((value.max(0.0), grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn examples() {
        assert_eq!(energy_distance(&[vec![0.0]], &[vec![1.0]]).unwrap(), 2.0);
        let s = vec![vec![0.0], vec![2.0]];
        assert_eq!(energy_distance(&s, &s).unwrap(), 0.0);
        let t = vec![vec![2.0], vec![0.0]];
        assert_eq!(energy_distance(&s, &t).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let empty: Vec<Vec<f64>> = vec![];
        assert!(energy_distance(&empty, &[vec![1.0]]).is_err());
        assert!(energy_distance(&[vec![1.0]], &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn zero_iff_equal_multisets_on_small_sets() {
        // all pairs of 3-point multisets over {0, 1, 2} in ℝ¹
        let mut sets = Vec::new();
        for a in 0..3 {
            for b in a..3 {
                for c in b..3 {
                    sets.push(vec![vec![a as f64], vec![b as f64], vec![c as f64]]);
                }
            }
        }
        for s in &sets {
            for t in &sets {
                let e = energy_distance(s, t).unwrap();
                assert_eq!(e < 1e-12, s == t, "{s:?} vs {t:?}: {e}");
                assert!((e - energy_distance(t, s).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let b: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let (value, grad) = energy_distance_grad(&a, &b).unwrap();
        assert!((value - energy_distance(&a, &b).unwrap()).abs() < 1e-12);
        let h = 1e-6;
        for i in 0..4 {
            for k in 0..3 {
                let mut p = a.clone();
                let mut q = a.clone();
                p[i][k] += h;
                q[i][k] -= h;
                let fd = (energy_distance(&p, &b).unwrap() - energy_distance(&q, &b).unwrap()) / (2.0 * h);
                assert!((fd - grad[i][k]).abs() < 1e-7, "{fd} vs {}", grad[i][k]);
            }
        }
    }
}
