//! Entropic optimal transport via log-domain Sinkhorn iterations.

use super::measure::{check_problem, CostMatrix, TransportPlan};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornParams {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once the ℓ1 violation of the row marginal drops below this.
    pub tol: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        Self { epsilon: 0.05, max_iters: 10_000, tol: 1e-9 }
    }
}

/// Result of a Sinkhorn run. When `converged` is false the plan is the last
/// iterate and `marginal_violation` says how far off it is.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    pub plan: TransportPlan,
    pub iterations: usize,
    pub marginal_violation: f64,
    pub converged: bool,
}

impl SinkhornResult {
    pub fn into_converged(self) -> Result<TransportPlan> {
        if self.converged {
            Ok(self.plan)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, violation: self.marginal_violation })
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn sinkhorn(source: &[f64], target: &[f64], cost: &CostMatrix, params: SinkhornParams) -> Result<SinkhornResult> {
    check_problem(source, target, cost)?;
    let SinkhornParams { epsilon, max_iters, tol } = params;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    let (n, m) = (source.len(), target.len());
    let log_a: Vec<f64> = source.iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = target.iter().map(|w| w.ln()).collect();
    let c = cost.data();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut violation = f64::INFINITY;
    let mut iterations = 0;
    let plan_entry = |f: &[f64], g: &[f64], i: usize, j: usize| {
        let e = (f[i] + g[j] - c[i * m + j]) / epsilon;
        if e.is_nan() { 0.0 } else { e.exp() }
    };
    while iterations < max_iters {
        iterations += 1;
        for i in 0..n {
            f[i] = if source[i] == 0.0 {
                f64::NEG_INFINITY
            } else {
                epsilon * (log_a[i] - log_sum_exp((0..m).map(|j| (g[j] - c[i * m + j]) / epsilon)))
            };
        }
        for j in 0..m {
            g[j] = if target[j] == 0.0 {
                f64::NEG_INFINITY
            } else {
                epsilon * (log_b[j] - log_sum_exp((0..n).map(|i| (f[i] - c[i * m + j]) / epsilon)))
            };
        }
        violation = (0..n)
            .map(|i| ((0..m).map(|j| plan_entry(&f, &g, i, j)).sum::<f64>() - source[i]).abs())
            .sum();
        if violation < tol {
            break;
        }
    }
    let pi: Vec<f64> = (0..n * m).map(|k| plan_entry(&f, &g, k / m, k % m)).collect();
    Ok(SinkhornResult {
        plan: TransportPlan::from_masses(n, m, pi, cost),
        iterations,
        marginal_violation: violation,
        converged: violation < tol,
    })
}
