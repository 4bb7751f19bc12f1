//! Two-point restoration toy problem.
//!
//! A source `X ∈ ℝ^(m+1)` takes two values and is corrupted by a degradation
//! `N` with a single nonzero entry. The transport from `p_Y` back to `p_X`
//! recovers the true inverse under an ℓq ground cost (`0 ≤ q ≤ 1`) but not
//! under the squared ℓ2 cost when `a² > m b²` and `a^q < m b^q`.
//!
//! Taken literally, `x2 = [−a, −b, …, −b]` is inconsistent with the `y`
//! supports and pairwise costs the problem is built around; the default
//! [`Example1Variant::SignCorrected`] uses `x2 = [a, −b, …, −b]`. The
//! literal variant is kept for comparison.

use serde::{Deserialize, Serialize};

use super::measure::{CostMatrix, TransportPlan};
use super::simplex::solve_exact_weights;
use crate::cost::GroundCost;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example1Variant {
    /// `x2 = [a, −b, …, −b]`
    #[default]
    SignCorrected,
    /// `x2 = [−a, −b, …, −b]` taken literally
    Literal,
}

/// Which of the two separation conditions hold for a given `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example1Conditions {
    pub q: f64,
    /// `a² > m b²`: the ℓ2 transport prefers the wrong pairing.
    pub l2_prefers_small_spread: bool,
    /// `a^q < m b^q` (for `q = 0`: `1 < m`): the ℓq transport prefers the sparse residual.
    pub lq_prefers_sparse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Instance {
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub p1: f64,
    pub ptilde1: f64,
    pub variant: Example1Variant,
    /// Clean atoms `x1, x2`.
    pub x: [Vec<f64>; 2],
    /// Degradation atoms `n1, n2`.
    pub n: [Vec<f64>; 2],
    /// Degraded atoms in the order `x1+n1, x1+n2, x2+n1, x2+n2`.
    pub y: [Vec<f64>; 4],
    pub px: [f64; 2],
    pub pn: [f64; 2],
    /// `P(Y = y_k)`, the pushforward of `joint` (may contain zeros).
    pub py: [f64; 4],
    /// `joint[i][j] = P(X = x_i, N = n_j)`.
    pub joint: [[f64; 2]; 2],
    /// Condition checks for each requested `q`.
    pub conditions: Vec<Example1Conditions>,
}

pub fn build_example1(
    a: f64,
    b: f64,
    m: usize,
    p1: f64,
    ptilde1: f64,
    qs: &[f64],
    variant: Example1Variant,
) -> Result<Example1Instance> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(invalid("a/b", format!("must be positive, got a = {a}, b = {b}")));
    }
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    for (name, p) in [("p1", p1), ("ptilde1", ptilde1)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(name, format!("must be a probability, got {p}")));
        }
    }
    if let Some(&q) = qs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(invalid("q", format!("must lie in [0, 1], got {q}")));
    }
    let spread = |lead: f64, rest: f64| std::iter::once(lead).chain(std::iter::repeat_n(rest, m)).collect::<Vec<_>>();
    let x1 = spread(-a, b);
    let x2 = match variant {
        Example1Variant::SignCorrected => spread(a, -b),
        Example1Variant::Literal => spread(-a, -b),
    };
    let n1 = spread(-2.0 * a, 0.0);
    let n2 = spread(2.0 * a, 0.0);
    let add = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p + q).collect::<Vec<_>>();
    let y = [add(&x1, &n1), add(&x1, &n2), add(&x2, &n1), add(&x2, &n2)];
    let px = [p1, 1.0 - p1];
    let pn = [ptilde1, 1.0 - ptilde1];
    let joint = [[px[0] * pn[0], px[0] * pn[1]], [px[1] * pn[0], px[1] * pn[1]]];
    let py = [joint[0][0], joint[0][1], joint[1][0], joint[1][1]];
    let conditions = qs
        .iter()
        .map(|&q| Example1Conditions {
            q,
            l2_prefers_small_spread: a * a > m as f64 * b * b,
            lq_prefers_sparse: if q == 0.0 { 1.0 < m as f64 } else { a.powf(q) < m as f64 * b.powf(q) },
        })
        .collect();
    Ok(Example1Instance { a, b, m, p1, ptilde1, variant, x: [x1, x2], n: [n1, n2], y, px, pn, py, joint, conditions })
}

impl Example1Instance {
    /// Row `k` of a plan over this instance corresponds to `y[k]`; the
    /// clean-state/degradation pair behind it is `(k / 2, k % 2)`.
    pub fn cost_matrix(&self, ground: &GroundCost) -> Result<CostMatrix> {
        CostMatrix::between(&self.y, &self.x, ground)
    }

    /// Optimal transport plan from `p_Y` to `p_X`.
    pub fn solve(&self, ground: &GroundCost) -> Result<TransportPlan> {
        solve_exact_weights(&self.py, &self.px, &self.cost_matrix(ground)?)
    }

    /// The true inverse: `x_i + n_j ↦ x_i`.
    pub fn true_inverse(&self) -> [usize; 4] {
        [0, 0, 1, 1]
    }
}

/// `E‖f(Y) − X‖₂²` under the instance's true joint law, where `f` follows the
/// plan's conditional distribution from each `y` atom.
pub fn map_distortion(plan: &TransportPlan, instance: &Example1Instance) -> Result<f64> {
    if plan.rows != 4 || plan.cols != 2 {
        return Err(Error::ShapeMismatch { expected: "4x2 plan".into(), got: format!("{}x{}", plan.rows, plan.cols) });
    }
    let sq = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    let mut total = 0.0;
    for (k, row) in plan.rows_as_vecs().iter().enumerate() {
        let (i, j) = (k / 2, k % 2);
        let weight = instance.joint[i][j];
        if weight == 0.0 {
            continue;
        }
        let mass: f64 = row.iter().sum();
        if mass <= 0.0 {
            return Err(invalid("plan", format!("row y{} carries no mass but has probability {weight}", k + 1)));
        }
        let expected: f64 = row.iter().enumerate().map(|(c, p)| p / mass * sq(&instance.x[c], &instance.x[i])).sum();
        total += weight * expected;
    }
    Ok(total)
}
