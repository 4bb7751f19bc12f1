use serde::{Deserialize, Serialize};

use crate::cost::GroundCost;
use crate::error::{invalid, Error, Result};

/// Tolerance on marginal constraints and on total-mass agreement.
pub const MASS_TOL: f64 = 1e-9;

/// A finitely supported probability measure on `ℝ^d`.
///
/// Zero-weight atoms are dropped and duplicate atoms merged (first occurrence
/// keeps its position) at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} weights", atoms.len()),
                got: format!("{} weights", weights.len()),
            });
        }
        let dim = atoms.first().map(Vec::len).ok_or_else(|| invalid("atoms", "measure has no atoms"))?;
        if atoms.iter().any(|a| a.len() != dim) {
            return Err(invalid("atoms", "atoms have inconsistent dimensions"));
        }
        if atoms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("atoms", "non-finite coordinate"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid("weights", format!("weights sum to {total}, not 1")));
        }
        let mut merged_atoms: Vec<Vec<f64>> = Vec::new();
        let mut merged_weights: Vec<f64> = Vec::new();
        for (atom, w) in atoms.into_iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            match merged_atoms.iter().position(|a| *a == atom) {
                Some(k) => merged_weights[k] += w,
                None => {
                    merged_atoms.push(atom);
                    merged_weights.push(w);
                }
            }
        }
        if merged_atoms.is_empty() {
            return Err(invalid("weights", "all weights are zero"));
        }
        let total: f64 = merged_weights.iter().sum();
        merged_weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { atoms: merged_atoms, weights: merged_weights })
    }

    /// Uniform weights over the given atoms.
    pub fn uniform(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }
}

/// Dense row-major `rows x cols` cost matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch { expected: format!("{rows}x{cols} costs"), got: format!("{} values", data.len()) });
        }
        if data.iter().any(|c| !c.is_finite()) {
            return Err(invalid("cost", "cost matrix has non-finite entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("cost", "ragged cost matrix"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Pairwise ground costs between source and target atoms.
    pub fn between(source: &[Vec<f64>], target: &[Vec<f64>], ground: &GroundCost) -> Result<Self> {
        ground.validate()?;
        if source.iter().chain(target).any(|a| a.len() != source[0].len()) {
            return Err(invalid("atoms", "source and target dimensions differ"));
        }
        let data = source.iter().flat_map(|s| target.iter().map(move |t| ground.eval(s, t))).collect();
        Self::new(source.len(), target.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// A coupling between a source measure (rows) and a target measure (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols` masses.
    pub pi: Vec<f64>,
    pub total_cost: f64,
}

impl TransportPlan {
    pub(crate) fn from_masses(rows: usize, cols: usize, pi: Vec<f64>, cost: &CostMatrix) -> Self {
        let total_cost = pi.iter().zip(cost.data()).map(|(p, c)| p * c).sum();
        Self { rows, cols, pi, total_cost }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pi[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.pi.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j)).sum()).collect()
    }

    /// Largest absolute deviation of either marginal from the given weights.
    pub fn marginal_error(&self, source: &[f64], target: &[f64]) -> f64 {
        let r = self.row_sums().iter().zip(source).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let c = self.col_sums().iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.max(c)
    }

    pub fn rows_as_vecs(&self) -> Vec<Vec<f64>> {
        self.pi.chunks_exact(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// The deterministic map induced by the plan, if every row with mass
    /// sends it to a single column. Rows without mass map to `None`.
    pub fn induced_map(&self) -> Option<Vec<Option<usize>>> {
        let tol = MASS_TOL;
        let mut map = Vec::with_capacity(self.rows);
        for row in self.pi.chunks_exact(self.cols) {
            let support: Vec<usize> = (0..self.cols).filter(|&j| row[j] > tol).collect();
            match support.as_slice() {
                [] => map.push(None),
                [j] => map.push(Some(*j)),
                _ => return None,
            }
        }
        Some(map)
    }
}

pub(crate) fn check_problem(source: &[f64], target: &[f64], cost: &CostMatrix) -> Result<()> {
    if cost.rows() != source.len() || cost.cols() != target.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{} costs", source.len(), target.len()),
            got: format!("{}x{}", cost.rows(), cost.cols()),
        });
    }
    if source.iter().chain(target).any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("weights", "weights must be finite and nonnegative"));
    }
    let (source_mass, target_mass): (f64, f64) = (source.iter().sum(), target.iter().sum());
    if (source_mass - target_mass).abs() > MASS_TOL {
        return Err(Error::Infeasible { source_mass, target_mass });
    }
    Ok(())
}
