//! Brute-force transport oracle: enumerates every spanning-tree basis of the
//! transportation polytope, solves for its basic solution, and keeps the
//! cheapest feasible one (ties broken by lexicographic plan order).

use std::cmp::Ordering;

use super::measure::{check_problem, CostMatrix, DiscreteMeasure, TransportPlan};
use crate::cost::GroundCost;
use crate::error::{Error, Result};

/// Largest `n_source + n_target` accepted by the oracle.
pub const ORACLE_MAX_ATOMS: usize = 10;

pub fn enumerate_oracle(source: &DiscreteMeasure, target: &DiscreteMeasure, ground: &GroundCost) -> Result<TransportPlan> {
    let cost = CostMatrix::between(source.atoms(), target.atoms(), ground)?;
    enumerate_oracle_weights(source.weights(), target.weights(), &cost)
}

pub fn enumerate_oracle_weights(source: &[f64], target: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    check_problem(source, target, cost)?;
    let (n, m) = (source.len(), target.len());
    if n + m > ORACLE_MAX_ATOMS {
        return Err(Error::TooLarge { n_source: n, n_target: m, limit: ORACLE_MAX_ATOMS });
    }
    let mut search = Search {
        n,
        m,
        source,
        target,
        cost,
        chosen: Vec::with_capacity(n + m - 1),
        best: None,
        cost_tol: 1e-12 * (1.0 + cost.max_abs()),
    };
    search.recurse(0, &mut UnionFind::new(n + m));
    let (_, pi) = search.best.expect("the transportation polytope always has a vertex");
    Ok(TransportPlan::from_masses(n, m, pi, cost))
}

struct Search<'a> {
    n: usize,
    m: usize,
    source: &'a [f64],
    target: &'a [f64],
    cost: &'a CostMatrix,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<f64>)>,
    cost_tol: f64,
}

impl Search<'_> {
    fn recurse(&mut self, next: usize, uf: &mut UnionFind) {
        let needed = self.n + self.m - 1;
        if self.chosen.len() == needed {
            self.evaluate();
            return;
        }
        let cells = self.n * self.m;
        if cells - next < needed - self.chosen.len() {
            return;
        }
        // include `next` when it keeps the edge set acyclic
        let (i, j) = (next / self.m, self.n + next % self.m);
        if uf.find(i) != uf.find(j) {
            let mut branch = uf.clone();
            branch.union(i, j);
            self.chosen.push(next);
            self.recurse(next + 1, &mut branch);
            self.chosen.pop();
        }
        self.recurse(next + 1, uf);
    }

    /// Basic solution on the current spanning tree by leaf elimination.
    fn evaluate(&mut self) {
        let (n, m) = (self.n, self.m);
        let mut residual: Vec<f64> = self.source.iter().chain(self.target).copied().collect();
        let mut degree = vec![0usize; n + m];
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n + m];
        for &cell in &self.chosen {
            let (i, j) = (cell / m, n + cell % m);
            degree[i] += 1;
            degree[j] += 1;
            incident[i].push(cell);
            incident[j].push(cell);
        }
        let mut done = vec![false; n * m];
        let mut pi = vec![0.0; n * m];
        let mut stack: Vec<usize> = (0..n + m).filter(|&v| degree[v] == 1).collect();
        while let Some(leaf) = stack.pop() {
            if degree[leaf] != 1 {
                continue;
            }
            let cell = *incident[leaf].iter().find(|&&c| !done[c]).expect("leaf has one live edge");
            let (i, j) = (cell / m, n + cell % m);
            let other = if leaf == i { j } else { i };
            let value = residual[leaf];
            if value < -1e-12 {
                return;
            }
            let value = value.max(0.0);
            pi[cell] = value;
            done[cell] = true;
            residual[leaf] = 0.0;
            residual[other] -= value;
            degree[leaf] = 0;
            degree[other] -= 1;
            if degree[other] == 1 {
                stack.push(other);
            }
        }
        let total: f64 = pi.iter().zip(self.cost.data()).map(|(p, c)| p * c).sum();
        let better = match &self.best {
            None => true,
            Some((best_cost, best_pi)) => {
                if total < best_cost - self.cost_tol {
                    true
                } else if total > best_cost + self.cost_tol {
                    false
                } else {
                    lex_cmp(&pi, best_pi) == Ordering::Less
                }
            }
        };
        if better {
            self.best = Some((total, pi));
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

#[derive(Clone)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(size: usize) -> Self {
        Self { parent: (0..size).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.parent[ra] = rb;
    }
}
