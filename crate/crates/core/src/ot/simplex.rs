//! Transportation simplex (network simplex on the complete bipartite graph).
//!
//! Starts from the northwest-corner basis and pivots with Bland's rule: the
//! entering cell is the first row-major cell with negative reduced cost, the
//! leaving cell the lowest-index blocking cell. Once optimal, the plan is
//! canonicalized to the lexicographically smallest optimal vertex so that
//! degenerate problems have a single, reproducible answer.

use std::collections::VecDeque;

use super::measure::{check_problem, CostMatrix, DiscreteMeasure, TransportPlan};
use crate::cost::GroundCost;
use crate::error::{Error, Result};

/// Solves the Kantorovich problem between two measures under a ground cost.
/// Rows of the plan index `source` atoms, columns `target` atoms.
pub fn solve_exact(source: &DiscreteMeasure, target: &DiscreteMeasure, ground: &GroundCost) -> Result<TransportPlan> {
    let cost = CostMatrix::between(source.atoms(), target.atoms(), ground)?;
    solve_exact_weights(source.weights(), target.weights(), &cost)
}

/// Solves the transportation problem with explicit weights (zero entries
/// allowed) and cost matrix.
pub fn solve_exact_weights(source: &[f64], target: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    check_problem(source, target, cost)?;
    let mut basis = Basis::northwest(source, target, cost);
    basis.optimize()?;
    let pi = basis.lexicographic_vertex(source, target);
    Ok(TransportPlan::from_masses(cost.rows(), cost.cols(), pi, cost))
}

struct Basis<'a> {
    n: usize,
    m: usize,
    cost: &'a CostMatrix,
    flow: Vec<f64>,
    basic: Vec<bool>,
    cells: Vec<usize>,
    tol: f64,
}

impl<'a> Basis<'a> {
    fn northwest(source: &[f64], target: &[f64], cost: &'a CostMatrix) -> Self {
        let (n, m) = (source.len(), target.len());
        let mut basis = Basis {
            n,
            m,
            cost,
            flow: vec![0.0; n * m],
            basic: vec![false; n * m],
            cells: Vec::with_capacity(n + m - 1),
            tol: 1e-11 * (1.0 + cost.max_abs()),
        };
        let (mut ra, mut rb) = (source.to_vec(), target.to_vec());
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            let cell = i * m + j;
            basis.flow[cell] = x;
            basis.basic[cell] = true;
            basis.cells.push(cell);
            ra[i] -= x;
            rb[j] -= x;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if j == m - 1 || (i < n - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        basis
    }

    /// Adjacency over nodes `0..n` (rows) and `n..n+m` (columns); each entry
    /// is `(neighbour, cell)`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for &cell in &self.cells {
            let (i, j) = (cell / self.m, cell % self.m);
            adj[i].push((self.n + j, cell));
            adj[self.n + j].push((i, cell));
        }
        adj
    }

    fn duals(&self, adj: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let mut pot = vec![f64::NAN; self.n + self.m];
        let mut queue = VecDeque::from([0]);
        pot[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for &(next, cell) in &adj[node] {
                if pot[next].is_nan() {
                    pot[next] = self.cost.data()[cell] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(self.n);
        (pot, v)
    }

    fn reduced_costs(&self) -> Vec<f64> {
        let (u, v) = self.duals(&self.adjacency());
        (0..self.n * self.m).map(|cell| self.cost.data()[cell] - u[cell / self.m] - v[cell % self.m]).collect()
    }

    /// Tree path from column node `n + j` to row node `i`, as cells ordered
    /// from the row end.
    fn cycle_path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let start = self.n + j;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.n + self.m];
        let mut seen = vec![false; self.n + self.m];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &(next, cell) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = i;
        while let Some((prev, cell)) = parent[node] {
            path.push(cell);
            node = prev;
        }
        path
    }

    fn optimize(&mut self) -> Result<()> {
        let limit = 50 * (self.n * self.m + self.n + self.m) + 1000;
        for _ in 0..limit {
            let adj = self.adjacency();
            let (u, v) = self.duals(&adj);
            let entering = (0..self.n * self.m).find(|&cell| {
                !self.basic[cell] && self.cost.data()[cell] - u[cell / self.m] - v[cell % self.m] < -self.tol
            });
            let Some(entering) = entering else {
                return Ok(());
            };
            let path = self.cycle_path(&adj, entering / self.m, entering % self.m);
            // path[0], path[2], ... lose flow; path[1], path[3], ... gain it
            let theta = path.iter().step_by(2).map(|&c| self.flow[c]).fold(f64::INFINITY, f64::min);
            let leaving = path
                .iter()
                .step_by(2)
                .copied()
                .filter(|&c| self.flow[c] <= theta)
                .min()
                .expect("cycle has a blocking cell");
            for (k, &cell) in path.iter().enumerate() {
                if k % 2 == 0 {
                    self.flow[cell] = (self.flow[cell] - theta).max(0.0);
                } else {
                    self.flow[cell] += theta;
                }
            }
            self.flow[leaving] = 0.0;
            self.flow[entering] = theta;
            self.basic[leaving] = false;
            self.basic[entering] = true;
            let slot = self.cells.iter().position(|&c| c == leaving).expect("leaving cell is basic");
            self.cells[slot] = entering;
        }
        Err(Error::NotConverged { iterations: limit, violation: f64::NAN })
    }

    /// Lexicographically smallest plan (row-major order) among all plans
    /// supported on zero-reduced-cost cells, which is exactly the optimal face.
    fn lexicographic_vertex(&self, source: &[f64], target: &[f64]) -> Vec<f64> {
        let rc = self.reduced_costs();
        let allowed: Vec<usize> = (0..self.n * self.m).filter(|&c| self.basic[c] || rc[c] <= self.tol).collect();
        if allowed.len() == self.cells.len() {
            // no ties: the optimal plan is the unique basic solution
            return self.flow.clone();
        }
        let mut supply = source.to_vec();
        let mut demand = target.to_vec();
        let mut pi = vec![0.0; self.n * self.m];
        let scale = source.iter().sum::<f64>().max(1e-300);
        for (k, &cell) in allowed.iter().enumerate() {
            let (i, j) = (cell / self.m, cell % self.m);
            let remaining: f64 = supply.iter().sum();
            let others = &allowed[k + 1..];
            let routed = max_flow(&supply, &demand, others, self.m);
            let mut value = (remaining - routed).max(0.0).min(supply[i]).min(demand[j]);
            if value < 1e-14 * scale {
                value = 0.0;
            }
            pi[cell] = value;
            supply[i] -= value;
            demand[j] -= value;
        }
        pi
    }
}

/// Edmonds–Karp max flow from sources with `supply` to sinks with `demand`
/// over uncapacitated cells.
fn max_flow(supply: &[f64], demand: &[f64], cells: &[usize], m: usize) -> f64 {
    let n = supply.len();
    let (s, t) = (n + m, n + m + 1);
    let mut graph = FlowGraph::new(n + m + 2);
    for (i, &cap) in supply.iter().enumerate() {
        graph.add_edge(s, i, cap.max(0.0));
    }
    for (j, &cap) in demand.iter().enumerate() {
        graph.add_edge(n + j, t, cap.max(0.0));
    }
    for &cell in cells {
        graph.add_edge(cell / m, n + cell % m, f64::INFINITY);
    }
    let eps = 1e-15 * (1.0 + supply.iter().sum::<f64>());
    let mut total = 0.0;
    loop {
        let mut prev: Vec<Option<usize>> = vec![None; graph.adj.len()];
        let mut queue = VecDeque::from([s]);
        let mut reached = false;
        while let Some(node) = queue.pop_front() {
            for &e in &graph.adj[node] {
                let to = graph.to[e];
                if to != s && prev[to].is_none() && graph.cap[e] > eps {
                    prev[to] = Some(e);
                    if to == t {
                        reached = true;
                        break;
                    }
                    queue.push_back(to);
                }
            }
            if reached {
                break;
            }
        }
        if !reached {
            return total;
        }
        let mut bottleneck = f64::INFINITY;
        let mut node = t;
        while let Some(e) = prev[node] {
            bottleneck = bottleneck.min(graph.cap[e]);
            node = graph.to[e ^ 1];
        }
        let mut node = t;
        while let Some(e) = prev[node] {
            graph.cap[e] -= bottleneck;
            graph.cap[e ^ 1] += bottleneck;
            node = graph.to[e ^ 1];
        }
        total += bottleneck;
    }
}

struct FlowGraph {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        self.adj[from].push(self.to.len());
        self.to.push(to);
        self.cap.push(cap);
        self.adj[to].push(self.to.len());
        self.to.push(from);
        self.cap.push(0.0);
    }
}
