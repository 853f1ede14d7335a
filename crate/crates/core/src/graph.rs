use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One weighted pairwise interaction `w * f(u_i - u_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Weighted interaction graph over `n` pixels. Edges are distinct unordered
/// pairs; the orientation `(i, j)` only fixes the sign of `(D u)_e = u_i - u_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl GridGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("graph needs at least one node"));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            if e.i >= n || e.j >= n {
                return Err(Error::param(format!(
                    "edge {k} ({}, {}) out of range for {n} nodes",
                    e.i, e.j
                )));
            }
            if e.i == e.j {
                return Err(Error::param(format!("edge {k} is a self-loop")));
            }
            if !(e.w.is_finite() && e.w >= 0.0) {
                return Err(Error::param(format!("edge {k} has invalid weight {}", e.w)));
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::param(format!(
                    "edge {k} duplicates the pair ({}, {})",
                    e.i, e.j
                )));
            }
        }
        Ok(GridGraph { n, edges })
    }

    /// Path graph `0 - 1 - ... - (n-1)` with per-link weights.
    pub fn chain_weighted(weights: &[f64]) -> Result<Self> {
        let edges = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| Edge { i: k, j: k + 1, w })
            .collect();
        GridGraph::new(weights.len() + 1, edges)
    }

    pub fn chain(n: usize, w: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("graph needs at least one node"));
        }
        GridGraph::chain_weighted(&vec![w; n - 1])
    }

    /// 4-neighbourhood grid on a row-major `rows x cols` image.
    pub fn grid4(rows: usize, cols: usize, w: f64) -> Result<Self> {
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let k = r * cols + c;
                if c + 1 < cols {
                    edges.push(Edge { i: k, j: k + 1, w });
                }
                if r + 1 < rows {
                    edges.push(Edge { i: k, j: k + cols, w });
                }
            }
        }
        GridGraph::new(rows * cols, edges)
    }

    /// Grid matching a signal layout: a chain for 1D signals.
    pub fn for_shape(shape: crate::Shape, w: f64) -> Result<Self> {
        match shape {
            crate::Shape::Line(n) => GridGraph::chain(n, w),
            crate::Shape::Grid { rows, cols } => GridGraph::grid4(rows, cols, w),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Subgraph keeping the edges for which `keep` is true.
    pub fn filter_edges(&self, keep: impl Fn(usize) -> bool) -> GridGraph {
        GridGraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .enumerate()
                .filter(|(k, _)| keep(*k))
                .map(|(_, e)| *e)
                .collect(),
        }
    }

    /// Link weights if the graph is the path `0 - 1 - ... - (n-1)` (edges in
    /// any order and orientation).
    pub fn chain_weights(&self) -> Option<Vec<f64>> {
        if self.edges.len() + 1 != self.n {
            return None;
        }
        let mut weights = vec![f64::NAN; self.edges.len()];
        for e in &self.edges {
            let (a, b) = (e.i.min(e.j), e.i.max(e.j));
            if b != a + 1 {
                return None;
            }
            weights[a] = e.w;
        }
        weights.iter().all(|w| !w.is_nan()).then_some(weights)
    }

    /// `(D u)_e = u_i - u_j`.
    pub fn diff_into(&self, u: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.edges) {
            *o = u[e.i] - u[e.j];
        }
    }

    /// Adjoint of [`GridGraph::diff_into`].
    pub fn diff_adjoint_into(&self, q: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (qe, e) in q.iter().zip(&self.edges) {
            out[e.i] += qe;
            out[e.j] -= qe;
        }
    }

    /// Weighted anisotropic total variation `sum w_e |u_i - u_j|`.
    pub fn total_variation(&self, u: &[f64]) -> f64 {
        self.edges.iter().map(|e| e.w * (u[e.i] - u[e.j]).abs()).sum()
    }

    /// Gershgorin bound on `||D||^2 = lambda_max(D^T D)`: twice the largest degree.
    pub fn incidence_norm_sq_bound(&self) -> f64 {
        let mut deg = vec![0usize; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        (2 * deg.into_iter().max().unwrap_or(0)) as f64
    }

    /// Connected-component label of every node (edges of any weight count).
    pub fn components(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut k: usize) -> usize {
            while p[k] != k {
                p[k] = p[p[k]];
                k = p[k];
            }
            k
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..self.n).map(|k| find(&mut parent, k)).collect()
    }
}
