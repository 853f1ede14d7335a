//! Iterative weighted-TV proximal solver on an arbitrary graph.
//!
//! Solves the dual problem `min_q 0.5 ||x - D^T q||^2` over the box
//! `|q_e| <= t w_e` by accelerated projected gradient with adaptive restart.
//! The primal point is `u = x - D^T q`; `D^T q` itself lies in `t K` exactly
//! whenever `q` is box-feasible, which makes it the projection onto the dual
//! ball.

use crate::error::{Error, Result};
use crate::graph::GridGraph;

use super::ProxOptions;

#[derive(Debug, Clone)]
pub(crate) struct TvSolution {
    pub point: Vec<f64>,
    /// Box-feasible dual variable, one entry per edge.
    pub dual: Vec<f64>,
    pub iterations: usize,
    /// `L * ||q+ - y||_inf` at termination.
    pub residual: f64,
    /// `t TV(u) - <D u, q>`, nonnegative up to rounding.
    pub gap: f64,
}

impl TvSolution {
    /// `D^T q`, the projection of the input onto `t K`.
    pub fn dual_image(&self, graph: &GridGraph) -> Vec<f64> {
        let mut out = vec![0.0; graph.node_count()];
        graph.diff_adjoint_into(&self.dual, &mut out);
        out
    }
}

/// `argmin_u 0.5 ||x - u||^2 + t sum_e w_e |(D u)_e|`.
///
/// `warm` seeds the dual variable (clipped to the box); `None` starts at 0.
pub(crate) fn solve(
    graph: &GridGraph,
    x: &[f64],
    t: f64,
    warm: Option<&[f64]>,
    opts: &ProxOptions,
) -> Result<TvSolution> {
    let m = graph.edge_count();
    let edges = graph.edges();
    let bound: Vec<f64> = edges.iter().map(|e| t * e.w).collect();
    let lip = graph.incidence_norm_sq_bound();
    if m == 0 || lip == 0.0 {
        return Ok(TvSolution {
            point: x.to_vec(),
            dual: vec![0.0; m],
            iterations: 0,
            residual: 0.0,
            gap: 0.0,
        });
    }
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let target = opts.tolerance * scale;

    let mut q: Vec<f64> = match warm {
        Some(w) => w
            .iter()
            .zip(&bound)
            .map(|(v, b)| v.clamp(-b, *b))
            .collect(),
        None => vec![0.0; m],
    };
    let mut y = q.clone();
    let mut q_new = vec![0.0; m];
    let mut u = vec![0.0; x.len()];
    let mut theta = 1.0f64;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        graph.diff_adjoint_into(&y, &mut u);
        for (uk, xk) in u.iter_mut().zip(x) {
            *uk = xk - *uk;
        }
        residual = 0.0;
        for (k, e) in edges.iter().enumerate() {
            let step = (u[e.i] - u[e.j]) / lip;
            let v = (y[k] + step).clamp(-bound[k], bound[k]);
            residual = f64::max(residual, (v - y[k]).abs());
            q_new[k] = v;
        }
        residual *= lip;
        if residual <= target {
            std::mem::swap(&mut q, &mut q_new);
            break;
        }
        // Gradient-based restart: drop momentum once it opposes descent.
        let opposing: f64 = (0..m).map(|k| (y[k] - q_new[k]) * (q_new[k] - q[k])).sum();
        if opposing > 0.0 {
            theta = 1.0;
            y.copy_from_slice(&q_new);
        } else {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_next;
            for k in 0..m {
                y[k] = q_new[k] + beta * (q_new[k] - q[k]);
            }
            theta = theta_next;
        }
        std::mem::swap(&mut q, &mut q_new);
    }
    if residual > target {
        return Err(Error::NonConvergence {
            solver: "tv-prox",
            iterations,
            residual,
        });
    }

    graph.diff_adjoint_into(&q, &mut u);
    for (uk, xk) in u.iter_mut().zip(x) {
        *uk = xk - *uk;
    }
    let gap = edges
        .iter()
        .zip(&q)
        .map(|(e, qe)| {
            let d = u[e.i] - u[e.j];
            t * e.w * d.abs() - d * qe
        })
        .sum();
    Ok(TvSolution {
        point: u,
        dual: q,
        iterations,
        residual,
        gap,
    })
}
