use crate::error::{Error, Result};
use crate::graph::GridGraph;
use crate::linalg::dot;

/// `(I + 2 t L_w) u = x`: the optimality system of
/// `sum_e w_e (u_i - u_j)^2 + ||x - u||^2 / (2 t)`.
///
/// Jacobi-preconditioned conjugate gradient from `u = x`. Returns
/// `(u, iterations, ||residual||_inf)`.
pub(crate) fn solve_quadratic_tv(
    graph: &GridGraph,
    x: &[f64],
    t: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = x.len();
    let apply = |v: &[f64], out: &mut [f64]| {
        out.copy_from_slice(v);
        for e in graph.edges() {
            let f = 2.0 * t * e.w * (v[e.i] - v[e.j]);
            out[e.i] += f;
            out[e.j] -= f;
        }
    };
    let mut diag = vec![1.0; n];
    for e in graph.edges() {
        diag[e.i] += 2.0 * t * e.w;
        diag[e.j] += 2.0 * t * e.w;
    }
    let target = tolerance * x.iter().fold(1.0f64, |a, v| a.max(v.abs()));

    let mut u = x.to_vec();
    let mut au = vec![0.0; n];
    apply(&u, &mut au);
    let mut r: Vec<f64> = x.iter().zip(&au).map(|(a, b)| a - b).collect();
    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = inf_norm(&r);

    while residual > target {
        if iterations == max_iterations {
            return Err(Error::NonConvergence {
                solver: "quadratic-tv-cg",
                iterations,
                residual,
            });
        }
        iterations += 1;
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            u[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        residual = inf_norm(&r);
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Ok((u, iterations, residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pixel_closed_form() {
        // (1 + 2t) u0 - 2t u1 = x0, symmetric; with x = (0, 1), t = 0.5:
        // u = (1/3, 2/3).
        let g = GridGraph::chain(2, 1.0).unwrap();
        let (u, _, res) = solve_quadratic_tv(&g, &[0.0, 1.0], 0.5, 1e-14, 100).unwrap();
        assert!((u[0] - 1.0 / 3.0).abs() < 1e-13 && (u[1] - 2.0 / 3.0).abs() < 1e-13);
        assert!(res <= 1e-14);
    }
}
