//! Brute-force reference solvers. They share no code paths with the
//! production solvers beyond the graph type, and trade speed for
//! transparency; tests use them as ground truth.

use rayon::prelude::*;

use crate::graph::GridGraph;

/// Result of [`grid_minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Global minimum of `f` over the box `[lo, hi]` (dimension at most 4).
///
/// Every grid-local minimum of a lattice with spacing `coarse` seeds a
/// pattern search over all `3^n - 1` lattice directions; the step halves
/// whenever no direction improves, down to `fine`.
pub fn grid_minimize(
    f: impl Fn(&[f64]) -> f64 + Sync,
    lo: &[f64],
    hi: &[f64],
    coarse: f64,
    fine: f64,
) -> GridMinimum {
    let n = lo.len();
    assert!(n == hi.len() && (1..=4).contains(&n), "grid oracle supports 1 to 4 dimensions");
    assert!(coarse > 0.0 && fine > 0.0 && fine <= coarse);
    let counts: Vec<usize> = (0..n)
        .map(|k| ((hi[k] - lo[k]) / coarse).round().max(0.0) as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    let index_to_point = |mut idx: usize| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let c = idx % counts[k];
                idx /= counts[k];
                lo[k] + c as f64 * coarse
            })
            .collect()
    };
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| f(&index_to_point(i)))
        .collect();
    let dirs = directions(n);
    let strides: Vec<isize> = (0..n)
        .map(|k| counts[..k].iter().product::<usize>() as isize)
        .collect();
    let mut seeds: Vec<usize> = (0..total)
        .filter(|&i| {
            let mut rem = i;
            let coords: Vec<isize> = (0..n)
                .map(|k| {
                    let c = rem % counts[k];
                    rem /= counts[k];
                    c as isize
                })
                .collect();
            dirs.iter().all(|d| {
                let mut j = 0isize;
                for k in 0..n {
                    let c = coords[k] + d[k] as isize;
                    if c < 0 || c >= counts[k] as isize {
                        return true;
                    }
                    j += c * strides[k];
                }
                values[j as usize] >= values[i]
            })
        })
        .collect();
    seeds.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    seeds.truncate(32);
    seeds
        .into_par_iter()
        .map(|i| pattern_search(&f, index_to_point(i), values[i], &dirs, coarse, fine))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("grid has at least one node")
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    (0..3usize.pow(n as u32))
        .map(|mut c| {
            (0..n)
                .map(|_| {
                    let d = (c % 3) as f64 - 1.0;
                    c /= 3;
                    d
                })
                .collect::<Vec<f64>>()
        })
        .filter(|d| d.iter().any(|v| *v != 0.0))
        .collect()
}

fn pattern_search(
    f: &impl Fn(&[f64]) -> f64,
    mut point: Vec<f64>,
    mut value: f64,
    dirs: &[Vec<f64>],
    start: f64,
    fine: f64,
) -> GridMinimum {
    let mut h = start;
    let mut trial = point.clone();
    while h >= fine {
        let mut best: Option<(f64, usize)> = None;
        for (k, d) in dirs.iter().enumerate() {
            for (t, (p, dk)) in trial.iter_mut().zip(point.iter().zip(d)) {
                *t = p + h * dk;
            }
            let v = f(&trial);
            if v < value && best.is_none_or(|(b, _)| v < b) {
                best = Some((v, k));
            }
        }
        match best {
            Some((v, k)) => {
                for (p, dk) in point.iter_mut().zip(&dirs[k]) {
                    *p += h * dk;
                }
                value = v;
            }
            None => h *= 0.5,
        }
    }
    GridMinimum { point, value }
}

/// Posterior moments from [`posterior_simpson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorReference {
    /// `-eps ln( (2 pi t eps)^(-1/2) int exp(-(J(u) + (x - u)^2 / (2t)) / eps) du )`.
    pub s_eps: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Composite Simpson rule for the 1D posterior of `j` on `[lo, hi]`.
///
/// `kinks` split the interval so that each panel sees a smooth integrand;
/// every panel uses an even number of steps no longer than `step`.
pub fn posterior_simpson(
    j: impl Fn(f64) -> f64,
    x: f64,
    t: f64,
    eps: f64,
    (lo, hi): (f64, f64),
    kinks: &[f64],
    step: f64,
) -> PosteriorReference {
    let mut breaks = vec![lo];
    let mut inner: Vec<f64> = kinks.iter().copied().filter(|k| *k > lo && *k < hi).collect();
    inner.sort_by(f64::total_cmp);
    breaks.extend(inner);
    breaks.push(hi);
    // Nodes and Simpson weights, panel by panel.
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let steps = (((w[1] - w[0]) / step).ceil() as usize).max(1).next_multiple_of(2);
        let h = (w[1] - w[0]) / steps as f64;
        for k in 0..=steps {
            let c = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            nodes.push(w[0] + k as f64 * h);
            weights.push(c * h / 3.0);
        }
    }
    let energy: Vec<f64> = nodes
        .iter()
        .map(|&u| (j(u) + (x - u) * (x - u) / (2.0 * t)) / eps)
        .collect();
    let shift = energy.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for ((u, e), w) in nodes.iter().zip(&energy).zip(&weights) {
        let d = w * (shift - e).exp();
        m0 += d;
        m1 += d * u;
        m2 += d * u * u;
    }
    let mean = m1 / m0;
    let log_norm = 0.5 * (2.0 * std::f64::consts::PI * t * eps).ln();
    PosteriorReference {
        s_eps: eps * (shift - m0.ln() + log_norm),
        mean,
        variance: m2 / m0 - mean * mean,
    }
}

/// `prox_{t TV}(v)` by plain projected gradient on the dual (no
/// acceleration), returning `(prox, dual)`; `dual` warm-starts the next call.
///
/// The residual `v - prox` equals `D^T q` with `|q_e| <= t w_e`, so it lies in
/// the dual ball `t K` exactly.
pub fn chambolle_tv_prox(
    graph: &GridGraph,
    v: &[f64],
    t: f64,
    warm: Option<Vec<f64>>,
    tol: f64,
    max_iterations: usize,
) -> (Vec<f64>, Vec<f64>) {
    let edges = graph.edges();
    let mut q = warm.unwrap_or_else(|| vec![0.0; edges.len()]);
    let lip = graph.incidence_norm_sq_bound().max(1.0);
    let mut z = v.to_vec();
    for _ in 0..max_iterations {
        // z = v - D^T q
        z.copy_from_slice(v);
        for (e, qe) in edges.iter().zip(&q) {
            z[e.i] -= qe;
            z[e.j] += qe;
        }
        let mut change = 0.0f64;
        for (e, qe) in edges.iter().zip(q.iter_mut()) {
            let cap = t * e.w;
            let next = (*qe + (z[e.i] - z[e.j]) / lip).clamp(-cap, cap);
            change = change.max((next - *qe).abs());
            *qe = next;
        }
        if lip * change <= tol {
            break;
        }
    }
    z.copy_from_slice(v);
    for (e, qe) in edges.iter().zip(&q) {
        z[e.i] -= qe;
        z[e.j] += qe;
    }
    (z, q)
}

/// Texture prior of an alternating-minimization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TexturePrior {
    /// Indicator of `t_1 K`.
    DualBall { t1: f64 },
    /// `l1` norm.
    L1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingResult {
    /// Objective at the final iterate (an upper bound on the optimum).
    pub value: f64,
    /// Dual lower bound on the optimum.
    pub lower_bound: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub iterations: usize,
}

/// Exact block minimization of
/// `TV(z) + prior(u_1) + ||x - z - u_1||^2 / (2 t_2)`, alternating between
/// `z` and `u_1` until the objective stagnates.
pub fn alternating_decomposition(
    graph: &GridGraph,
    x: &[f64],
    prior: TexturePrior,
    t2: f64,
    max_iterations: usize,
) -> AlternatingResult {
    const INNER_TOL: f64 = 1e-11;
    const INNER_CAP: usize = 1_000_000;
    let n = x.len();
    let mut u1 = vec![0.0; n];
    let mut z_dual: Option<Vec<f64>> = None;
    let mut ball_dual: Option<Vec<f64>> = None;
    let mut y = vec![0.0; n];
    let mut previous = f64::INFINITY;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut z = vec![0.0; n];
    let mut value = f64::INFINITY;
    while iterations < max_iterations {
        iterations += 1;
        for k in 0..n {
            y[k] = x[k] - u1[k];
        }
        let (zn, q) = chambolle_tv_prox(graph, &y, t2, z_dual.take(), INNER_TOL, INNER_CAP);
        z = zn;
        z_dual = Some(q);
        for k in 0..n {
            y[k] = x[k] - z[k];
        }
        u1 = match prior {
            TexturePrior::DualBall { t1 } => {
                let (rest, q) = chambolle_tv_prox(graph, &y, t1, ball_dual.take(), INNER_TOL, INNER_CAP);
                ball_dual = Some(q);
                y.iter().zip(&rest).map(|(a, r)| a - r).collect()
            }
            TexturePrior::L1 => y
                .iter()
                .map(|&a| a.signum() * (a.abs() - t2).max(0.0))
                .collect(),
        };
        let prior_cost = match prior {
            TexturePrior::DualBall { .. } => 0.0,
            TexturePrior::L1 => u1.iter().map(|v| v.abs()).sum(),
        };
        let noise: f64 = (0..n).map(|k| (x[k] - z[k] - u1[k]).powi(2)).sum();
        value = graph.total_variation(&z) + prior_cost + noise / (2.0 * t2);
        if previous - value <= 1e-13 * value.abs().max(1.0) {
            stalled += 1;
            if stalled >= 50 {
                break;
            }
        } else {
            stalled = 0;
        }
        previous = value;
    }
    // p = (x - u_1 - z) / t_2 from the final z-step lies in K up to the
    // u_1 update; recompute it from a fresh prox so it is exactly feasible.
    let y: Vec<f64> = (0..n).map(|k| x[k] - u1[k]).collect();
    let (zf, _) = chambolle_tv_prox(graph, &y, t2, z_dual, INNER_TOL, INNER_CAP);
    let p: Vec<f64> = (0..n).map(|k| (y[k] - zf[k]) / t2).collect();
    let xp: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let lower_bound = match prior {
        TexturePrior::DualBall { t1 } => xp - t1 * graph.total_variation(&p) - 0.5 * t2 * pp,
        TexturePrior::L1 => {
            let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let p: Vec<f64> = p.iter().map(|v| v / scale).collect();
            let xp: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
            let pp: f64 = p.iter().map(|v| v * v).sum();
            // Scaling keeps p in K since K is balanced and convex.
            xp - 0.5 * t2 * pp
        }
    };
    let u2 = (0..n).map(|k| x[k] - z[k] - u1[k]).collect();
    AlternatingResult {
        value,
        lower_bound,
        u1,
        u2,
        iterations,
    }
}
