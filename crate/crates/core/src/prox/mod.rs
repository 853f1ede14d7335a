//! Proximal operators and Moreau envelopes of every [`ConvexPiece`] kind.

mod cg;
mod taut;
pub(crate) mod tv;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GridGraph;
use crate::linalg::{dist_sq, soft_threshold};
use crate::params::check_time;
use crate::piece::{BaseTerm, ConvexPiece, PieceKind};
use crate::signal::Signal;

/// Stopping rule of the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxOptions {
    /// Fixed-point residual target, relative to `max(1, ||x||_inf)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ProxOptions {
    fn default() -> Self {
        ProxOptions {
            tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

/// Outcome of `argmin_u J(u) + ||x - u||^2 / (2t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxResult {
    pub point: Signal,
    /// `J(point) + ||x - point||^2 / (2t)`.
    pub envelope: f64,
    pub iterations: usize,
    /// Fixed-point residual of the iterative solver; 0 for closed forms.
    pub certificate: f64,
    /// Primal-dual gap of the TV solver; 0 for closed forms.
    pub duality_gap: f64,
}

impl ProxResult {
    fn closed(point: Signal, envelope: f64) -> Self {
        ProxResult {
            point,
            envelope,
            iterations: 0,
            certificate: 0.0,
            duality_gap: 0.0,
        }
    }
}

pub fn prox(piece: &ConvexPiece, x: &Signal, t: f64) -> Result<ProxResult> {
    prox_with(piece, x, t, &ProxOptions::default())
}

pub fn prox_with(piece: &ConvexPiece, x: &Signal, t: f64, opts: &ProxOptions) -> Result<ProxResult> {
    check_time(t)?;
    piece.check_dim(x)?;
    let xv = x.values();
    match piece.kind() {
        PieceKind::Quadratic { center, scale } => {
            let s2 = scale * scale;
            let point: Vec<f64> = xv
                .iter()
                .zip(center.values())
                .map(|(a, m)| (s2 * a + t * m) / (s2 + t))
                .collect();
            let envelope = x.distance_sq(center) / (2.0 * (s2 + t));
            Ok(ProxResult::closed(x.like(point), envelope))
        }
        PieceKind::L1 { weight } => {
            let point: Vec<f64> = xv.iter().map(|&a| soft_threshold(a, weight * t)).collect();
            let envelope = weight * point.iter().map(|a| a.abs()).sum::<f64>()
                + dist_sq(xv, &point) / (2.0 * t);
            Ok(ProxResult::closed(x.like(point), envelope))
        }
        PieceKind::WeightedTv(tv) => {
            let graph = tv.active_graph();
            let (point, iterations, certificate, duality_gap) = match tv.base() {
                BaseTerm::Abs => {
                    let s = tv::solve(graph, xv, t, None, opts)?;
                    (s.point, s.iterations, s.residual, s.gap)
                }
                BaseTerm::Square => {
                    let cg_tol = opts.tolerance * 1e-4;
                    let (u, it, res) =
                        cg::solve_quadratic_tv(graph, xv, t, cg_tol, opts.max_iterations)?;
                    (u, it, res, 0.0)
                }
            };
            let envelope = tv.value(&point) + dist_sq(xv, &point) / (2.0 * t);
            Ok(ProxResult {
                point: x.like(point),
                envelope,
                iterations,
                certificate,
                duality_gap,
            })
        }
        PieceKind::DualTvBall { graph, radius } => {
            let s = tv::solve(graph, xv, *radius, None, opts)?;
            let point = s.dual_image(graph);
            let envelope = dist_sq(xv, &point) / (2.0 * t);
            Ok(ProxResult {
                point: x.like(point),
                envelope,
                iterations: s.iterations,
                certificate: s.residual,
                duality_gap: s.gap,
            })
        }
    }
}

/// Envelope value and its gradient `(x - prox) / t`.
pub fn moreau_envelope(piece: &ConvexPiece, x: &Signal, t: f64) -> Result<(f64, Signal)> {
    let r = prox(piece, x, t)?;
    let grad = x
        .values()
        .iter()
        .zip(r.point.values())
        .map(|(a, p)| (a - p) / t)
        .collect();
    Ok((r.envelope, x.like(grad)))
}

/// Exact `argmin_u 0.5 ||x - u||^2 + t sum_k w_k |u_{k+1} - u_k|` on a chain.
pub fn tv_prox_1d_exact(x: &Signal, weights: &[f64], t: f64) -> Result<Signal> {
    check_time(t)?;
    if weights.len() + 1 != x.len() {
        return Err(Error::Dimension {
            expected: x.len().saturating_sub(1),
            found: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::param(format!("chain weight must be >= 0, got {w}")));
    }
    let lambda: Vec<f64> = weights.iter().map(|w| t * w).collect();
    Ok(x.like(taut::solve(x.values(), &lambda)))
}

/// [`tv_prox_1d_exact`] for a graph that must be the path `0 - 1 - ... - (n-1)`.
pub fn tv_prox_exact(graph: &GridGraph, x: &Signal, t: f64) -> Result<Signal> {
    x.check_len(graph.node_count())?;
    let weights = graph.chain_weights().ok_or_else(|| {
        Error::UnsupportedTopology(format!(
            "exact TV prox needs a chain; got {} nodes and {} edges",
            graph.node_count(),
            graph.edge_count()
        ))
    })?;
    tv_prox_1d_exact(x, &weights, t)
}

/// Euclidean projection onto `radius * K`, computed as `D^T q` from the TV
/// dual, which equals `v - prox_{radius TV}(v)`.
pub fn project_dual_ball(graph: &GridGraph, radius: f64, v: &Signal) -> Result<Signal> {
    v.check_len(graph.node_count())?;
    check_time(radius)?;
    let s = tv::solve(graph, v.values(), radius, None, &ProxOptions::default())?;
    Ok(v.like(s.dual_image(graph)))
}

const MEMBERSHIP_SLACK: f64 = 1e-6;
const MEMBERSHIP_TAU: f64 = 1e3;

/// `p in radius * K` up to a relative slack of `1e-6`.
///
/// Chains use the exact characterisation through prefix sums. Other graphs
/// use `prox_{tau TV}(tau p') = 0` for `p' = p / (radius (1 + slack))`,
/// `tau = 1e3`.
pub(crate) fn in_dual_ball(graph: &GridGraph, radius: f64, p: &[f64]) -> Result<bool> {
    let scale = p.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if let Some(w) = graph.chain_weights() {
        let mut q = 0.0;
        for (k, pk) in p.iter().enumerate() {
            q += pk;
            let cap = if k < w.len() {
                radius * w[k] * (1.0 + MEMBERSHIP_SLACK)
            } else {
                0.0
            };
            if q.abs() > cap + 1e-12 * scale {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    let shrink = radius * (1.0 + MEMBERSHIP_SLACK);
    let y: Vec<f64> = p.iter().map(|v| MEMBERSHIP_TAU * v / shrink).collect();
    let opts = ProxOptions {
        tolerance: 1e-10,
        ..ProxOptions::default()
    };
    let s = tv::solve(graph, &y, MEMBERSHIP_TAU, None, &opts)?;
    let residual = s.point.iter().fold(0.0f64, |a, v| a.max(v.abs())) / MEMBERSHIP_TAU;
    Ok(residual <= MEMBERSHIP_SLACK * p.iter().fold(1.0f64, |a, v| a.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn line(v: &[f64]) -> Signal {
        Signal::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn quadratic_prox_and_envelope() {
        let p = ConvexPiece::quadratic(line(&[0.0]), 1.0).unwrap();
        assert_eq!(prox(&p, &line(&[0.5]), 1.0).unwrap().point.values(), &[0.25]);
        let (v, g) = moreau_envelope(&p, &line(&[1.0]), 1.0).unwrap();
        assert_eq!((v, g.values()[0]), (0.25, 0.5));
        // Fixed point at the centre.
        let c = line(&[0.3, -0.7]);
        let p = ConvexPiece::quadratic(c.clone(), 2.0).unwrap();
        assert!(max_abs_diff(prox(&p, &c, 0.9).unwrap().point.values(), c.values()) < 1e-15);
    }

    #[test]
    fn l1_soft_threshold() {
        let p = ConvexPiece::l1(1.0).unwrap();
        assert_eq!(prox(&p, &line(&[2.0]), 0.5).unwrap().point.values(), &[1.5]);
        // Tie at |x| = lambda t maps to zero.
        assert_eq!(prox(&p, &line(&[-0.5]), 0.5).unwrap().point.values(), &[0.0]);
    }

    #[test]
    fn tv_chain_examples() {
        let p = ConvexPiece::tv(GridGraph::chain(2, 1.0).unwrap());
        let r = prox(&p, &line(&[0.0, 1.0]), 0.2).unwrap();
        assert!((r.point[0] - 0.2).abs() < 1e-9 && (r.point[1] - 0.8).abs() < 1e-9);
        assert!(r.certificate <= 1e-8);
        let (v, g) = moreau_envelope(&p, &line(&[0.7, 0.7]), 3.0).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.values().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn exact_1d_examples() {
        let x = line(&[0.0, 1.0]);
        let u = tv_prox_1d_exact(&x, &[1.0], 0.2).unwrap();
        assert!((u[0] - 0.2).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        let u = tv_prox_1d_exact(&x, &[1.0], 0.6).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
        let c = line(&[0.4; 5]);
        assert!(max_abs_diff(tv_prox_1d_exact(&c, &[1.0; 4], 0.3).unwrap().values(), c.values()) < 1e-15);
    }

    #[test]
    fn exact_rejects_non_chain() {
        let g = GridGraph::grid4(2, 2, 1.0).unwrap();
        let x = Signal::image(vec![0.0; 4], 2, 2).unwrap();
        assert!(matches!(
            tv_prox_exact(&g, &x, 1.0),
            Err(Error::UnsupportedTopology(_))
        ));
    }

    #[test]
    fn nonpositive_time_rejected() {
        let p = ConvexPiece::l1(1.0).unwrap();
        assert!(matches!(prox(&p, &line(&[1.0]), 0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn square_base_matches_linear_system() {
        let g = GridGraph::chain(2, 1.0).unwrap();
        let p = ConvexPiece::weighted_tv(g, &[], BaseTerm::Square).unwrap();
        let r = prox(&p, &line(&[0.0, 1.0]), 0.5).unwrap();
        assert!((r.point[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dual_ball_membership_matches_chain_rule_on_grids() {
        let g = GridGraph::grid4(2, 2, 1.0).unwrap();
        // D^T q with |q| <= 1 is inside; scaled up by 3 it is outside.
        let q = [0.5, -1.0, 0.25, 0.75];
        let mut p = vec![0.0; 4];
        g.diff_adjoint_into(&q, &mut p);
        assert!(in_dual_ball(&g, 1.0, &p).unwrap());
        let far: Vec<f64> = p.iter().map(|v| 3.0 * v).collect();
        assert!(!in_dual_ball(&g, 1.0, &far).unwrap());
        // Nonzero mean is never inside.
        assert!(!in_dual_ball(&g, 1.0, &[0.1, 0.0, 0.0, 0.0]).unwrap());
    }
}
