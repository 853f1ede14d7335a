//! Viscous Hamilton-Jacobi solutions through the Cole-Hopf transform:
//!
//! `S_eps(x, t) = -eps ln( (2 pi t eps)^(-n/2) int exp(-(J(u) + ||x - u||^2 / (2t)) / eps) du )`
//!
//! with posterior mean `u_pm = x - t grad S_eps` and
//! `mmse = n t eps - t^2 eps Laplacian(S_eps)`.

mod limits;
mod mixture;
pub(crate) mod quadrature;

pub use limits::{epsilon_limit_check, LimitReport, LimitRow};
pub use mixture::{mixture_s_epsilon, mixture_s_epsilon_with, MixturePrior, MixtureStats};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GridGraph;
use crate::hj::lax_oleinik;
use crate::linalg::soft_threshold;
use crate::piece::{ConvexPiece, PieceKind};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosteriorMethod {
    ClosedForm,
    Quadrature,
    LogsumexpCombination,
}

/// Partition-function value with its posterior statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorStats {
    pub s_eps: f64,
    pub grad: Signal,
    pub u_pm: Signal,
    /// Posterior expected squared error about `u_pm`.
    pub mmse: f64,
    pub method: PosteriorMethod,
    /// `Laplacian(S_eps)` when available in closed form.
    pub laplacian: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViscousOptions {
    /// Relative error target of each quadrature moment.
    pub rel_tol: f64,
    pub max_segments: usize,
    /// Smallest `eps` accepted by quadrature paths.
    pub min_epsilon: f64,
    /// Force quadrature even where a closed form exists.
    pub force_quadrature: bool,
}

impl Default for ViscousOptions {
    fn default() -> Self {
        ViscousOptions {
            rel_tol: 1e-13,
            max_segments: 4000,
            min_epsilon: 1e-4,
            force_quadrature: false,
        }
    }
}

pub fn s_epsilon(piece: &ConvexPiece, x: &Signal, t: f64, eps: f64) -> Result<PosteriorStats> {
    s_epsilon_with(piece, x, t, eps, &ViscousOptions::default())
}

pub fn posterior_mean(piece: &ConvexPiece, x: &Signal, t: f64, eps: f64) -> Result<Signal> {
    s_epsilon(piece, x, t, eps).map(|s| s.u_pm)
}

pub fn mmse(piece: &ConvexPiece, x: &Signal, t: f64, eps: f64) -> Result<f64> {
    s_epsilon(piece, x, t, eps).map(|s| s.mmse)
}

fn check_inputs(t: f64, eps: f64) -> Result<()> {
    crate::params::check_time(t)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::param(format!("epsilon must be > 0, got {eps}")));
    }
    Ok(())
}

pub fn s_epsilon_with(
    piece: &ConvexPiece,
    x: &Signal,
    t: f64,
    eps: f64,
    opts: &ViscousOptions,
) -> Result<PosteriorStats> {
    check_inputs(t, eps)?;
    piece.check_dim(x)?;
    let n = x.len() as f64;
    match piece.kind() {
        PieceKind::Quadratic { center, scale } if !opts.force_quadrature => {
            Ok(gaussian(x, center, *scale, t, eps))
        }
        PieceKind::WeightedTv(tv) if !opts.force_quadrature && !has_active_edges(tv.active_graph()) => {
            Ok(PosteriorStats {
                s_eps: tv.offset(),
                grad: x.like(vec![0.0; x.len()]),
                u_pm: x.clone(),
                mmse: n * t * eps,
                method: PosteriorMethod::ClosedForm,
                laplacian: Some(0.0),
            })
        }
        PieceKind::DualTvBall { .. } => Err(Error::EmptyInterior),
        _ => {
            if eps < opts.min_epsilon {
                return Err(Error::param(format!(
                    "quadrature needs eps >= {}, got {eps}",
                    opts.min_epsilon
                )));
            }
            quadrature_stats(piece, x, t, eps, opts)
        }
    }
}

fn has_active_edges(g: &GridGraph) -> bool {
    g.edges().iter().any(|e| e.w > 0.0)
}

/// Closed form for `J(u) = ||u - mu||^2 / (2 sigma^2)`.
pub(crate) fn gaussian(x: &Signal, mu: &Signal, sigma: f64, t: f64, eps: f64) -> PosteriorStats {
    let n = x.len() as f64;
    let s2 = sigma * sigma;
    let d = s2 + t;
    let s_eps = 0.5 * n * eps * (d / s2).ln() + x.distance_sq(mu) / (2.0 * d);
    let xv = x.values();
    let grad = xv.iter().zip(mu.values()).map(|(a, m)| (a - m) / d).collect();
    let u_pm = xv
        .iter()
        .zip(mu.values())
        .map(|(a, m)| (s2 * a + t * m) / d)
        .collect();
    PosteriorStats {
        s_eps,
        grad: x.like(grad),
        u_pm: x.like(u_pm),
        mmse: n * eps * t * s2 / d,
        method: PosteriorMethod::ClosedForm,
        laplacian: Some(n / d),
    }
}

/// 1D factor of a separable posterior: `S`, mean and variance.
struct Factor {
    s: f64,
    mean: f64,
    variance: f64,
}

fn factor(
    j: impl Fn(f64) -> f64,
    x: f64,
    map: f64,
    kinks: &[f64],
    t: f64,
    eps: f64,
    opts: &ViscousOptions,
) -> Result<Factor> {
    let energy = |u: f64| j(u) + (x - u) * (x - u) / (2.0 * t);
    let m = quadrature::moments_1d(
        |u| energy(u) / eps,
        map,
        (t * eps).sqrt(),
        kinks,
        opts.rel_tol,
        opts.max_segments,
    )?;
    let log_norm = 0.5 * (2.0 * std::f64::consts::PI * t * eps).ln();
    Ok(Factor {
        s: -eps * (m.log_mass - log_norm),
        mean: m.mean,
        variance: m.variance,
    })
}

/// Quadrature over independent blocks: single coordinates for separable
/// pieces, and rotated pixel pairs for a pairwise term on one edge.
fn quadrature_stats(
    piece: &ConvexPiece,
    x: &Signal,
    t: f64,
    eps: f64,
    opts: &ViscousOptions,
) -> Result<PosteriorStats> {
    let xv = x.values();
    let n = xv.len();
    let mut u_pm = vec![0.0; n];
    let mut s_eps = 0.0;
    let mut mmse = 0.0;
    match piece.kind() {
        PieceKind::Quadratic { center, scale } => {
            let s2 = scale * scale;
            for k in 0..n {
                let mu = center[k];
                let map = (s2 * xv[k] + t * mu) / (s2 + t);
                let f = factor(|u| (u - mu) * (u - mu) / (2.0 * s2), xv[k], map, &[], t, eps, opts)?;
                s_eps += f.s;
                u_pm[k] = f.mean;
                mmse += f.variance;
            }
        }
        PieceKind::L1 { weight } => {
            for k in 0..n {
                let map = soft_threshold(xv[k], weight * t);
                let f = factor(|u: f64| weight * u.abs(), xv[k], map, &[0.0], t, eps, opts)?;
                s_eps += f.s;
                u_pm[k] = f.mean;
                mmse += f.variance;
            }
        }
        PieceKind::WeightedTv(tv) => {
            let graph = tv.active_graph();
            let labels = graph.components();
            let mut size = vec![0usize; n];
            labels.iter().for_each(|&c| size[c] += 1);
            if let Some(&big) = size.iter().find(|&&s| s > 2) {
                return Err(Error::UnsupportedDimension(big));
            }
            let mut paired = vec![false; n];
            let map = lax_oleinik(piece, x, t)?.minimizer;
            s_eps += tv.offset();
            for e in graph.edges() {
                // Rotate (u_i, u_j) to a = (u_i + u_j)/sqrt 2, b = (u_i - u_j)/sqrt 2;
                // only b sees the pairwise term w g(sqrt 2 b).
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let (xa, xb) = (r * (xv[e.i] + xv[e.j]), r * (xv[e.i] - xv[e.j]));
                let mb = r * (map[e.i] - map[e.j]);
                let (w, base) = (e.w, tv.base());
                let f = factor(
                    |b| w * base.apply(std::f64::consts::SQRT_2 * b),
                    xb,
                    mb,
                    &[0.0],
                    t,
                    eps,
                    opts,
                )?;
                s_eps += f.s;
                u_pm[e.i] = r * (xa + f.mean);
                u_pm[e.j] = r * (xa - f.mean);
                mmse += t * eps + f.variance;
                paired[e.i] = true;
                paired[e.j] = true;
            }
            for k in (0..n).filter(|&k| !paired[k]) {
                u_pm[k] = xv[k];
                mmse += t * eps;
            }
        }
        PieceKind::DualTvBall { .. } => return Err(Error::EmptyInterior),
    }
    let grad = xv.iter().zip(&u_pm).map(|(a, u)| (a - u) / t).collect();
    Ok(PosteriorStats {
        s_eps,
        grad: x.like(grad),
        u_pm: x.like(u_pm),
        mmse,
        method: PosteriorMethod::Quadrature,
        laplacian: None,
    })
}

/// `Laplacian(S_eps)` by central second differences with step `h`.
pub fn laplacian_fd(piece: &ConvexPiece, x: &Signal, t: f64, eps: f64, h: f64) -> Result<f64> {
    let centre = s_epsilon(piece, x, t, eps)?.s_eps;
    let mut total = 0.0;
    for k in 0..x.len() {
        let mut v = x.values().to_vec();
        v[k] += h;
        let plus = s_epsilon(piece, &x.like(v.clone()), t, eps)?.s_eps;
        v[k] -= 2.0 * h;
        let minus = s_epsilon(piece, &x.like(v), t, eps)?.s_eps;
        total += (plus - 2.0 * centre + minus) / (h * h);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> Signal {
        Signal::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn unit_gaussian_values() {
        let p = ConvexPiece::quadratic(line(&[0.0]), 1.0).unwrap();
        let s = s_epsilon(&p, &line(&[0.0]), 1.0, 1.0).unwrap();
        assert!((s.s_eps - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(s.mmse, 0.5);
        let x = line(&[1.3]);
        let s = s_epsilon(&p, &x, 1.0, 0.2).unwrap();
        assert_eq!(s.u_pm, lax_oleinik(&p, &x, 1.0).unwrap().minimizer);
    }

    #[test]
    fn gaussian_quadrature_agrees_with_closed_form() {
        let p = ConvexPiece::quadratic(line(&[0.3, -0.5]), 0.7).unwrap();
        let x = line(&[1.1, 0.4]);
        let forced = ViscousOptions {
            force_quadrature: true,
            ..ViscousOptions::default()
        };
        for eps in [1.0, 0.1, 1e-3] {
            let a = s_epsilon(&p, &x, 0.8, eps).unwrap();
            let b = s_epsilon_with(&p, &x, 0.8, eps, &forced).unwrap();
            assert_eq!(b.method, PosteriorMethod::Quadrature);
            assert!((a.s_eps - b.s_eps).abs() < 1e-12);
            assert!(crate::linalg::max_abs_diff(a.u_pm.values(), b.u_pm.values()) < 1e-12);
            assert!((a.mmse - b.mmse).abs() < 1e-12 * a.mmse.max(1.0));
        }
    }

    #[test]
    fn quadrature_epsilon_floor() {
        let p = ConvexPiece::l1(1.0).unwrap();
        assert!(matches!(
            s_epsilon(&p, &line(&[0.5]), 1.0, 1e-5),
            Err(Error::InvalidParameter(_))
        ));
        // Closed forms accept tiny eps.
        let q = ConvexPiece::quadratic(line(&[0.0]), 1.0).unwrap();
        assert!(s_epsilon(&q, &line(&[0.5]), 1.0, 1e-9).is_ok());
    }

    #[test]
    fn dual_ball_has_empty_interior() {
        let p = ConvexPiece::dual_tv_ball(GridGraph::chain(2, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(s_epsilon(&p, &line(&[0.0, 0.0]), 1.0, 1.0), Err(Error::EmptyInterior));
    }

    #[test]
    fn long_chain_is_unsupported() {
        let p = ConvexPiece::tv(GridGraph::chain(3, 1.0).unwrap());
        assert_eq!(
            s_epsilon(&p, &line(&[0.0, 0.0, 1.0]), 1.0, 0.5),
            Err(Error::UnsupportedDimension(3))
        );
        // Truncating one edge leaves a pair and a singleton: supported.
        let q = ConvexPiece::weighted_tv(GridGraph::chain(3, 1.0).unwrap(), &[1], crate::piece::BaseTerm::Abs)
            .unwrap();
        let s = s_epsilon(&q, &line(&[0.0, 0.0, 1.0]), 1.0, 0.5).unwrap();
        assert!(s.s_eps > 1.0);
    }

    #[test]
    fn pair_with_zero_tv_weight_is_gaussian() {
        let g = GridGraph::chain(2, 0.0).unwrap();
        let p = ConvexPiece::tv(g);
        let x = line(&[0.2, 0.9]);
        let s = s_epsilon(&p, &x, 0.5, 0.3).unwrap();
        assert_eq!(s.u_pm, x);
        assert!((s.mmse - 2.0 * 0.5 * 0.3).abs() < 1e-15);
    }
}
