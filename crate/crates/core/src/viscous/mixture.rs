use rayon::prelude::*;
use serde::Serialize;

use super::{s_epsilon_with, PosteriorMethod, PosteriorStats, ViscousOptions};
use crate::error::{Error, Result};
use crate::piece::{evaluate_piece, ConvexPiece};
use crate::signal::Signal;

/// Smoothed minimum `J(u) = -eps ln sum_i exp(-J_i(u) / eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePrior {
    pieces: Vec<ConvexPiece>,
    epsilon: f64,
}

impl MixturePrior {
    pub fn new(pieces: Vec<ConvexPiece>, epsilon: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::param("a mixture needs at least one piece"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::param(format!("epsilon must be > 0, got {epsilon}")));
        }
        Ok(MixturePrior { pieces, epsilon })
    }

    pub fn pieces(&self) -> &[ConvexPiece] {
        &self.pieces
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `J(u)`; `+inf` only when every piece is `+inf` at `u`.
    pub fn value(&self, u: &Signal) -> Result<f64> {
        let values = self
            .pieces
            .iter()
            .map(|p| evaluate_piece(p, u).map(|v| v.to_f64()))
            .collect::<Result<Vec<_>>>()?;
        Ok(soft_min(&values, self.epsilon).0)
    }
}

/// `-eps ln sum exp(-v_i / eps)` and the normalized weights, stabilized by
/// shifting with `min v`; the largest unnormalized weight is exactly 1.
pub(crate) fn soft_min(values: &[f64], eps: f64) -> (f64, Vec<f64>) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if lo == f64::INFINITY {
        return (f64::INFINITY, vec![0.0; values.len()]);
    }
    let raw: Vec<f64> = values.iter().map(|v| (-(v - lo) / eps).exp()).collect();
    let total: f64 = raw.iter().sum();
    (lo - eps * total.ln(), raw.into_iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureStats {
    pub stats: PosteriorStats,
    /// Posterior probability of each piece; sums to 1.
    pub weights: Vec<f64>,
    pub per_piece: Vec<PosteriorStats>,
}

pub fn mixture_s_epsilon(prior: &MixturePrior, x: &Signal, t: f64) -> Result<MixtureStats> {
    mixture_s_epsilon_with(prior, x, t, &ViscousOptions::default())
}

pub fn mixture_s_epsilon_with(
    prior: &MixturePrior,
    x: &Signal,
    t: f64,
    opts: &ViscousOptions,
) -> Result<MixtureStats> {
    let eps = prior.epsilon;
    let per_piece = prior
        .pieces
        .par_iter()
        .enumerate()
        .map(|(i, p)| s_epsilon_with(p, x, t, eps, opts).map_err(|e| e.in_piece(i)))
        .collect::<Result<Vec<_>>>()?;
    if per_piece.len() == 1 {
        return Ok(MixtureStats {
            stats: per_piece[0].clone(),
            weights: vec![1.0],
            per_piece,
        });
    }
    let values: Vec<f64> = per_piece.iter().map(|s| s.s_eps).collect();
    let (s_eps, weights) = soft_min(&values, eps);
    let n = x.len();
    let mut u_pm = vec![0.0; n];
    for (s, w) in per_piece.iter().zip(&weights) {
        for (acc, u) in u_pm.iter_mut().zip(s.u_pm.values()) {
            *acc += w * u;
        }
    }
    // Law of total variance over the piece index.
    let mmse: f64 = per_piece
        .iter()
        .zip(&weights)
        .map(|(s, w)| w * (s.mmse + crate::linalg::dist_sq(s.u_pm.values(), &u_pm)))
        .sum();
    let xv = x.values();
    let grad = xv.iter().zip(&u_pm).map(|(a, u)| (a - u) / t).collect();
    let laplacian = per_piece
        .iter()
        .all(|s| s.laplacian.is_some())
        .then(|| (n as f64 * t * eps - mmse) / (t * t * eps));
    Ok(MixtureStats {
        stats: PosteriorStats {
            s_eps,
            grad: x.like(grad),
            u_pm: x.like(u_pm),
            mmse,
            method: PosteriorMethod::LogsumexpCombination,
            laplacian,
        },
        weights,
        per_piece,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> Signal {
        Signal::from_vec(v.to_vec()).unwrap()
    }

    fn gmm(mus: &[f64], sigma: f64, eps: f64) -> MixturePrior {
        let pieces = mus
            .iter()
            .map(|&m| ConvexPiece::quadratic(line(&[m]), sigma).unwrap())
            .collect();
        MixturePrior::new(pieces, eps).unwrap()
    }

    #[test]
    fn symmetric_pair_mean_is_midpoint() {
        let s = mixture_s_epsilon(&gmm(&[0.0, 1.0], 1.0, 0.3), &line(&[0.5]), 1.0).unwrap();
        assert!((s.stats.u_pm[0] - 0.5).abs() < 1e-15);
        assert_eq!(s.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn single_piece_is_identity() {
        let prior = gmm(&[0.4], 0.8, 0.2);
        let x = line(&[1.5]);
        let a = mixture_s_epsilon(&prior, &x, 0.6).unwrap().stats;
        let b = super::super::s_epsilon(&prior.pieces()[0], &x, 0.6, 0.2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn soft_min_survives_tiny_epsilon() {
        let (v, w) = soft_min(&[1e4, 1e4 + 1.0], 1e-4);
        assert_eq!(v, 1e4);
        assert_eq!(w, vec![1.0, 0.0]);
    }

    #[test]
    fn sandwich_on_prior_value() {
        let prior = gmm(&[-1.0, 0.5, 2.0], 0.7, 0.4);
        for u in [-2.0, 0.0, 0.3, 1.7] {
            let j = prior.value(&line(&[u])).unwrap();
            let m = [-1.0f64, 0.5, 2.0]
                .iter()
                .map(|c| (u - c) * (u - c) / (2.0 * 0.49))
                .fold(f64::INFINITY, f64::min);
            assert!(j <= m + 1e-15 && m <= j + 0.4 * 3f64.ln() + 1e-15);
        }
    }

    #[test]
    fn laplacian_matches_closed_form_combination() {
        let prior = gmm(&[-0.5, 1.0], 0.9, 0.25);
        let (x, t) = (0.3, 0.7);
        let s = mixture_s_epsilon(&prior, &line(&[x]), t).unwrap();
        let h = 1e-4;
        let f = |y: f64| mixture_s_epsilon(&prior, &line(&[y]), t).unwrap().stats.s_eps;
        let fd = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        assert!((s.stats.laplacian.unwrap() - fd).abs() < 1e-5);
    }
}
