use serde::Serialize;

use super::mixture::{mixture_s_epsilon_with, MixturePrior};
use super::ViscousOptions;
use crate::error::{Error, Result};
use crate::minplus::minplus_solve;
use crate::piece::ConvexPiece;
use crate::signal::Signal;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub eps: f64,
    pub s_eps: f64,
    /// `|S_eps - S_0|`.
    pub s_gap: f64,
    /// `||u_pm - u_map||^2`.
    pub pm_gap_sq: f64,
    /// `n t eps`.
    pub bound: f64,
    /// `None` when the MAP estimate is not unique.
    pub bound_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub s0: f64,
    pub u_map: Signal,
    pub map_unique: bool,
    pub rows: Vec<LimitRow>,
}

impl LimitReport {
    /// False only if some checked row violates the bound.
    pub fn bound_holds(&self) -> bool {
        self.rows.iter().all(|r| r.bound_ok != Some(false))
    }
}

/// Compares the viscous solution for `-eps ln sum exp(-J_i / eps)` along a
/// strictly decreasing `eps_sequence` with the first-order min-plus solution.
pub fn epsilon_limit_check(
    pieces: &[ConvexPiece],
    x: &Signal,
    t: f64,
    eps_sequence: &[f64],
) -> Result<LimitReport> {
    if eps_sequence.is_empty() {
        return Err(Error::param("epsilon sequence is empty"));
    }
    if eps_sequence.iter().any(|e| !(e.is_finite() && *e > 0.0))
        || eps_sequence.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::param("epsilon sequence must be positive and strictly decreasing"));
    }
    let first_order = minplus_solve(pieces, x, t)?;
    let map_unique = first_order.minimizers.len() == 1;
    let u_map = first_order.minimizers[0].clone();
    let n = x.len() as f64;
    let rows = eps_sequence
        .iter()
        .map(|&eps| {
            let prior = MixturePrior::new(pieces.to_vec(), eps)?;
            let s = mixture_s_epsilon_with(&prior, x, t, &ViscousOptions::default())?.stats;
            let pm_gap_sq = s.u_pm.distance_sq(&u_map);
            let bound = n * t * eps;
            Ok(LimitRow {
                eps,
                s_eps: s.s_eps,
                s_gap: (s.s_eps - first_order.value).abs(),
                pm_gap_sq,
                bound,
                bound_ok: map_unique.then_some(pm_gap_sq <= bound),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitReport {
        s0: first_order.value,
        u_map,
        map_unique,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> Signal {
        Signal::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn single_gaussian_has_no_mean_gap() {
        let p = vec![ConvexPiece::quadratic(line(&[0.2]), 0.5).unwrap()];
        let r = epsilon_limit_check(&p, &line(&[1.0]), 1.0, &[1.0, 0.1, 0.01]).unwrap();
        assert!(r.map_unique);
        assert!(r.rows.iter().all(|row| row.pm_gap_sq < 1e-28));
        assert!(r.rows[2].s_gap < r.rows[0].s_gap);
    }

    #[test]
    fn asymmetric_pair_converges() {
        let p = vec![
            ConvexPiece::quadratic(line(&[-1.0]), 0.6).unwrap(),
            ConvexPiece::quadratic(line(&[1.5]), 1.0).unwrap(),
        ];
        let r = epsilon_limit_check(&p, &line(&[0.4]), 0.8, &[1.0, 0.1, 0.01, 1e-3]).unwrap();
        assert!(r.bound_holds());
        assert!(r.rows[3].s_gap < 0.05);
    }

    #[test]
    fn tie_skips_the_bound() {
        let p = vec![
            ConvexPiece::quadratic(line(&[0.0]), 1.0).unwrap(),
            ConvexPiece::quadratic(line(&[1.0]), 1.0).unwrap(),
        ];
        let r = epsilon_limit_check(&p, &line(&[0.5]), 1.0, &[0.5]).unwrap();
        assert!(!r.map_unique);
        assert_eq!(r.rows[0].bound_ok, None);
    }

    #[test]
    fn sequence_validation() {
        let p = vec![ConvexPiece::l1(1.0).unwrap()];
        for seq in [&[][..], &[0.1, 0.1], &[0.1, 0.2], &[0.1, -0.1]] {
            assert!(epsilon_limit_check(&p, &line(&[0.0]), 1.0, seq).is_err());
        }
    }
}
