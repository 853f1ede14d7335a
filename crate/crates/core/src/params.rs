use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extended real `R ∪ {+∞}` as returned by piece evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    /// `f64` view, mapping the sentinel to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.min(b)),
            (ExtReal::PosInf, o) | (o, ExtReal::PosInf) => o,
        }
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }
}

impl std::ops::Add<f64> for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::Finite(rhs)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

/// Equality semantics for argmin index sets: `a` ties with the minimum `m`
/// when `|a - m| <= max(rel * |m|, abs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TieTolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for TieTolerance {
    fn default() -> Self {
        TieTolerance {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

impl TieTolerance {
    pub fn ties(&self, value: f64, min: f64) -> bool {
        (value - min).abs() <= (self.rel * min.abs()).max(self.abs)
    }

    /// Indices of `values` tying with their minimum, in increasing order.
    pub fn argmin_set(&self, values: &[f64]) -> Vec<usize> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return Vec::new();
        }
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v.is_finite() && self.ties(v, min))
            .map(|(k, _)| k)
            .collect()
    }
}

/// Times `t` or `(t_1, ..., t_N)` and the viscosity `epsilon`
/// (zero selects the first-order regime).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeParams {
    times: Vec<f64>,
    epsilon: f64,
}

impl TimeParams {
    pub fn new(times: Vec<f64>, epsilon: f64) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::param("at least one time is required"));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::param(format!("times must be positive, got {t}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::param(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(TimeParams { times, epsilon })
    }

    pub fn single(t: f64) -> Result<Self> {
        TimeParams::new(vec![t], 0.0)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("time must be positive, got {t}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs() {
        assert_eq!(ExtReal::Finite(2.0) + ExtReal::PosInf, ExtReal::PosInf);
        assert_eq!(ExtReal::Finite(2.0) + 1.0, ExtReal::Finite(3.0));
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInf);
        assert_eq!(ExtReal::PosInf.min(ExtReal::Finite(4.0)), ExtReal::Finite(4.0));
    }

    #[test]
    fn tie_sets() {
        let tol = TieTolerance::default();
        assert_eq!(tol.argmin_set(&[0.125, 0.125, 0.2]), vec![0, 1]);
        assert_eq!(tol.argmin_set(&[1.0, 1.0 + 1e-10, 1.0 + 1e-8]), vec![0, 1]);
        assert_eq!(tol.argmin_set(&[0.0, 1e-13, 1e-11]), vec![0, 1]);
        assert!(tol.argmin_set(&[f64::INFINITY]).is_empty());
    }

    #[test]
    fn time_validation() {
        assert!(TimeParams::new(vec![], 0.0).is_err());
        assert!(TimeParams::new(vec![1.0, 0.0], 0.0).is_err());
        assert!(TimeParams::new(vec![1.0], -1.0).is_err());
        assert_eq!(TimeParams::single(0.5).unwrap().times(), &[0.5]);
    }
}
