//! Single- and multi-time Lax-Oleinik evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GridGraph;
use crate::linalg::{dist_sq, soft_threshold};
use crate::params::{ExtReal, TimeParams};
use crate::piece::{evaluate_piece, BaseTerm, ConvexPiece, PieceKind};
use crate::prox::{self, tv, ProxOptions};
use crate::signal::Signal;

/// Value, minimizer and spatial gradient of a first-order HJ solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HJEvaluation {
    pub value: f64,
    /// Argument of the initial data at the optimum: the proximal point for a
    /// single time, `x - sum_j u_j` for several times.
    pub minimizer: Signal,
    /// Per-time minimizers `(u_1, ..., u_N)`; empty for a single time.
    pub components: Vec<Signal>,
    pub gradient: Signal,
    pub times: TimeParams,
    /// Set when some Hamiltonian is not strictly convex, so the returned
    /// minimizer is one limit point of a possibly larger set.
    pub possibly_non_unique: bool,
    pub iterations: usize,
    pub certificate: f64,
}

/// `S(x, t) = min_u J(u) + ||x - u||^2 / (2t)` with `grad S = (x - u) / t`.
pub fn lax_oleinik(piece: &ConvexPiece, x: &Signal, t: f64) -> Result<HJEvaluation> {
    lax_oleinik_with(piece, x, t, &ProxOptions::default())
}

pub fn lax_oleinik_with(
    piece: &ConvexPiece,
    x: &Signal,
    t: f64,
    opts: &ProxOptions,
) -> Result<HJEvaluation> {
    let r = prox::prox_with(piece, x, t, opts)?;
    let gradient = x.like(
        x.values()
            .iter()
            .zip(r.point.values())
            .map(|(a, u)| (a - u) / t)
            .collect(),
    );
    Ok(HJEvaluation {
        value: r.envelope,
        minimizer: r.point,
        components: Vec::new(),
        gradient,
        times: TimeParams::single(t)?,
        possibly_non_unique: false,
        iterations: r.iterations,
        certificate: r.certificate,
    })
}

/// Supported Hamiltonians, described through the term `t H^*(u / t)` they
/// contribute to the generalized Lax-Oleinik minimand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HamiltonianTerm {
    /// `H(p) = (scale / 2) ||p||^2`; term `||u||^2 / (2 scale t)`.
    Quadratic { scale: f64 },
    /// `H^* = ||.||_1`; term `||u||_1`.
    L1,
    /// `H^*` the indicator of the dual TV ball `K`; term the indicator of `t K`.
    DualTvBall { graph: GridGraph },
}

impl HamiltonianTerm {
    pub fn half_square() -> Self {
        HamiltonianTerm::Quadratic { scale: 1.0 }
    }

    /// `t H^*(u / t)`.
    pub fn term_value(&self, u: &Signal, t: f64) -> Result<ExtReal> {
        Ok(match self {
            HamiltonianTerm::Quadratic { scale } => {
                ExtReal::Finite(u.norm_sq() / (2.0 * scale * t))
            }
            HamiltonianTerm::L1 => ExtReal::Finite(u.values().iter().map(|v| v.abs()).sum()),
            HamiltonianTerm::DualTvBall { graph } => {
                u.check_len(graph.node_count())?;
                if prox::in_dual_ball(graph, t, u.values())? {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
        })
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            HamiltonianTerm::Quadratic { scale } if !(scale.is_finite() && *scale > 0.0) => Err(
                Error::param(format!("quadratic Hamiltonian scale must be > 0, got {scale}")),
            ),
            HamiltonianTerm::DualTvBall { graph } if graph.node_count() != n => {
                Err(Error::Dimension {
                    expected: n,
                    found: graph.node_count(),
                })
            }
            _ => Ok(()),
        }
    }
}

/// Stopping rule of the block-coordinate solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultiTimeOptions {
    /// Relative objective change between sweeps.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub prox: ProxOptions,
}

impl Default for MultiTimeOptions {
    fn default() -> Self {
        MultiTimeOptions {
            tolerance: 1e-10,
            max_sweeps: 10_000,
            prox: ProxOptions::default(),
        }
    }
}

/// `S(x, t_1..t_N) = min J(x - sum_j u_j) + sum_j t_j H_j^*(u_j / t_j)`.
///
/// Any number of quadratic terms plus at most one `L1` or `DualTvBall`
/// term. Quadratic terms merge into one with time `sum_j scale_j t_j`; the
/// remaining pair is solved by exact block-coordinate minimization.
pub fn multi_time_lax_oleinik(
    initial: &ConvexPiece,
    hamiltonians: &[HamiltonianTerm],
    x: &Signal,
    times: &TimeParams,
) -> Result<HJEvaluation> {
    multi_time_lax_oleinik_with(initial, hamiltonians, x, times, &MultiTimeOptions::default())
}

pub fn multi_time_lax_oleinik_with(
    initial: &ConvexPiece,
    hamiltonians: &[HamiltonianTerm],
    x: &Signal,
    times: &TimeParams,
    opts: &MultiTimeOptions,
) -> Result<HJEvaluation> {
    let t = times.times();
    if hamiltonians.len() != t.len() {
        return Err(Error::Dimension {
            expected: t.len(),
            found: hamiltonians.len(),
        });
    }
    initial.check_dim(x)?;
    for h in hamiltonians {
        h.validate(x.len())?;
    }
    let quad: Vec<(usize, f64)> = hamiltonians
        .iter()
        .enumerate()
        .filter_map(|(j, h)| match h {
            HamiltonianTerm::Quadratic { scale } => Some((j, scale * t[j])),
            _ => None,
        })
        .collect();
    let rest: Vec<usize> = (0..t.len()).filter(|j| !quad.iter().any(|q| q.0 == *j)).collect();
    if quad.is_empty() || rest.len() > 1 {
        return Err(Error::UnsupportedModel(format!(
            "{} quadratic and {} non-quadratic Hamiltonians; need at least one quadratic and at most one other",
            quad.len(),
            rest.len()
        )));
    }
    let tau: f64 = quad.iter().map(|q| q.1).sum();

    let (minimizer, residual_term, value, iterations, certificate) = match rest.first() {
        None => {
            let r = prox::prox_with(initial, x, tau, &opts.prox)?;
            let ur = x.like(vec![0.0; x.len()]);
            (r.point, ur, r.envelope, r.iterations, r.certificate)
        }
        Some(&j) => {
            let s = block_coordinate(initial, &hamiltonians[j], t[j], x, tau, opts)?;
            (s.v, s.ur, s.value, s.sweeps, s.change)
        }
    };

    // Quadratic share of the residual x - v - u_r, split in proportion to
    // scale_j t_j.
    let shared = crate::linalg::sub(&crate::linalg::sub(x.values(), minimizer.values()), residual_term.values());
    let gradient = x.like(shared.iter().map(|s| s / tau).collect());
    let components = (0..t.len())
        .map(|j| match quad.iter().find(|q| q.0 == j) {
            Some(&(_, ct)) => x.like(shared.iter().map(|s| s * ct / tau).collect()),
            None => residual_term.clone(),
        })
        .collect();
    Ok(HJEvaluation {
        value,
        minimizer,
        components,
        gradient,
        times: times.clone(),
        possibly_non_unique: !rest.is_empty(),
        iterations,
        certificate,
    })
}

struct BcdState {
    v: Signal,
    ur: Signal,
    value: f64,
    sweeps: usize,
    change: f64,
}

/// Proximal map of the initial data, warm-starting the TV dual when present.
struct InitialProx<'a> {
    piece: &'a ConvexPiece,
    dual: Option<Vec<f64>>,
}

impl InitialProx<'_> {
    fn apply(&mut self, y: &[f64], tau: f64, opts: &ProxOptions) -> Result<(Vec<f64>, usize)> {
        if let PieceKind::WeightedTv(tvp) = self.piece.kind() {
            if tvp.base() == BaseTerm::Abs {
                let s = tv::solve(tvp.active_graph(), y, tau, self.dual.as_deref(), opts)?;
                self.dual = Some(s.dual);
                return Ok((s.point, s.iterations));
            }
        }
        let sig = Signal::from_vec(y.to_vec())?;
        let r = prox::prox_with(self.piece, &sig, tau, opts)?;
        Ok((r.point.into_values(), r.iterations))
    }
}

fn block_coordinate(
    initial: &ConvexPiece,
    term: &HamiltonianTerm,
    t_r: f64,
    x: &Signal,
    tau: f64,
    opts: &MultiTimeOptions,
) -> Result<BcdState> {
    let xv = x.values();
    let n = xv.len();
    let mut jprox = InitialProx {
        piece: initial,
        dual: None,
    };
    let mut ball_dual: Option<Vec<f64>> = None;
    let mut ur = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut prev = f64::INFINITY;
    let mut change = f64::INFINITY;

    for sweep in 1..=opts.max_sweeps {
        let y = crate::linalg::sub(xv, &ur);
        v = jprox.apply(&y, tau, &opts.prox)?.0;
        let w = crate::linalg::sub(xv, &v);
        ur = match term {
            HamiltonianTerm::L1 => w.iter().map(|&a| soft_threshold(a, tau)).collect(),
            HamiltonianTerm::DualTvBall { graph } => {
                let s = tv::solve(graph, &w, t_r, ball_dual.as_deref(), &opts.prox)?;
                let p = s.dual_image(graph);
                ball_dual = Some(s.dual);
                p
            }
            HamiltonianTerm::Quadratic { .. } => unreachable!("quadratic terms are merged"),
        };
        let jv = evaluate_piece(initial, &x.like(v.clone()))?.to_f64();
        let rv = match term {
            HamiltonianTerm::L1 => ur.iter().map(|a| a.abs()).sum(),
            _ => 0.0,
        };
        let value = jv + rv + dist_sq(&w, &ur) / (2.0 * tau);
        change = (prev - value).abs() / value.abs().max(1.0);
        prev = value;
        if change <= opts.tolerance {
            return Ok(BcdState {
                v: x.like(v),
                ur: x.like(ur),
                value,
                sweeps: sweep,
                change,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "multi-time block-coordinate",
        iterations: opts.max_sweeps,
        residual: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> Signal {
        Signal::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn quadratic_closed_form() {
        let mu = line(&[0.5, -1.0]);
        let p = ConvexPiece::quadratic(mu.clone(), 0.8).unwrap();
        let x = line(&[2.0, 1.0]);
        let e = lax_oleinik(&p, &x, 1.3).unwrap();
        let expect = x.distance_sq(&mu) / (2.0 * (0.64 + 1.3));
        assert!((e.value - expect).abs() < 1e-14);
        for k in 0..2 {
            assert!((e.minimizer[k] - (x[k] - 1.3 * e.gradient[k])).abs() < 1e-14);
        }
    }

    #[test]
    fn tv_chain_example() {
        let p = ConvexPiece::tv(GridGraph::chain(2, 1.0).unwrap());
        let e = lax_oleinik(&p, &line(&[0.0, 3.0]), 0.5).unwrap();
        assert!((e.value - 2.5).abs() < 1e-9);
        assert!((e.minimizer[0] - 0.5).abs() < 1e-9 && (e.minimizer[1] - 2.5).abs() < 1e-9);
    }

    #[test]
    fn all_quadratic_two_times() {
        let p = ConvexPiece::quadratic(line(&[0.0]), 1.0).unwrap();
        let h = [HamiltonianTerm::half_square(), HamiltonianTerm::half_square()];
        let times = TimeParams::new(vec![1.0, 1.0], 0.0).unwrap();
        let e = multi_time_lax_oleinik(&p, &h, &line(&[1.0]), &times).unwrap();
        assert!((e.value - 1.0 / 6.0).abs() < 1e-15);
        for u in &e.components {
            assert!((u[0] - 1.0 / 3.0).abs() < 1e-15);
        }
        // u_j = t_j grad H_j(grad S)
        assert!((e.components[0][0] - e.gradient[0]).abs() < 1e-15);
        assert!(!e.possibly_non_unique);
    }

    #[test]
    fn single_time_reduction() {
        let p = ConvexPiece::tv(GridGraph::chain(3, 0.7).unwrap());
        let x = line(&[0.2, 1.5, -0.4]);
        let single = lax_oleinik(&p, &x, 0.6).unwrap();
        let times = TimeParams::new(vec![0.6], 0.0).unwrap();
        let multi = multi_time_lax_oleinik(&p, &[HamiltonianTerm::half_square()], &x, &times).unwrap();
        assert!((single.value - multi.value).abs() < 1e-10);
        for k in 0..3 {
            assert!((multi.components[0][k] - (x[k] - single.minimizer[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn unsupported_combinations() {
        let p = ConvexPiece::l1(1.0).unwrap();
        let x = line(&[1.0]);
        let times = TimeParams::new(vec![1.0, 1.0], 0.0).unwrap();
        let err = multi_time_lax_oleinik(&p, &[HamiltonianTerm::L1, HamiltonianTerm::L1], &x, &times);
        assert!(matches!(err, Err(Error::UnsupportedModel(_))));
        let one = TimeParams::single(1.0).unwrap();
        let err = multi_time_lax_oleinik(&p, &[HamiltonianTerm::L1], &x, &one);
        assert!(matches!(err, Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn l1_texture_split_scalar() {
        // J = |.|, terms |u_1| and u_2^2 / (2 t_2): for x = 3, t_2 = 0.5 the
        // optimum puts the quadratic share at the kink of both slopes:
        // u_2 = t_2 = 0.5 and the rest is split between J and u_1.
        let p = ConvexPiece::l1(1.0).unwrap();
        let h = [HamiltonianTerm::L1, HamiltonianTerm::half_square()];
        let times = TimeParams::new(vec![1.0, 0.5], 0.0).unwrap();
        let e = multi_time_lax_oleinik(&p, &h, &line(&[3.0]), &times).unwrap();
        assert!((e.value - 2.75).abs() < 1e-9, "{}", e.value);
        assert!((e.components[1][0] - 0.5).abs() < 1e-9);
        assert!(e.possibly_non_unique);
    }
}
