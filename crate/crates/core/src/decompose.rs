//! Geometry / texture / noise decomposition
//! `x = (x - u_1 - u_2) + u_1 + u_2` with TV geometry, quadratic noise and a
//! texture prior that is the minimum of the dual-TV-ball indicator and the
//! l1 norm.
//!
//! Each convex subproblem eliminates `u_2` through the TV Moreau envelope
//! `E(y) = min_z TV(z) + ||y - z||^2 / (2 t_2)` and minimizes
//! `E(x - u_1) + g(u_1)` by monotone FISTA with step `t_2`, the inverse
//! Lipschitz constant of `grad E`.
//!
//! Every iterate also yields a dual point `p = u_2 / t_2 in K`, giving the
//! lower bound `<x, p> - g^*(p) - (t_2 / 2) ||p||^2` on the optimal value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GridGraph;
use crate::linalg::{dist_sq, dot, norm_sq, soft_threshold};
use crate::params::{check_time, TieTolerance};
use crate::prox::{tv, ProxOptions};
use crate::signal::{Shape, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeOptions {
    /// Relative objective change that counts as stalled.
    pub tolerance: f64,
    /// Consecutive stalled iterations required to stop.
    pub window: usize,
    pub max_iterations: usize,
    pub prox: ProxOptions,
    pub tie: TieTolerance,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            tolerance: 1e-8,
            window: 10,
            max_iterations: 50_000,
            prox: ProxOptions::default(),
            tie: TieTolerance::default(),
        }
    }
}

/// Minimizer of one subproblem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubproblemSolution {
    pub value: f64,
    /// Texture `u_1`.
    pub u1: Signal,
    /// Noise `u_2`.
    pub u2: Signal,
    /// Geometry `x - u_1 - u_2`.
    pub geometry: Signal,
    /// Dual lower bound on `value`.
    pub lower_bound: f64,
    pub iterations: usize,
    /// Last relative objective change.
    pub residual: f64,
    /// Accepted objective values never increased.
    pub monotone: bool,
    /// Total inner TV-solver iterations.
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    First,
    Second,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionResult {
    pub s1: f64,
    pub s2: f64,
    pub winner: Winner,
    pub geometry: Signal,
    pub texture: Signal,
    pub noise: Signal,
    pub first: SubproblemSolution,
    pub second: SubproblemSolution,
}

impl DecompositionResult {
    /// Components for display: geometry, `u_1 + 0.5`, `u_2 + 0.5`; images
    /// are clipped to `[0, 1]`, 1D signals are left unclipped.
    pub fn display_channels(&self) -> [Signal; 3] {
        let image = matches!(self.geometry.shape(), Shape::Grid { .. });
        let map = |s: &Signal, offset: f64| {
            s.like(
                s.values()
                    .iter()
                    .map(|v| {
                        let w = v + offset;
                        if image {
                            w.clamp(0.0, 1.0)
                        } else {
                            w
                        }
                    })
                    .collect(),
            )
        };
        [
            map(&self.geometry, 0.0),
            map(&self.texture, 0.5),
            map(&self.noise, 0.5),
        ]
    }
}

#[derive(Clone, Copy)]
enum Texture {
    DualBall { t1: f64 },
    L1,
}

/// `min TV(x - u_1 - u_2) + indicator_{t_1 K}(u_1) + ||u_2||^2 / (2 t_2)`.
pub fn solve_s1(x: &Signal, graph: &GridGraph, t1: f64, t2: f64) -> Result<SubproblemSolution> {
    solve_s1_with(x, graph, t1, t2, &DecomposeOptions::default())
}

pub fn solve_s1_with(
    x: &Signal,
    graph: &GridGraph,
    t1: f64,
    t2: f64,
    opts: &DecomposeOptions,
) -> Result<SubproblemSolution> {
    check_time(t1)?;
    solve(x, graph, Texture::DualBall { t1 }, t2, opts)
}

/// `min TV(x - u_1 - u_2) + ||u_1||_1 + ||u_2||^2 / (2 t_2)`.
pub fn solve_s2(x: &Signal, graph: &GridGraph, t2: f64) -> Result<SubproblemSolution> {
    solve_s2_with(x, graph, t2, &DecomposeOptions::default())
}

pub fn solve_s2_with(
    x: &Signal,
    graph: &GridGraph,
    t2: f64,
    opts: &DecomposeOptions,
) -> Result<SubproblemSolution> {
    solve(x, graph, Texture::L1, t2, opts)
}

/// Solves both subproblems concurrently and keeps the smaller value.
pub fn decompose(x: &Signal, graph: &GridGraph, t1: f64, t2: f64) -> Result<DecompositionResult> {
    decompose_with(x, graph, t1, t2, &DecomposeOptions::default())
}

pub fn decompose_with(
    x: &Signal,
    graph: &GridGraph,
    t1: f64,
    t2: f64,
    opts: &DecomposeOptions,
) -> Result<DecompositionResult> {
    let (first, second) = rayon::join(
        || solve_s1_with(x, graph, t1, t2, opts),
        || solve_s2_with(x, graph, t2, opts),
    );
    let (first, second) = (first?, second?);
    let winner = select_winner(first.value, second.value, opts.tie);
    let chosen = if winner == Winner::Second { &second } else { &first };
    Ok(DecompositionResult {
        s1: first.value,
        s2: second.value,
        winner,
        geometry: chosen.geometry.clone(),
        texture: chosen.u1.clone(),
        noise: chosen.u2.clone(),
        first,
        second,
    })
}

/// Winner rule: the strictly smaller value wins; tying values select both.
pub fn select_winner(s1: f64, s2: f64, tie: TieTolerance) -> Winner {
    let m = s1.min(s2);
    match (tie.ties(s1, m), tie.ties(s2, m)) {
        (true, true) => Winner::Both,
        (true, false) => Winner::First,
        _ => Winner::Second,
    }
}

/// TV proximal map with a persistent warm-start dual.
struct WarmTv<'a> {
    graph: &'a GridGraph,
    dual: Option<Vec<f64>>,
    iterations: usize,
}

impl<'a> WarmTv<'a> {
    fn new(graph: &'a GridGraph) -> Self {
        WarmTv {
            graph,
            dual: None,
            iterations: 0,
        }
    }

    fn solve(&mut self, y: &[f64], t: f64, opts: &ProxOptions) -> Result<tv::TvSolution> {
        let s = tv::solve(self.graph, y, t, self.dual.as_deref(), opts)?;
        self.iterations += s.iterations;
        self.dual = Some(s.dual.clone());
        Ok(s)
    }
}

/// Envelope value `E(x - u)` and the TV split of `x - u`.
struct Split {
    value: f64,
    geometry: Vec<f64>,
    /// `(x - u) - geometry = D^T q`, so `noise / t_2 in K`.
    noise: Vec<f64>,
}

fn split(xv: &[f64], u: &[f64], t2: f64, prox: &mut WarmTv, opts: &ProxOptions) -> Result<Split> {
    let y: Vec<f64> = xv.iter().zip(u).map(|(a, b)| a - b).collect();
    let s = prox.solve(&y, t2, opts)?;
    let noise = s.dual_image(prox.graph);
    let geometry = s.point;
    let value = prox.graph.total_variation(&geometry) + norm_sq(&noise) / (2.0 * t2);
    Ok(Split {
        value,
        geometry,
        noise,
    })
}

fn texture_cost(texture: Texture, u: &[f64]) -> f64 {
    match texture {
        Texture::DualBall { .. } => 0.0,
        Texture::L1 => u.iter().map(|v| v.abs()).sum(),
    }
}

fn lower_bound(texture: Texture, xv: &[f64], noise: &[f64], t2: f64, graph: &GridGraph) -> f64 {
    let mut p: Vec<f64> = noise.iter().map(|v| v / t2).collect();
    let conj = match texture {
        Texture::DualBall { t1 } => t1 * graph.total_variation(&p),
        Texture::L1 => {
            let peak = p.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            p.iter_mut().for_each(|v| *v /= peak);
            0.0
        }
    };
    dot(xv, &p) - conj - 0.5 * t2 * norm_sq(&p)
}

fn solve(
    x: &Signal,
    graph: &GridGraph,
    texture: Texture,
    t2: f64,
    opts: &DecomposeOptions,
) -> Result<SubproblemSolution> {
    check_time(t2)?;
    x.check_len(graph.node_count())?;
    let xv = x.values();
    let n = xv.len();
    let mut grad_prox = WarmTv::new(graph);
    let mut eval_prox = WarmTv::new(graph);
    let mut ball = WarmTv::new(graph);

    // Proximal step of g with step t_2 applied to x - geometry(w).
    let mut step = |geometry: &[f64]| -> Result<Vec<f64>> {
        let v: Vec<f64> = xv.iter().zip(geometry).map(|(a, b)| a - b).collect();
        Ok(match texture {
            Texture::DualBall { t1 } => {
                let s = ball.solve(&v, t1, &opts.prox)?;
                s.dual_image(graph)
            }
            Texture::L1 => v.iter().map(|&a| soft_threshold(a, t2)).collect(),
        })
    };

    let mut current = vec![0.0; n];
    let mut current_split = split(xv, &current, t2, &mut eval_prox, &opts.prox)?;
    let mut current_value = current_split.value + texture_cost(texture, &current);
    let mut previous = current.clone();
    let mut w = current.clone();
    let mut theta = 1.0f64;
    let mut stalled = 0;
    let mut monotone = true;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let at_w = split(xv, &w, t2, &mut grad_prox, &opts.prox)?;
        let z = step(&at_w.geometry)?;
        let z_split = split(xv, &z, t2, &mut eval_prox, &opts.prox)?;
        let z_value = z_split.value + texture_cost(texture, &z);

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let accepted = z_value <= current_value;
        std::mem::swap(&mut previous, &mut current);
        if accepted {
            current = z.clone();
            current_split = z_split;
        } else {
            current.copy_from_slice(&previous);
        }
        let new_value = if accepted { z_value } else { current_value };
        if new_value > current_value {
            monotone = false;
        }
        residual = (current_value - new_value).abs() / new_value.abs().max(1.0);
        current_value = new_value;

        if accepted {
            let a = theta / theta_next;
            let b = (theta - 1.0) / theta_next;
            for k in 0..n {
                w[k] = current[k] + a * (z[k] - current[k]) + b * (current[k] - previous[k]);
            }
            theta = theta_next;
        } else {
            // Rejected step: restart the momentum from the incumbent.
            w.copy_from_slice(&current);
            theta = 1.0;
        }

        stalled = if residual <= opts.tolerance { stalled + 1 } else { 0 };
        if stalled >= opts.window {
            break;
        }
    }
    if stalled < opts.window {
        return Err(Error::NonConvergence {
            solver: "decomposition",
            iterations,
            residual,
        });
    }

    let lower = lower_bound(texture, xv, &current_split.noise, t2, graph);
    let inner_iterations = grad_prox.iterations + eval_prox.iterations + ball.iterations;
    debug_assert!(dist_sq(
        xv,
        &current
            .iter()
            .zip(&current_split.noise)
            .zip(&current_split.geometry)
            .map(|((a, b), c)| a + b + c)
            .collect::<Vec<_>>()
    ) < 1e-18 * (1.0 + norm_sq(xv)));
    Ok(SubproblemSolution {
        value: current_value,
        u1: x.like(current),
        u2: x.like(current_split.noise),
        geometry: x.like(current_split.geometry),
        lower_bound: lower,
        iterations,
        residual,
        monotone,
        inner_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_is_pure_geometry() {
        let g = GridGraph::grid4(3, 3, 1.0).unwrap();
        let x = Signal::constant(0.4, Shape::Grid { rows: 3, cols: 3 }).unwrap();
        for s in [solve_s1(&x, &g, 0.05, 0.01).unwrap(), solve_s2(&x, &g, 0.01).unwrap()] {
            assert!(s.value.abs() < 1e-12);
            assert!(s.u1.values().iter().all(|v| v.abs() < 1e-12));
            assert!(s.u2.values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn zero_input() {
        let g = GridGraph::chain(4, 1.0).unwrap();
        let x = Signal::zeros(Shape::Line(4)).unwrap();
        let s = solve_s2(&x, &g, 0.01).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn winner_rule() {
        let tie = TieTolerance::default();
        assert_eq!(select_winner(1.0, 2.0, tie), Winner::First);
        assert_eq!(select_winner(2.0, 1.0, tie), Winner::Second);
        assert_eq!(select_winner(1.0, 1.0 + 1e-12, tie), Winner::Both);
    }

    #[test]
    fn components_sum_to_input() {
        let g = GridGraph::chain(4, 1.0).unwrap();
        let x = Signal::from_vec(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let r = decompose(&x, &g, 0.05, 0.01).unwrap();
        for k in 0..4 {
            let sum = r.geometry[k] + r.texture[k] + r.noise[k];
            assert!((sum - x[k]).abs() < 1e-14);
        }
        assert!(r.first.monotone && r.second.monotone);
        assert!(r.first.lower_bound <= r.s1 + 1e-9);
        assert!(r.s1 - r.first.lower_bound < 1e-6);
        assert!(r.s2 - r.second.lower_bound < 1e-6);
    }
}
