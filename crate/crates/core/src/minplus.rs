//! Min-plus combination of per-piece Hamilton-Jacobi solutions for initial
//! data `J = min_i J_i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GridGraph;
use crate::hj::{lax_oleinik_with, multi_time_lax_oleinik_with, HJEvaluation, HamiltonianTerm, MultiTimeOptions};
use crate::linalg::max_abs_diff;
use crate::params::{TieTolerance, TimeParams};
use crate::piece::{mask_edges, BaseTerm, ConvexPiece};
use crate::prox::ProxOptions;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinPlusOptions {
    pub tie: TieTolerance,
    /// Largest `|E|` accepted by the subset enumeration.
    pub enumeration_cap: usize,
    pub prox: ProxOptions,
    pub multi_time: MultiTimeOptions,
}

impl Default for MinPlusOptions {
    fn default() -> Self {
        MinPlusOptions {
            tie: TieTolerance::default(),
            enumeration_cap: 20,
            prox: ProxOptions::default(),
            multi_time: MultiTimeOptions::default(),
        }
    }
}

/// `S = min_i S_i` with its index set and minimizer set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinPlusSolution {
    pub value: f64,
    /// Indices whose `S_i` ties with the minimum, increasing.
    pub active_set: Vec<usize>,
    /// Distinct minimizers of the active pieces, in active-set order.
    pub minimizers: Vec<Signal>,
    pub per_piece: Vec<HJEvaluation>,
}

impl MinPlusSolution {
    fn assemble(per_piece: Vec<HJEvaluation>, tie: TieTolerance) -> Self {
        let values: Vec<f64> = per_piece.iter().map(|e| e.value).collect();
        let active_set = tie.argmin_set(&values);
        let value = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut minimizers: Vec<Signal> = Vec::new();
        for &i in &active_set {
            let u = &per_piece[i].minimizer;
            if !minimizers.iter().any(|m| max_abs_diff(m.values(), u.values()) <= 1e-12) {
                minimizers.push(u.clone());
            }
        }
        MinPlusSolution {
            value,
            active_set,
            minimizers,
            per_piece,
        }
    }

    /// Per-time minimizer tuples of the active pieces (multi-time problems).
    pub fn minimizer_tuples(&self) -> impl Iterator<Item = &[Signal]> {
        self.active_set
            .iter()
            .map(move |&i| self.per_piece[i].components.as_slice())
    }
}

pub fn minplus_solve(pieces: &[ConvexPiece], x: &Signal, t: f64) -> Result<MinPlusSolution> {
    minplus_solve_with(pieces, x, t, &MinPlusOptions::default())
}

pub fn minplus_solve_with(
    pieces: &[ConvexPiece],
    x: &Signal,
    t: f64,
    opts: &MinPlusOptions,
) -> Result<MinPlusSolution> {
    if pieces.is_empty() {
        return Err(Error::param("at least one piece is required"));
    }
    let per_piece = pieces
        .par_iter()
        .enumerate()
        .map(|(i, p)| lax_oleinik_with(p, x, t, &opts.prox).map_err(|e| e.in_piece(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MinPlusSolution::assemble(per_piece, opts.tie))
}

/// Min-plus solution for `sum_e w_e min(g(u_i - u_j), 1)` over all
/// `2^|E|` subsets `Omega`; piece `k` truncates the edges whose bit is set
/// in `k`.
pub fn truncated_tv_enumerate(
    graph: &GridGraph,
    base: BaseTerm,
    x: &Signal,
    t: f64,
) -> Result<MinPlusSolution> {
    truncated_tv_enumerate_with(graph, base, x, t, &MinPlusOptions::default())
}

pub fn truncated_tv_enumerate_with(
    graph: &GridGraph,
    base: BaseTerm,
    x: &Signal,
    t: f64,
    opts: &MinPlusOptions,
) -> Result<MinPlusSolution> {
    let m = graph.edge_count();
    if m > opts.enumeration_cap || m >= usize::BITS as usize {
        return Err(Error::EnumerationRefused {
            edges: m,
            cap: opts.enumeration_cap,
        });
    }
    x.check_len(graph.node_count())?;
    let per_piece = (0..1usize << m)
        .into_par_iter()
        .map(|mask| {
            let piece = ConvexPiece::weighted_tv(graph.clone(), &mask_edges(mask, m), base)?;
            lax_oleinik_with(&piece, x, t, &opts.prox).map_err(|e| e.in_piece(mask))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MinPlusSolution::assemble(per_piece, opts.tie))
}

pub fn minplus_multi_time(
    pieces: &[ConvexPiece],
    hamiltonians: &[HamiltonianTerm],
    x: &Signal,
    times: &TimeParams,
) -> Result<MinPlusSolution> {
    minplus_multi_time_with(pieces, hamiltonians, x, times, &MinPlusOptions::default())
}

pub fn minplus_multi_time_with(
    pieces: &[ConvexPiece],
    hamiltonians: &[HamiltonianTerm],
    x: &Signal,
    times: &TimeParams,
    opts: &MinPlusOptions,
) -> Result<MinPlusSolution> {
    if pieces.is_empty() {
        return Err(Error::param("at least one piece is required"));
    }
    let per_piece = pieces
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            multi_time_lax_oleinik_with(p, hamiltonians, x, times, &opts.multi_time)
                .map_err(|e| e.in_piece(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MinPlusSolution::assemble(per_piece, opts.tie))
}
