use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::GridGraph;
use crate::params::{ExtReal, TieTolerance};
use crate::signal::Signal;

/// Convex base term `g` applied to edge differences outside the truncated set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseTerm {
    /// `g(z) = |z|`
    Abs,
    /// `g(z) = z^2`
    Square,
}

impl BaseTerm {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            BaseTerm::Abs => z.abs(),
            BaseTerm::Square => z * z,
        }
    }

    /// Truncated pairwise cost `min(g(z), 1)`.
    pub fn truncated(self, z: f64) -> f64 {
        self.apply(z).min(1.0)
    }
}

/// Weighted pairwise term restricted to the edges outside `Omega`, plus the
/// constant `sum_{e in Omega} w_e`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedTv {
    graph: GridGraph,
    truncated: Vec<usize>,
    base: BaseTerm,
    #[serde(skip)]
    active: GridGraph,
    #[serde(skip)]
    offset: f64,
}

impl WeightedTv {
    pub fn graph(&self) -> &GridGraph {
        &self.graph
    }

    /// Sorted indices of the edges in `Omega`.
    pub fn truncated_edges(&self) -> &[usize] {
        &self.truncated
    }

    pub fn base(&self) -> BaseTerm {
        self.base
    }

    /// Edges carrying `w * g`, i.e. those outside `Omega`.
    pub fn active_graph(&self) -> &GridGraph {
        &self.active
    }

    /// `sum_{e in Omega} w_e`, also the infimum of the piece.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub(crate) fn value(&self, u: &[f64]) -> f64 {
        let varying: f64 = self
            .active
            .edges()
            .iter()
            .map(|e| e.w * self.base.apply(u[e.i] - u[e.j]))
            .sum();
        self.offset + varying
    }
}

/// Variant data of a [`ConvexPiece`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PieceKind {
    /// `||u - center||^2 / (2 scale^2)`
    Quadratic { center: Signal, scale: f64 },
    WeightedTv(WeightedTv),
    /// `weight * ||u||_1`
    L1 { weight: f64 },
    /// Indicator of `radius * K`, `K = { D^T q : |q_e| <= w_e }`, the polar
    /// set of the weighted TV.
    DualTvBall { graph: GridGraph, radius: f64 },
}

/// A closed proper convex function usable as Hamilton-Jacobi initial data.
///
/// Construction validates the parameters, so every value denotes a function
/// in `Gamma_0`. All kinds except [`PieceKind::DualTvBall`] are finite
/// everywhere; the dual ball lies in the zero-mean subspace of each graph
/// component and therefore has an empty interior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPiece(PieceKind);

impl ConvexPiece {
    pub fn quadratic(center: Signal, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param(format!("quadratic scale must be > 0, got {scale}")));
        }
        Ok(ConvexPiece(PieceKind::Quadratic { center, scale }))
    }

    pub fn weighted_tv(graph: GridGraph, truncated: &[usize], base: BaseTerm) -> Result<Self> {
        let mut omega = truncated.to_vec();
        omega.sort_unstable();
        omega.dedup();
        if let Some(&k) = omega.iter().find(|&&k| k >= graph.edge_count()) {
            return Err(Error::param(format!(
                "truncated edge {k} out of range for {} edges",
                graph.edge_count()
            )));
        }
        let mut in_omega = vec![false; graph.edge_count()];
        omega.iter().for_each(|&k| in_omega[k] = true);
        let offset = omega.iter().map(|&k| graph.edges()[k].w).sum();
        let active = graph.filter_edges(|k| !in_omega[k]);
        Ok(ConvexPiece(PieceKind::WeightedTv(WeightedTv {
            graph,
            truncated: omega,
            base,
            active,
            offset,
        })))
    }

    /// Untruncated anisotropic TV `sum w_e |u_i - u_j|`.
    pub fn tv(graph: GridGraph) -> Self {
        ConvexPiece::weighted_tv(graph, &[], BaseTerm::Abs).expect("empty truncation set is valid")
    }

    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::param(format!("l1 weight must be >= 0, got {weight}")));
        }
        Ok(ConvexPiece(PieceKind::L1 { weight }))
    }

    pub fn dual_tv_ball(graph: GridGraph, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::param(format!("dual ball radius must be > 0, got {radius}")));
        }
        Ok(ConvexPiece(PieceKind::DualTvBall { graph, radius }))
    }

    pub fn kind(&self) -> &PieceKind {
        &self.0
    }

    /// Required signal length, or `None` for dimension-free kinds.
    pub fn dim(&self) -> Option<usize> {
        match &self.0 {
            PieceKind::Quadratic { center, .. } => Some(center.len()),
            PieceKind::WeightedTv(tv) => Some(tv.graph.node_count()),
            PieceKind::L1 { .. } => None,
            PieceKind::DualTvBall { graph, .. } => Some(graph.node_count()),
        }
    }

    pub(crate) fn check_dim(&self, u: &Signal) -> Result<()> {
        match self.dim() {
            Some(n) => u.check_len(n),
            None => Ok(()),
        }
    }

    /// `inf_u J(u)`.
    pub fn infimum(&self) -> f64 {
        match &self.0 {
            PieceKind::WeightedTv(tv) => tv.offset,
            _ => 0.0,
        }
    }

    /// True for kinds that are `+inf` somewhere.
    pub fn is_indicator(&self) -> bool {
        matches!(self.0, PieceKind::DualTvBall { .. })
    }
}

/// `J(u)` for one piece.
pub fn evaluate_piece(piece: &ConvexPiece, u: &Signal) -> Result<ExtReal> {
    piece.check_dim(u)?;
    let v = u.values();
    Ok(match piece.kind() {
        PieceKind::Quadratic { center, scale } => {
            ExtReal::Finite(u.distance_sq(center) / (2.0 * scale * scale))
        }
        PieceKind::WeightedTv(tv) => ExtReal::Finite(tv.value(v)),
        PieceKind::L1 { weight } => ExtReal::Finite(weight * v.iter().map(|a| a.abs()).sum::<f64>()),
        PieceKind::DualTvBall { graph, radius } => {
            if crate::prox::in_dual_ball(graph, *radius, v)? {
                ExtReal::Finite(0.0)
            } else {
                ExtReal::PosInf
            }
        }
    })
}

/// `min_i J_i(u)` with the tying index set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinRegularizer {
    pub value: f64,
    pub indices: Vec<usize>,
    pub per_piece: Vec<ExtReal>,
}

pub fn evaluate_min_regularizer(pieces: &[ConvexPiece], u: &Signal) -> Result<MinRegularizer> {
    evaluate_min_regularizer_with(pieces, u, TieTolerance::default())
}

pub fn evaluate_min_regularizer_with(
    pieces: &[ConvexPiece],
    u: &Signal,
    tol: TieTolerance,
) -> Result<MinRegularizer> {
    if pieces.is_empty() {
        return Err(Error::param("at least one piece is required"));
    }
    let per_piece = pieces
        .iter()
        .enumerate()
        .map(|(k, p)| evaluate_piece(p, u).map_err(|e| e.in_piece(k)))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = per_piece.iter().map(|v| v.to_f64()).collect();
    let indices = tol.argmin_set(&raw);
    let Some(&first) = indices.first() else {
        return Err(Error::OutsideAllDomains);
    };
    Ok(MinRegularizer {
        value: raw[first],
        indices,
        per_piece,
    })
}

/// All `2^|E|` pieces `J_Omega` of a truncated pairwise regularizer; bit `k`
/// of the index selects edge `k` into `Omega`.
pub fn truncated_pieces(graph: &GridGraph, base: BaseTerm, cap: usize) -> Result<Vec<ConvexPiece>> {
    let m = graph.edge_count();
    if m > cap || m >= usize::BITS as usize {
        return Err(Error::EnumerationRefused { edges: m, cap });
    }
    (0..1usize << m)
        .map(|mask| ConvexPiece::weighted_tv(graph.clone(), &mask_edges(mask, m), base))
        .collect()
}

pub(crate) fn mask_edges(mask: usize, m: usize) -> Vec<usize> {
    (0..m).filter(|k| mask >> k & 1 == 1).collect()
}

/// `sum_e w_e min(g(u_i - u_j), 1)`.
pub fn truncated_regularizer(graph: &GridGraph, base: BaseTerm, u: &[f64]) -> f64 {
    graph
        .edges()
        .iter()
        .map(|e| e.w * base.truncated(u[e.i] - u[e.j]))
        .sum()
}
