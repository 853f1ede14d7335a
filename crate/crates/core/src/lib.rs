//! Hamilton-Jacobi representation formulas for imaging models.
//!
//! * [`prox`]: proximal points and Moreau envelopes of convex pieces.
//! * [`hj`]: single- and multi-time Lax-Oleinik evaluation.
//! * [`minplus`]: min-plus combination for initial data `min_i J_i`.
//! * [`decompose`]: geometry/texture/noise decomposition with a mixed
//!   texture prior.
//! * [`viscous`]: Cole-Hopf partition functions, posterior means and MMSE.
//! * [`oracle`]: brute-force reference solvers used by the test suites.

pub mod decompose;
pub mod error;
pub mod graph;
pub mod hj;
pub mod linalg;
pub mod minplus;
pub mod oracle;
pub mod params;
pub mod piece;
pub mod prox;
pub mod signal;
pub mod viscous;

pub use decompose::{decompose, solve_s1, solve_s2, DecompositionResult, SubproblemSolution, Winner};
pub use error::{Error, Result};
pub use graph::{Edge, GridGraph};
pub use hj::{lax_oleinik, multi_time_lax_oleinik, HJEvaluation, HamiltonianTerm};
pub use minplus::{minplus_multi_time, minplus_solve, truncated_tv_enumerate, MinPlusSolution};
pub use params::{ExtReal, TieTolerance, TimeParams};
pub use piece::{evaluate_min_regularizer, evaluate_piece, BaseTerm, ConvexPiece, PieceKind};
pub use prox::{moreau_envelope, prox, tv_prox_1d_exact, ProxOptions, ProxResult};
pub use signal::{Shape, Signal};
pub use viscous::{
    epsilon_limit_check, mixture_s_epsilon, mmse, posterior_mean, s_epsilon, MixturePrior,
    PosteriorMethod, PosteriorStats,
};
