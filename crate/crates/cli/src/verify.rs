//! Seeded end-to-end checks of every solver against the brute-force
//! oracles. Each check returns an [`Outcome`]; the `verify` subcommand and
//! the acceptance target both print one line per outcome.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use hjminplus::decompose::select_winner;
use hjminplus::linalg::{dist_sq, max_abs_diff};
use hjminplus::minplus::truncated_tv_enumerate;
use hjminplus::oracle::{alternating_decomposition, grid_minimize, posterior_simpson, TexturePrior};
use hjminplus::piece::truncated_regularizer;
use hjminplus::viscous::{mixture_s_epsilon, s_epsilon_with, MixturePrior, ViscousOptions};
use hjminplus::{
    decompose, epsilon_limit_check, evaluate_min_regularizer, lax_oleinik, minplus_solve, prox,
    tv_prox_1d_exact, BaseTerm, ConvexPiece, Edge, GridGraph, PieceKind, Signal, TieTolerance,
};

use crate::csv::{read_table, write_table};
use crate::pgm::Graymap;

/// Result of one check.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<3} {}: {} ({:.2} s, budget {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

/// Instance counts: the acceptance sizes, or a tenth of them for smoke runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Full,
    Quick,
}

impl Scale {
    fn count(self, full: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => full.div_ceil(10),
        }
    }
}

pub const SUITES: [&str; 7] = ["prox", "hj", "minplus", "viscous", "decompose", "cli", "all"];

/// Runs the named suite; `None` for an unknown name.
pub fn run_suite(name: &str, scale: Scale) -> Option<Vec<Outcome>> {
    let checks: Vec<fn(Scale) -> Outcome> = match name {
        "prox" => vec![prox_matches_exact_chain],
        "hj" => vec![minimizer_gradient_relation],
        "minplus" => vec![minplus_matches_grid, truncated_enumeration_matches_grid],
        "viscous" => vec![
            posterior_identities,
            gmm_closed_forms,
            epsilon_limits,
            mixture_matches_direct_quadrature,
        ],
        "decompose" => vec![decomposition_matches_alternating],
        "cli" => vec![io_round_trips],
        "all" => vec![
            prox_matches_exact_chain,
            minplus_matches_grid,
            truncated_enumeration_matches_grid,
            minimizer_gradient_relation,
            posterior_identities,
            gmm_closed_forms,
            epsilon_limits,
            decomposition_matches_alternating,
            mixture_matches_direct_quadrature,
            io_round_trips,
        ],
        _ => return None,
    };
    Some(checks.into_iter().map(|c| c(scale)).collect())
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn uniform_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn line(v: &[f64]) -> Signal {
    Signal::from_vec(v.to_vec()).expect("non-empty finite signal")
}

fn timed(
    id: &'static str,
    title: &'static str,
    budget_secs: u64,
    body: impl FnOnce() -> (bool, String),
) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = body();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    Outcome {
        id,
        title,
        passed: ok && elapsed < budget,
        detail,
        elapsed,
        budget,
    }
}

/// Iterative TV prox against the exact chain solver.
pub fn prox_matches_exact_chain(scale: Scale) -> Outcome {
    timed("1", "iterative TV prox vs exact chain prox", 30, || {
        let mut r = rng(1);
        let cases: Vec<_> = (0..scale.count(200))
            .map(|k| {
                let n = r.gen_range(2..=64);
                let mut x = uniform_vec(&mut r, n, -0.2, 0.2);
                if k % 2 == 0 {
                    // Piecewise-constant signal plus noise.
                    let mut level = 0.0;
                    for v in x.iter_mut() {
                        if r.gen_bool(0.15) {
                            level = r.gen_range(-3.0..3.0);
                        }
                        *v += level;
                    }
                }
                let w = uniform_vec(&mut r, n - 1, 0.0, 2.0);
                (x, w, log_uniform(&mut r, 0.01, 2.0))
            })
            .collect();
        let devs: Vec<f64> = cases
            .par_iter()
            .map(|(x, w, t)| {
                let xs = line(x);
                let piece = ConvexPiece::weighted_tv(GridGraph::chain_weighted(w).unwrap(), &[], BaseTerm::Abs).unwrap();
                let iterative = prox(&piece, &xs, *t).map(|p| p.point);
                let exact = tv_prox_1d_exact(&xs, w, *t);
                match (iterative, exact) {
                    (Ok(a), Ok(b)) => max_abs_diff(a.values(), b.values()),
                    _ => f64::INFINITY,
                }
            })
            .collect();
        let worst = devs.iter().copied().fold(0.0, f64::max);
        (worst <= 1e-5, format!("{} chains, max deviation {worst:.2e} (tol 1e-5)", cases.len()))
    })
}

fn random_piece(r: &mut impl Rng, n: usize) -> ConvexPiece {
    if n >= 2 && r.gen_bool(0.5) {
        let w = uniform_vec(r, n - 1, 0.1, 1.5);
        ConvexPiece::tv(GridGraph::chain_weighted(&w).unwrap())
    } else {
        ConvexPiece::quadratic(line(&uniform_vec(r, n, -2.0, 2.0)), r.gen_range(0.3..1.5)).unwrap()
    }
}

/// Min-plus values against brute-force minimization of the non-convex objective.
pub fn minplus_matches_grid(scale: Scale) -> Outcome {
    timed("2", "min-plus value vs grid brute force", 120, || {
        let mut r = rng(2);
        let cases: Vec<_> = (0..scale.count(50))
            .map(|_| {
                let n = r.gen_range(1..=3);
                let m = r.gen_range(1..=8);
                let pieces: Vec<_> = (0..m).map(|_| random_piece(&mut r, n)).collect();
                (pieces, uniform_vec(&mut r, n, -2.0, 2.0), r.gen_range(0.1..1.5))
            })
            .collect();
        let mut worst = 0.0f64;
        for (pieces, x, t) in &cases {
            let n = x.len();
            let value = match minplus_solve(pieces, &line(x), *t) {
                Ok(s) => s.value,
                Err(e) => return (false, format!("solver error: {e}")),
            };
            let objective = |u: &[f64]| {
                evaluate_min_regularizer(pieces, &line(u)).unwrap().value + dist_sq(x, u) / (2.0 * t)
            };
            let coarse = [0.01, 0.02, 0.05][n - 1];
            let g = grid_minimize(objective, &vec![-3.0; n], &vec![3.0; n], coarse, 1e-7);
            worst = worst.max((value - g.value).abs());
        }
        (worst <= 1e-3, format!("{} instances, max |S - grid| {worst:.2e} (tol 1e-3)", cases.len()))
    })
}

fn triangle(w: &[f64]) -> GridGraph {
    let edges = vec![
        Edge { i: 0, j: 1, w: w[0] },
        Edge { i: 1, j: 2, w: w[1] },
        Edge { i: 0, j: 2, w: w[2] },
    ];
    GridGraph::new(3, edges).unwrap()
}

/// Subset enumeration against direct minimization of the truncated objective.
pub fn truncated_enumeration_matches_grid(scale: Scale) -> Outcome {
    timed("3", "truncated-TV enumeration vs grid brute force", 120, || {
        let mut r = rng(3);
        let mut cases = Vec::new();
        for topology in 0..4 {
            for base in [BaseTerm::Abs, BaseTerm::Square] {
                for _ in 0..scale.count(4) {
                    let g = match topology {
                        0 => GridGraph::chain_weighted(&uniform_vec(&mut r, 1, 0.2, 2.0)).unwrap(),
                        1 => GridGraph::chain_weighted(&uniform_vec(&mut r, 2, 0.2, 2.0)).unwrap(),
                        2 => triangle(&uniform_vec(&mut r, 3, 0.2, 2.0)),
                        _ => {
                            let w = uniform_vec(&mut r, 4, 0.2, 2.0);
                            let edges = GridGraph::grid4(2, 2, 1.0).unwrap().edges().iter().zip(w)
                                .map(|(e, w)| Edge { w, ..*e })
                                .collect();
                            GridGraph::new(4, edges).unwrap()
                        }
                    };
                    let x = uniform_vec(&mut r, g.node_count(), -2.0, 2.0);
                    cases.push((g, base, x, r.gen_range(0.1..1.0)));
                }
            }
        }
        let mut worst = 0.0f64;
        for (g, base, x, t) in &cases {
            let n = x.len();
            let value = match truncated_tv_enumerate(g, *base, &line(x), *t) {
                Ok(s) => s.value,
                Err(e) => return (false, format!("solver error: {e}")),
            };
            let objective = |u: &[f64]| truncated_regularizer(g, *base, u) + dist_sq(x, u) / (2.0 * t);
            let coarse = [0.01, 0.02, 0.05, 0.1][n - 1];
            let grid = grid_minimize(objective, &vec![-2.5; n], &vec![2.5; n], coarse, 1e-7);
            worst = worst.max((value - grid.value).abs());
        }
        (
            worst <= 1e-3,
            format!("{} instances over 4 graphs and both bases, max deviation {worst:.2e} (tol 1e-3)", cases.len()),
        )
    })
}

/// The minimizer equals `x - t grad S` with a finite-difference gradient.
pub fn minimizer_gradient_relation(scale: Scale) -> Outcome {
    timed("4", "minimizer = x - t grad S (finite differences)", 30, || {
        let mut r = rng(4);
        let cases: Vec<_> = (0..scale.count(100))
            .map(|k| {
                let (piece, n) = match k % 5 {
                    0 => {
                        let n = r.gen_range(1..=4);
                        (ConvexPiece::quadratic(line(&uniform_vec(&mut r, n, -2.0, 2.0)), r.gen_range(0.3..2.0)).unwrap(), n)
                    }
                    1 => {
                        let n = r.gen_range(2..=6);
                        (ConvexPiece::tv(GridGraph::chain_weighted(&uniform_vec(&mut r, n - 1, 0.1, 1.5)).unwrap()), n)
                    }
                    2 => (ConvexPiece::tv(GridGraph::grid4(2, 2, r.gen_range(0.1..1.5)).unwrap()), 4),
                    3 => (ConvexPiece::l1(r.gen_range(0.1..2.0)).unwrap(), r.gen_range(1..=4)),
                    _ => {
                        let g = GridGraph::chain_weighted(&uniform_vec(&mut r, 2, 0.1, 1.5)).unwrap();
                        (ConvexPiece::weighted_tv(g, &[], BaseTerm::Square).unwrap(), 3)
                    }
                };
                let x = uniform_vec(&mut r, n, -2.0, 2.0);
                (piece, x, r.gen_range(0.1..1.5))
            })
            .collect();
        let h = 1e-5;
        let devs: Vec<f64> = cases
            .par_iter()
            .map(|(piece, x, t)| {
                let s = |v: &[f64]| lax_oleinik(piece, &line(v), *t).map(|e| e.value);
                let Ok(eval) = lax_oleinik(piece, &line(x), *t) else {
                    return f64::INFINITY;
                };
                let mut implied = Vec::with_capacity(x.len());
                for k in 0..x.len() {
                    let mut p = x.clone();
                    p[k] += h;
                    let up = s(&p);
                    p[k] -= 2.0 * h;
                    let down = s(&p);
                    let (Ok(up), Ok(down)) = (up, down) else {
                        return f64::INFINITY;
                    };
                    implied.push(x[k] - t * (up - down) / (2.0 * h));
                }
                dist_sq(&implied, eval.minimizer.values()).sqrt()
            })
            .collect();
        let worst = devs.iter().copied().fold(0.0, f64::max);
        (worst <= 1e-4, format!("{} points, max distance {worst:.2e} (tol 1e-4)", cases.len()))
    })
}

/// Five-point first and second derivatives from samples at `x + k h`,
/// `k = -2..=2`.
fn derivatives(f: [f64; 5], h: f64) -> (f64, f64) {
    let [m2, m1, c, p1, p2] = f;
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

/// Posterior mean and variance from quadrature against the derivative
/// identities of `S_eps`.
pub fn posterior_identities(scale: Scale) -> Outcome {
    timed("5", "posterior mean and variance identities (1D quadrature)", 120, || {
        let mut r = rng(5);
        let cases: Vec<_> = (0..scale.count(50))
            .map(|k| {
                let piece = if k % 2 == 0 {
                    ConvexPiece::quadratic(line(&[r.gen_range(-2.0..2.0)]), r.gen_range(0.3..2.0)).unwrap()
                } else {
                    ConvexPiece::l1(r.gen_range(0.2..2.0)).unwrap()
                };
                (piece, r.gen_range(-3.0..3.0), r.gen_range(0.1..2.0), log_uniform(&mut r, 1e-3, 1.0))
            })
            .collect();
        let opts = ViscousOptions {
            force_quadrature: true,
            ..ViscousOptions::default()
        };
        let results: Vec<Result<(f64, f64), String>> = cases
            .par_iter()
            .map(|(piece, x, t, eps)| {
                let stats = |y: f64| s_epsilon_with(piece, &line(&[y]), *t, *eps, &opts).map_err(|e| e.to_string());
                let centre = stats(*x)?;
                // Derivatives of S_eps vary on the posterior length scale.
                let h = (0.05 * (t * eps).sqrt()).min(1e-3);
                let mut samples = [centre.s_eps; 5];
                for k in [0, 1, 3, 4] {
                    samples[k] = stats(x + (k as f64 - 2.0) * h)?.s_eps;
                }
                let (grad, lap) = derivatives(samples, h);
                let mean_gap = (centre.u_pm[0] - (x - t * grad)).abs();
                let var_gap = (centre.mmse - (t * eps - t * t * eps * lap)).abs();
                Ok((mean_gap, var_gap))
            })
            .collect();
        let mut worst = (0.0f64, 0.0f64);
        for res in results {
            match res {
                Ok((a, b)) => worst = (worst.0.max(a), worst.1.max(b)),
                Err(e) => return (false, format!("solver error: {e}")),
            }
        }
        (
            worst.0 <= 1e-6 && worst.1 <= 1e-5,
            format!(
                "{} cases, max mean gap {:.2e} (tol 1e-6), max variance gap {:.2e} (tol 1e-5)",
                cases.len(),
                worst.0,
                worst.1
            ),
        )
    })
}

/// `-eps ln sum_i exp(-J_i(u) / eps)`, written out independently of the library.
fn smooth_min(values: &[f64], eps: f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    lo - eps * values.iter().map(|v| (-(v - lo) / eps).exp()).sum::<f64>().ln()
}

/// Reference posterior of a 1D mixture by Simpson's rule on its smoothed
/// initial data.
fn mixture_reference(pieces: &[ConvexPiece], x: f64, t: f64, eps: f64) -> (f64, f64) {
    let mut centres = vec![x];
    let mut width = (t * eps).sqrt();
    let mut kinks = Vec::new();
    for p in pieces {
        match p.kind() {
            PieceKind::Quadratic { center, scale } => {
                centres.push(center[0]);
                let s2 = scale * scale;
                width = width.min((eps * s2 * t / (s2 + t)).sqrt());
            }
            PieceKind::L1 { weight } => {
                kinks.push(0.0);
                width = width.min(eps / weight);
            }
            _ => unreachable!("1D mixtures use quadratic and l1 pieces"),
        }
    }
    let lo = centres.iter().copied().fold(f64::INFINITY, f64::min) - 12.0 * (t * eps).sqrt() - 1.0;
    let hi = centres.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 12.0 * (t * eps).sqrt() + 1.0;
    let j = |u: f64| {
        let values: Vec<f64> = pieces
            .iter()
            .map(|p| match p.kind() {
                PieceKind::Quadratic { center, scale } => (u - center[0]).powi(2) / (2.0 * scale * scale),
                PieceKind::L1 { weight } => weight * u.abs(),
                _ => unreachable!(),
            })
            .collect();
        smooth_min(&values, eps)
    };
    let r = posterior_simpson(j, x, t, eps, (lo, hi), &kinks, width / 60.0);
    (r.s_eps, r.mean)
}

/// Closed-form mixture values against quadrature of the smoothed prior.
pub fn gmm_closed_forms(scale: Scale) -> Outcome {
    timed("6", "Gaussian mixture closed forms vs quadrature", 60, || {
        let mut r = rng(6);
        let cases: Vec<_> = (0..scale.count(100))
            .map(|_| {
                let m = r.gen_range(2..=5);
                let pieces: Vec<_> = (0..m)
                    .map(|_| ConvexPiece::quadratic(line(&[r.gen_range(-2.0..2.0)]), r.gen_range(0.3..1.5)).unwrap())
                    .collect();
                (pieces, r.gen_range(-3.0..3.0), r.gen_range(0.1..1.5), log_uniform(&mut r, 1e-3, 1.0))
            })
            .collect();
        compare_mixtures(&cases, 1e-6)
    })
}

fn compare_mixtures(cases: &[(Vec<ConvexPiece>, f64, f64, f64)], tol: f64) -> (bool, String) {
    let gaps: Vec<Result<(f64, f64), String>> = cases
        .par_iter()
        .map(|(pieces, x, t, eps)| {
            let prior = MixturePrior::new(pieces.clone(), *eps).map_err(|e| e.to_string())?;
            let got = mixture_s_epsilon(&prior, &line(&[*x]), *t).map_err(|e| e.to_string())?;
            let (s, mean) = mixture_reference(pieces, *x, *t, *eps);
            Ok(((got.stats.s_eps - s).abs(), (got.stats.u_pm[0] - mean).abs()))
        })
        .collect();
    let mut worst = (0.0f64, 0.0f64);
    for g in gaps {
        match g {
            Ok((a, b)) => worst = (worst.0.max(a), worst.1.max(b)),
            Err(e) => return (false, format!("solver error: {e}")),
        }
    }
    (
        worst.0 <= tol && worst.1 <= tol,
        format!(
            "{} settings, max |dS| {:.2e}, max |du_pm| {:.2e} (tol {tol:.0e})",
            cases.len(),
            worst.0,
            worst.1
        ),
    )
}

/// Viscous solutions approach the first-order one as `eps -> 0`.
pub fn epsilon_limits(scale: Scale) -> Outcome {
    timed("7", "eps -> 0 limits and the n t eps bound", 60, || {
        let mut r = rng(7);
        let eps = [1.0, 0.1, 0.01, 0.001];
        let mut settings = Vec::new();
        while settings.len() < scale.count(20) {
            let m = r.gen_range(2..=4);
            let pieces: Vec<_> = (0..m)
                .map(|_| ConvexPiece::quadratic(line(&[r.gen_range(-2.0..2.0)]), r.gen_range(0.3..1.5)).unwrap())
                .collect();
            let (x, t) = (r.gen_range(-2.0..2.0), r.gen_range(0.1..1.0));
            if minplus_solve(&pieces, &line(&[x]), t).is_ok_and(|s| s.minimizers.len() == 1) {
                settings.push((pieces, x, t));
            }
        }
        let mut violations = 0;
        let mut worst_ratio = 0.0f64;
        let mut worst_gap = 0.0f64;
        for (pieces, x, t) in &settings {
            let report = match epsilon_limit_check(pieces, &line(&[*x]), *t, &eps) {
                Ok(rep) => rep,
                Err(e) => return (false, format!("solver error: {e}")),
            };
            for row in &report.rows {
                worst_ratio = worst_ratio.max(row.pm_gap_sq / row.bound);
                if row.bound_ok != Some(true) {
                    violations += 1;
                }
            }
            worst_gap = worst_gap.max(report.rows[3].s_gap);
        }
        (
            violations == 0 && worst_gap < 0.05,
            format!(
                "{} settings, {violations} bound violations (max gap^2 / (n t eps) = {worst_ratio:.3}), max |S_eps - S_0| at eps 1e-3 = {worst_gap:.2e} (tol 0.05)",
                settings.len()
            ),
        )
    })
}

fn cartoon_texture_noise(r: &mut impl Rng, rows: usize, cols: usize) -> Vec<f64> {
    let noise = Normal::new(0.0, 0.05).expect("valid normal");
    let (r0, r1) = (r.gen_range(0..rows / 2), r.gen_range(rows / 2..rows));
    let (c0, c1) = (r.gen_range(0..cols / 2), r.gen_range(cols / 2..cols));
    let (bg, fg) = (r.gen_range(0.1..0.4), r.gen_range(0.6..0.9));
    let freq = r.gen_range(0.15..0.45);
    let amp = r.gen_range(0.03..0.1);
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let cartoon = if (r0..=r1).contains(&i) && (c0..=c1).contains(&j) { fg } else { bg };
            let stripes = amp * (std::f64::consts::TAU * freq * j as f64).sin();
            out.push(cartoon + stripes + noise.sample(r));
        }
    }
    out
}

/// Decomposition subproblems against alternating minimization.
pub fn decomposition_matches_alternating(scale: Scale) -> Outcome {
    timed("8", "decomposition values vs alternating minimization", 300, || {
        let mut r = rng(8);
        let cases: Vec<_> = (0..scale.count(20))
            .map(|_| {
                let (rows, cols) = (r.gen_range(4..=16), r.gen_range(4..=16));
                let x = cartoon_texture_noise(&mut r, rows, cols);
                (rows, cols, x, r.gen_range(0.02..0.1), r.gen_range(0.005..0.03))
            })
            .collect();
        let results: Vec<Result<(f64, bool), String>> = cases
            .par_iter()
            .map(|(rows, cols, x, t1, t2)| {
                let g = GridGraph::grid4(*rows, *cols, 1.0).unwrap();
                let xs = Signal::image(x.clone(), *rows, *cols).unwrap();
                let d = decompose(&xs, &g, *t1, *t2).map_err(|e| e.to_string())?;
                let o1 = alternating_decomposition(&g, x, TexturePrior::DualBall { t1: *t1 }, *t2, 500_000);
                let o2 = alternating_decomposition(&g, x, TexturePrior::L1, *t2, 500_000);
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
                let dev = rel(d.s1, o1.value).max(rel(d.s2, o2.value));
                let tie = TieTolerance::default();
                let consistent = d.winner == select_winner(d.s1, d.s2, tie)
                    && ((o1.value - o2.value).abs() <= 1e-4 * o1.value.abs().max(1.0)
                        || d.winner == select_winner(o1.value, o2.value, tie));
                Ok((dev, consistent))
            })
            .collect();
        let mut worst = 0.0f64;
        let mut inconsistent = 0;
        for res in results {
            match res {
                Ok((dev, ok)) => {
                    worst = worst.max(dev);
                    inconsistent += usize::from(!ok);
                }
                Err(e) => return (false, format!("solver error: {e}")),
            }
        }
        (
            worst <= 1e-4 && inconsistent == 0,
            format!(
                "{} images, max relative deviation {worst:.2e} (tol 1e-4), {inconsistent} winner mismatches",
                cases.len()
            ),
        )
    })
}

/// Mixture combination of per-piece solutions against quadrature of the
/// mixture's own initial data.
pub fn mixture_matches_direct_quadrature(scale: Scale) -> Outcome {
    timed("9", "log-sum-exp combination vs direct quadrature", 60, || {
        let mut r = rng(9);
        let cases: Vec<_> = (0..scale.count(50))
            .map(|_| {
                let m = r.gen_range(1..=4);
                let pieces: Vec<_> = (0..m)
                    .map(|_| {
                        if r.gen_bool(0.5) {
                            ConvexPiece::l1(r.gen_range(0.2..2.0)).unwrap()
                        } else {
                            ConvexPiece::quadratic(line(&[r.gen_range(-2.0..2.0)]), r.gen_range(0.3..1.5)).unwrap()
                        }
                    })
                    .collect();
                (pieces, r.gen_range(-3.0..3.0), r.gen_range(0.1..1.5), log_uniform(&mut r, 1e-3, 1.0))
            })
            .collect();
        compare_mixtures(&cases, 1e-5)
    })
}

/// Image and table formats reproduce what was written.
pub fn io_round_trips(scale: Scale) -> Outcome {
    timed("io", "image and table round trips", 30, || {
        let mut r = rng(10);
        for _ in 0..scale.count(100) {
            let (w, h) = (r.gen_range(1..20), r.gen_range(1..20));
            let maxval: u16 = if r.gen_bool(0.5) { 255 } else { r.gen_range(256..=65535) };
            let g = Graymap {
                width: w,
                height: h,
                maxval,
                samples: (0..w * h).map(|_| r.gen_range(0..=maxval)).collect(),
            };
            if Graymap::decode(&g.encode()).as_ref() != Ok(&g) {
                return (false, "graymap round trip changed samples".into());
            }
            let v = g.to_intensities((0.0, 1.0));
            if Graymap::from_intensities(&v, w, h, maxval, (0.0, 1.0)) != g {
                return (false, "intensity mapping is not invertible on samples".into());
            }
            let rows: Vec<Vec<f64>> = (0..r.gen_range(1..10))
                .map(|_| (0..3).map(|_| r.gen_range(-1e6..1e6) * 10f64.powi(r.gen_range(-300..300))).collect())
                .collect();
            let text = write_table(&["a", "b", "c"], &rows);
            match read_table(&text) {
                Ok((_, back)) if back == rows => {}
                _ => return (false, "table round trip changed values".into()),
            }
        }
        (true, format!("{} image and table round trips", scale.count(100)))
    })
}
