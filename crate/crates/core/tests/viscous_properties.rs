use hjminplus::linalg::max_abs_diff;
use hjminplus::oracle::posterior_simpson;
use hjminplus::viscous::{laplacian_fd, MixturePrior};
use hjminplus::{
    lax_oleinik, mixture_s_epsilon, mmse, posterior_mean, s_epsilon, ConvexPiece, GridGraph,
    PosteriorMethod, Signal,
};
use proptest::prelude::*;

fn line(v: &[f64]) -> Signal {
    Signal::from_vec(v.to_vec()).unwrap()
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

/// Log-concave pieces that have a partition function.
fn piece_1d() -> impl Strategy<Value = ConvexPiece> {
    prop_oneof![
        (-2.0..2.0f64, 0.3..2.0f64).prop_map(|(m, s)| ConvexPiece::quadratic(line(&[m]), s).unwrap()),
        (0.2..2.0f64).prop_map(|w| ConvexPiece::l1(w).unwrap()),
    ]
}

fn gaussian_s(x: &[f64], mu: &[f64], sigma: f64, t: f64, eps: f64) -> f64 {
    let d = sigma * sigma + t;
    let n = x.len() as f64;
    let r: f64 = x.iter().zip(mu).map(|(a, m)| (a - m) * (a - m)).sum();
    0.5 * n * eps * (d / (sigma * sigma)).ln() + r / (2.0 * d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn gradient_matches_finite_differences(
        piece in piece_1d(),
        x in -3.0..3.0f64,
        t in 0.2..1.5f64,
        eps in log_uniform(1e-2, 1.0),
    ) {
        let s = s_epsilon(&piece, &line(&[x]), t, eps).unwrap();
        let h = 1e-4;
        let up = s_epsilon(&piece, &line(&[x + h]), t, eps).unwrap().s_eps;
        let down = s_epsilon(&piece, &line(&[x - h]), t, eps).unwrap().s_eps;
        prop_assert!(((up - down) / (2.0 * h) - s.grad[0]).abs() <= 1e-4);
    }

    #[test]
    fn quadrature_matches_simpson_oracle(
        piece in piece_1d(),
        x in -3.0..3.0f64,
        t in 0.2..1.5f64,
        eps in log_uniform(1e-2, 1.0),
    ) {
        let s = s_epsilon(&piece, &line(&[x]), t, eps).unwrap();
        let j = |u: f64| hjminplus::evaluate_piece(&piece, &line(&[u])).unwrap().to_f64();
        let width = (t * eps).sqrt();
        let r = posterior_simpson(j, x, t, eps, (x - 40.0 * width - 3.0, x + 40.0 * width + 3.0), &[0.0], width.min(eps) / 200.0);
        prop_assert!((s.s_eps - r.s_eps).abs() <= 1e-8);
        prop_assert!((s.u_pm[0] - r.mean).abs() <= 1e-8);
        prop_assert!((s.mmse - r.variance).abs() <= 1e-8);
    }

    /// `s_eps - (n eps / 2) ln t` is convex in `x`.
    #[test]
    fn shifted_value_is_midpoint_convex(
        piece in piece_1d(),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        t in 0.2..1.5f64,
        eps in log_uniform(1e-2, 1.0),
    ) {
        let f = |x: f64| s_epsilon(&piece, &line(&[x]), t, eps).unwrap().s_eps;
        prop_assert!(f(0.5 * (a + b)) <= 0.5 * (f(a) + f(b)) + 1e-10);
    }

    #[test]
    fn mean_stays_near_map(
        piece in piece_1d(),
        x in -3.0..3.0f64,
        t in 0.2..1.5f64,
        eps in log_uniform(1e-3, 1.0),
    ) {
        let u_pm = posterior_mean(&piece, &line(&[x]), t, eps).unwrap();
        let u_map = lax_oleinik(&piece, &line(&[x]), t).unwrap().minimizer;
        prop_assert!(u_pm.distance_sq(&u_map) <= t * eps);
    }

    #[test]
    fn gaussian_closed_form_any_dimension(
        mu in prop::collection::vec(-2.0..2.0f64, 1..6),
        shift in prop::collection::vec(-2.0..2.0f64, 6),
        sigma in 0.3..2.0f64,
        t in 0.1..2.0f64,
        eps in log_uniform(1e-6, 1.0),
    ) {
        let n = mu.len();
        let x: Vec<f64> = mu.iter().zip(&shift).map(|(m, s)| m + s).collect();
        let piece = ConvexPiece::quadratic(line(&mu), sigma).unwrap();
        let s = s_epsilon(&piece, &line(&x), t, eps).unwrap();
        prop_assert_eq!(s.method, PosteriorMethod::ClosedForm);
        prop_assert!((s.s_eps - gaussian_s(&x, &mu, sigma, t, eps)).abs() <= 1e-12);
        let d = sigma * sigma + t;
        prop_assert!((s.mmse - n as f64 * eps * t * sigma * sigma / d).abs() <= 1e-14);
        prop_assert!((s.laplacian.unwrap() - n as f64 / d).abs() <= 1e-14);
    }

    #[test]
    fn gmm_matches_analytic_display(
        mus in prop::collection::vec(-2.0..2.0f64, 2..5),
        sigmas in prop::collection::vec(0.3..1.5f64, 5),
        x in -3.0..3.0f64,
        t in 0.1..1.5f64,
        eps in log_uniform(1e-4, 1.0),
    ) {
        let pieces: Vec<_> = mus
            .iter()
            .zip(&sigmas)
            .map(|(&m, &s)| ConvexPiece::quadratic(line(&[m]), s).unwrap())
            .collect();
        let prior = MixturePrior::new(pieces, eps).unwrap();
        let got = mixture_s_epsilon(&prior, &line(&[x]), t).unwrap();
        // Direct evaluation of the closed forms, stabilized by the smallest exponent.
        let exps: Vec<f64> = mus
            .iter()
            .zip(&sigmas)
            .map(|(m, s)| {
                let d = s * s + t;
                (x - m) * (x - m) / (2.0 * d) / eps - 0.5 * (s * s / d).ln()
            })
            .collect();
        let lo = exps.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = exps.iter().map(|e| (lo - e).exp()).collect();
        let total: f64 = w.iter().sum();
        let s_eps = eps * (lo - total.ln());
        let u_pm: f64 = mus
            .iter()
            .zip(&sigmas)
            .zip(&w)
            .map(|((m, s), wi)| (s * s * x + t * m) / (s * s + t) * wi)
            .sum::<f64>()
            / total;
        prop_assert!((got.stats.s_eps - s_eps).abs() <= 1e-12 * (1.0 + s_eps.abs()));
        prop_assert!((got.stats.u_pm[0] - u_pm).abs() <= 1e-12);
    }

    #[test]
    fn mixture_prior_sandwich(
        mus in prop::collection::vec(-2.0..2.0f64, 1..5),
        u in -3.0..3.0f64,
        eps in log_uniform(1e-3, 1.0),
    ) {
        let pieces: Vec<_> = mus.iter().map(|&m| ConvexPiece::quadratic(line(&[m]), 1.0).unwrap()).collect();
        let m = pieces.len() as f64;
        let prior = MixturePrior::new(pieces, eps).unwrap();
        let j = prior.value(&line(&[u])).unwrap();
        let jmin = mus.iter().map(|c| 0.5 * (u - c) * (u - c)).fold(f64::INFINITY, f64::min);
        prop_assert!(j <= jmin + 1e-12);
        prop_assert!(jmin <= j + eps * m.ln() + 1e-12);
    }
}

#[test]
fn frozen_gaussian_values() {
    let p = ConvexPiece::quadratic(line(&[0.0]), 1.0).unwrap();
    let s = s_epsilon(&p, &line(&[0.0]), 1.0, 1.0).unwrap();
    assert!((s.s_eps - 0.346_573_590_279_972_6).abs() < 1e-15);
    assert_eq!(mmse(&p, &line(&[0.0]), 1.0, 1.0).unwrap(), 0.5);
}

/// Reference values from the Simpson oracle (step 1e-4 on [-20, 20]).
#[test]
fn frozen_laplace_prior_values() {
    let p = ConvexPiece::l1(1.0).unwrap();
    let s = s_epsilon(&p, &line(&[0.5]), 1.0, 0.5).unwrap();
    assert!((s.s_eps - 0.503_962_459_475_3).abs() < 1e-11);
    assert!((s.u_pm[0] - 0.186_213_022_797_6).abs() < 1e-11);
    assert!((s.mmse - 0.197_645_330_646_3).abs() < 1e-11);
}

/// Reference values from a 2D tensor Simpson rule at steps 2e-3 and 1e-3,
/// Richardson-extrapolated across the kink on the diagonal.
#[test]
fn frozen_tv_pair_values() {
    let p = ConvexPiece::tv(GridGraph::chain(2, 1.0).unwrap());
    let s = s_epsilon(&p, &line(&[0.0, 1.0]), 0.5, 0.2).unwrap();
    assert!((s.s_eps - 0.607_129_955_45).abs() < 1e-9);
    assert!(max_abs_diff(s.u_pm.values(), &[0.354_279_032, 0.645_720_968]) < 1e-8);
    assert!((s.mmse - 0.144_144_770_52).abs() < 1e-9);
}

#[test]
fn mmse_identity_with_second_differences() {
    let p = ConvexPiece::l1(0.8).unwrap();
    let (x, t, eps) = (0.7, 0.6, 0.3);
    let s = s_epsilon(&p, &line(&[x]), t, eps).unwrap();
    let lap = laplacian_fd(&p, &line(&[x]), t, eps, 1e-3).unwrap();
    assert!((s.mmse - (t * eps - t * t * eps * lap)).abs() < 1e-5);
}

#[test]
fn symmetric_mixture_mean_is_symmetric_point() {
    let pieces: Vec<_> = [0.0, 1.0].iter().map(|&m| ConvexPiece::quadratic(line(&[m]), 1.0).unwrap()).collect();
    let prior = MixturePrior::new(pieces, 0.1).unwrap();
    let s = mixture_s_epsilon(&prior, &line(&[0.5]), 1.0).unwrap();
    assert!((s.stats.u_pm[0] - 0.5).abs() < 1e-15);
}
