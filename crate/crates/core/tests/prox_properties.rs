use hjminplus::linalg::{dist_sq, max_abs_diff};
use hjminplus::oracle::chambolle_tv_prox;
use hjminplus::prox::{project_dual_ball, tv_prox_exact};
use hjminplus::{evaluate_piece, prox, tv_prox_1d_exact, BaseTerm, ConvexPiece, GridGraph, Signal};
use proptest::prelude::*;

fn chain_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-3.0..3.0f64, n),
            prop::collection::vec(0.0..2.0f64, n - 1),
            0.01..2.0f64,
        )
    })
}

fn image_case() -> impl Strategy<Value = (usize, usize, Vec<f64>, f64)> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        (Just(r), Just(c), prop::collection::vec(-2.0..2.0f64, r * c), 0.01..1.5f64)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterative_chain_prox_matches_exact((x, w, t) in chain_case()) {
        let g = GridGraph::chain_weighted(&w).unwrap();
        let xs = Signal::from_vec(x).unwrap();
        let piece = ConvexPiece::weighted_tv(g, &[], BaseTerm::Abs).unwrap();
        let iterative = prox(&piece, &xs, t).unwrap().point;
        let exact = tv_prox_1d_exact(&xs, &w, t).unwrap();
        prop_assert!(max_abs_diff(iterative.values(), exact.values()) <= 1e-5);
    }

    #[test]
    fn exact_chain_prox_matches_dual_projection_oracle((x, w, t) in chain_case()) {
        let g = GridGraph::chain_weighted(&w).unwrap();
        let exact = tv_prox_1d_exact(&Signal::from_vec(x.clone()).unwrap(), &w, t).unwrap();
        let (reference, _) = chambolle_tv_prox(&g, &x, t, None, 1e-13, 2_000_000);
        prop_assert!(max_abs_diff(exact.values(), &reference) <= 1e-7);
    }

    #[test]
    fn image_prox_matches_oracle((r, c, x, t) in image_case()) {
        let g = GridGraph::grid4(r, c, 1.0).unwrap();
        let xs = Signal::image(x.clone(), r, c).unwrap();
        let res = prox(&ConvexPiece::tv(g.clone()), &xs, t).unwrap();
        let (reference, _) = chambolle_tv_prox(&g, &x, t, None, 1e-13, 2_000_000);
        prop_assert!(max_abs_diff(res.point.values(), &reference) <= 1e-5);
        prop_assert!(res.duality_gap <= 1e-6 * (1.0 + res.envelope.abs()));
    }

    #[test]
    fn moreau_decomposition((r, c, x, t) in image_case()) {
        let g = GridGraph::grid4(r, c, 1.0).unwrap();
        let xs = Signal::image(x.clone(), r, c).unwrap();
        let p = prox(&ConvexPiece::tv(g.clone()), &xs, t).unwrap().point;
        let q = project_dual_ball(&g, t, &xs).unwrap();
        let sum: Vec<f64> = p.values().iter().zip(q.values()).map(|(a, b)| a + b).collect();
        prop_assert!(max_abs_diff(&sum, &x) <= 1e-5);
    }

    #[test]
    fn prox_is_nonexpansive(
        (x, w, t) in chain_case(),
        shift in prop::collection::vec(-1.0..1.0f64, 40),
    ) {
        let g = GridGraph::chain_weighted(&w).unwrap();
        let piece = ConvexPiece::tv(g);
        let y: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let px = prox(&piece, &Signal::from_vec(x.clone()).unwrap(), t).unwrap().point;
        let py = prox(&piece, &Signal::from_vec(y.clone()).unwrap(), t).unwrap().point;
        prop_assert!(dist_sq(px.values(), py.values()).sqrt() <= dist_sq(&x, &y).sqrt() + 1e-6);
    }

    #[test]
    fn envelope_is_a_minimum(
        (x, w, t) in chain_case(),
        probe in prop::collection::vec(-3.0..3.0f64, 40),
        square in any::<bool>(),
    ) {
        let g = GridGraph::chain_weighted(&w).unwrap();
        let base = if square { BaseTerm::Square } else { BaseTerm::Abs };
        let piece = ConvexPiece::weighted_tv(g, &[], base).unwrap();
        let xs = Signal::from_vec(x.clone()).unwrap();
        let env = prox(&piece, &xs, t).unwrap().envelope;
        let u = Signal::from_vec(probe[..x.len()].to_vec()).unwrap();
        let at_u = evaluate_piece(&piece, &u).unwrap().to_f64() + dist_sq(&x, u.values()) / (2.0 * t);
        prop_assert!(env <= at_u + 1e-7);
    }
}

#[test]
fn frozen_prox_points() {
    let line = |v: &[f64]| Signal::from_vec(v.to_vec()).unwrap();
    let l1 = ConvexPiece::l1(1.0).unwrap();
    assert_eq!(prox(&l1, &line(&[2.0]), 0.5).unwrap().point.values(), &[1.5]);
    let q = ConvexPiece::quadratic(line(&[0.0]), 1.0).unwrap();
    assert_eq!(prox(&q, &line(&[0.5]), 1.0).unwrap().point.values(), &[0.25]);
    let g = GridGraph::chain(2, 1.0).unwrap();
    let p = tv_prox_exact(&g, &line(&[0.0, 1.0]), 0.2).unwrap();
    assert!(max_abs_diff(p.values(), &[0.2, 0.8]) < 1e-15);
    let p = tv_prox_exact(&g, &line(&[0.0, 1.0]), 0.6).unwrap();
    assert!(max_abs_diff(p.values(), &[0.5, 0.5]) < 1e-15);
}

#[test]
fn square_base_prox_solves_its_linear_system() {
    // (I + 2 t L) u = x on a 2-pixel chain: u = mean +/- half gap / (1 + 4 t).
    let g = GridGraph::chain(2, 1.0).unwrap();
    let piece = ConvexPiece::weighted_tv(g, &[], BaseTerm::Square).unwrap();
    let x = Signal::from_vec(vec![0.0, 1.0]).unwrap();
    let p = prox(&piece, &x, 0.25).unwrap().point;
    assert!(max_abs_diff(p.values(), &[0.25, 0.75]) < 1e-10);
}
