//! Exact weighted 1D TV proximal operator by dynamic programming on the
//! derivative of the forward value functions.
//!
//! `F_1(u) = (u - x_1)^2 / 2` and
//! `F_{k+1}(v) = (v - x_{k+1})^2 / 2 + min_u F_k(u) + l_k |v - u|`.
//! Each `F_k'` is continuous, piecewise affine and has slope >= 1, stored as
//! a deque of knots plus the affine pieces at both tails. The inner minimum
//! clips `F_k'` to `[-l_k, l_k]` and its argmin is `clamp(v, lo_k, hi_k)`
//! with `F_k'(lo_k) = -l_k`, `F_k'(hi_k) = l_k`.

use std::collections::VecDeque;

/// Breakpoint of a piecewise-affine derivative: crossing `pos` left to right
/// adds `(da, db)` to the affine coefficients `(a, b)` of `a v + b`.
#[derive(Debug, Clone, Copy)]
struct Knot {
    pos: f64,
    da: f64,
    db: f64,
}

/// `argmin_u 0.5 ||x - u||^2 + sum_k lambda_k |u_{k+1} - u_k|`, with
/// `lambda.len() == x.len() - 1` and every `lambda_k >= 0`.
pub(crate) fn solve(x: &[f64], lambda: &[f64]) -> Vec<f64> {
    let n = x.len();
    debug_assert_eq!(lambda.len() + 1, n);
    let mut knots: VecDeque<Knot> = VecDeque::with_capacity(2 * n);
    let (mut al, mut bl) = (1.0, -x[0]);
    let (mut ar, mut br) = (1.0, -x[0]);
    let mut lo = vec![0.0; n.saturating_sub(1)];
    let mut hi = vec![0.0; n.saturating_sub(1)];

    for k in 0..n - 1 {
        let l = lambda[k];

        // Lowest v with F'(v) = -l, consuming knots to its left.
        let low = loop {
            match knots.front() {
                Some(kn) if al * kn.pos + bl <= -l => {
                    al += kn.da;
                    bl += kn.db;
                    knots.pop_front();
                }
                _ => break (-l - bl) / al,
            }
        };
        // Highest v with F'(v) = l, consuming knots to its right.
        let high = loop {
            match knots.back() {
                Some(kn) if ar * kn.pos + br >= l => {
                    ar -= kn.da;
                    br -= kn.db;
                    knots.pop_back();
                }
                _ => break (l - br) / ar,
            }
        };
        lo[k] = low;
        hi[k] = high;
        knots.push_front(Knot {
            pos: low,
            da: al,
            db: bl + l,
        });
        knots.push_back(Knot {
            pos: high,
            da: -ar,
            db: l - br,
        });
        // Clipped tails, then add the next data term v - x_{k+1}.
        (al, bl) = (1.0, -l - x[k + 1]);
        (ar, br) = (1.0, l - x[k + 1]);
    }

    let root = loop {
        match knots.front() {
            Some(kn) if al * kn.pos + bl <= 0.0 => {
                al += kn.da;
                bl += kn.db;
                knots.pop_front();
            }
            _ => break -bl / al,
        }
    };
    let mut u = vec![0.0; n];
    u[n - 1] = root;
    for k in (0..n - 1).rev() {
        u[k] = u[k + 1].clamp(lo[k], hi[k]);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pixels() {
        let u = solve(&[0.0, 1.0], &[0.2]);
        assert!((u[0] - 0.2).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        let u = solve(&[0.0, 1.0], &[0.6]);
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_pixel_and_zero_weights() {
        assert_eq!(solve(&[2.5], &[]), vec![2.5]);
        assert_eq!(solve(&[1.0, -2.0, 3.0], &[0.0, 0.0]), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn large_weight_gives_mean() {
        let x = [1.0, 4.0, -2.0, 3.0];
        let u = solve(&x, &[100.0; 3]);
        for v in u {
            assert!((v - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_merge() {
        // Pixels 0 and 1 merge; pixel 2 stays separate.
        let u = solve(&[0.0, 0.4, 3.0], &[0.5, 0.5]);
        let expect = [0.45, 0.45, 2.5];
        for (a, b) in u.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{u:?}");
        }
    }

    #[test]
    fn plateau() {
        // The spike merges with both neighbours at the mean.
        let u = solve(&[0.0, 3.0, 0.0], &[1.0, 1.0]);
        let expect = [1.0, 1.0, 1.0];
        for (a, b) in u.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{u:?}");
        }
    }
}
