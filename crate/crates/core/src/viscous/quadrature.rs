//! Globally adaptive Gauss-Kronrod (7, 15) quadrature for vector-valued
//! integrands, and the 1D posterior moments built on it.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<const M: usize> {
    a: f64,
    b: f64,
    value: [f64; M],
    error: [f64; M],
    magnitude: [f64; M],
}

fn kronrod<const M: usize>(f: &mut impl FnMut(f64) -> [f64; M], a: f64, b: f64) -> Segment<M> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; M];
    let mut g = [0.0; M];
    let mut mag = [0.0; M];
    let mut add = |x: f64, wk: f64, wg: f64, f: &mut dyn FnMut(f64) -> [f64; M]| {
        let v = f(x);
        for m in 0..M {
            k[m] += wk * v[m];
            g[m] += wg * v[m];
            mag[m] += wk * v[m].abs();
        }
    };
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        add(c - h * XGK[j], WGK[j], wg, f);
        add(c + h * XGK[j], WGK[j], wg, f);
    }
    add(c, WGK[7], WG[3], f);
    let mut seg = Segment {
        a,
        b,
        value: [0.0; M],
        error: [0.0; M],
        magnitude: [0.0; M],
    };
    for m in 0..M {
        seg.value[m] = h * k[m];
        seg.error[m] = (h * (k[m] - g[m])).abs();
        seg.magnitude[m] = h.abs() * mag[m];
    }
    seg
}

/// `int f` over consecutive `breaks`, refining the worst segment until every
/// component's error estimate is below `rel_tol * int |f_m|`.
pub(crate) fn integrate<const M: usize>(
    mut f: impl FnMut(f64) -> [f64; M],
    breaks: &[f64],
    rel_tol: f64,
    max_segments: usize,
) -> Result<[f64; M]> {
    let mut segs: Vec<Segment<M>> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&mut f, w[0], w[1]))
        .collect();
    loop {
        let mut value = [0.0; M];
        let mut error = [0.0; M];
        let mut magnitude = [0.0; M];
        for s in &segs {
            for m in 0..M {
                value[m] += s.value[m];
                error[m] += s.error[m];
                magnitude[m] += s.magnitude[m];
            }
        }
        let target: Vec<f64> = magnitude.iter().map(|v| rel_tol * v).collect();
        if (0..M).all(|m| error[m] <= target[m]) {
            return Ok(value);
        }
        if segs.len() >= max_segments {
            let (m, _) = (0..M)
                .map(|m| (m, error[m] / target[m].max(f64::MIN_POSITIVE)))
                .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            return Err(Error::Accuracy {
                estimate: error[m],
                target: target[m],
            });
        }
        let score = |s: &Segment<M>| {
            (0..M)
                .map(|m| s.error[m] / target[m].max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        };
        let worst = (0..segs.len())
            .max_by(|&i, &j| score(&segs[i]).total_cmp(&score(&segs[j])))
            .expect("at least one segment");
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segs.push(kronrod(&mut f, s.a, mid));
        segs.push(kronrod(&mut f, mid, s.b));
    }
}

/// Moments of the density `exp(-phi(u))` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Moments {
    /// `ln int exp(-phi)`.
    pub log_mass: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Tail level at which the integration window stops growing.
const TAIL: f64 = 36.9; // exp(-36.9) < 1e-16

/// `phi` must be minimal (normally zero) near `center`; `width` is the
/// posterior length scale and `kinks` the points where `phi` is not smooth.
///
/// The window `center +/- R` starts at `R = 8 width` and doubles until
/// `phi` exceeds its central value by [`TAIL`] at both ends.
pub(crate) fn moments_1d(
    phi: impl Fn(f64) -> f64,
    center: f64,
    width: f64,
    kinks: &[f64],
    rel_tol: f64,
    max_segments: usize,
) -> Result<Moments> {
    let base = phi(center);
    let mut r = 8.0 * width;
    let mut grow = 0;
    while phi(center - r) - base < TAIL || phi(center + r) - base < TAIL {
        r *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::param(
                "posterior density does not decay; the partition integral is not finite",
            ));
        }
    }
    let (lo, hi) = (center - r, center + r);
    let mut breaks = vec![lo];
    let mut inner: Vec<f64> = kinks.iter().copied().filter(|k| *k > lo && *k < hi).collect();
    inner.sort_by(f64::total_cmp);
    breaks.extend(inner);
    // Splitting at the centre keeps the peak on a node of both halves.
    if !breaks.contains(&center) {
        breaks.push(center);
        breaks.sort_by(f64::total_cmp);
    }
    breaks.push(hi);
    let [m0, m1, m2] = integrate(
        |u| {
            let z = u - center;
            let w = (base - phi(u)).exp();
            [w, z * w, z * z * w]
        },
        &breaks,
        rel_tol,
        max_segments,
    )?;
    let shift = m1 / m0;
    Ok(Moments {
        log_mass: m0.ln() - base,
        mean: center + shift,
        variance: (m2 / m0 - shift * shift).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| [x.powi(5), 1.0], &[0.0, 2.0], 1e-14, 10).unwrap();
        assert!((v[0] - 64.0 / 6.0).abs() < 1e-12);
        assert!((v[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_moments() {
        let (mu, s2) = (0.7, 0.09f64);
        let m = moments_1d(|u| (u - mu) * (u - mu) / (2.0 * s2), 0.5, s2.sqrt(), &[], 1e-13, 500)
            .unwrap();
        let log_norm = 0.5 * (2.0 * std::f64::consts::PI * s2).ln();
        assert!((m.log_mass - log_norm).abs() < 1e-12);
        assert!((m.mean - mu).abs() < 1e-12);
        assert!((m.variance - s2).abs() < 1e-12);
    }

    #[test]
    fn laplace_with_kink() {
        // exp(-|u|) has mass 2 and variance 2.
        let m = moments_1d(|u: f64| u.abs(), 0.0, 1.0, &[0.0], 1e-13, 500).unwrap();
        assert!((m.log_mass - 2f64.ln()).abs() < 1e-12);
        assert!(m.mean.abs() < 1e-13);
        assert!((m.variance - 2.0).abs() < 1e-11);
    }

    #[test]
    fn budget_exhaustion_is_an_accuracy_error() {
        let r = integrate(|x: f64| [x.abs().sqrt()], &[-1.0, 1.0], 1e-15, 4);
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }
}
