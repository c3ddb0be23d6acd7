//! Line spectral frequencies.
//!
//! For `A(z)` of order `P` the sum and difference polynomials
//! `P(z) = A(z) + z^-(P+1) A(1/z)` and `Q(z) = A(z) - z^-(P+1) A(1/z)` have
//! all their roots on the unit circle. After removing the trivial roots at
//! `z = +-1` both are palindromic and their root angles in `(0, pi)` interlace,
//! starting with a root of `P`. The interlacing holds exactly when `A(z)` is
//! minimum phase.

use std::f64::consts::PI;

use super::{LpcModel, VocoderError};

const INITIAL_GRID: usize = 512;
const MAX_GRID: usize = 1 << 17;

/// Palindromic factors of the sum and difference polynomials with the
/// trivial roots divided out.
fn symmetric_factors(a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = a.len();
    let mut c = vec![0.0; p + 2];
    c[0] = 1.0;
    for (k, ak) in a.iter().enumerate() {
        c[k + 1] = -ak;
    }
    let sum: Vec<f64> = (0..=p + 1).map(|k| c[k] + c[p + 1 - k]).collect();
    let diff: Vec<f64> = (0..=p + 1).map(|k| c[k] - c[p + 1 - k]).collect();
    if p.is_multiple_of(2) {
        // P(z) / (1 + 1/z), Q(z) / (1 - 1/z)
        let mut ps = vec![0.0; p + 1];
        let mut qs = vec![0.0; p + 1];
        for k in 0..=p {
            ps[k] = sum[k] - if k > 0 { ps[k - 1] } else { 0.0 };
            qs[k] = diff[k] + if k > 0 { qs[k - 1] } else { 0.0 };
        }
        (ps, qs)
    } else {
        // Q(z) / (1 - 1/z^2); P(z) keeps its even degree
        let mut qs = vec![0.0; p];
        for k in 0..p {
            qs[k] = diff[k] + if k > 1 { qs[k - 2] } else { 0.0 };
        }
        (sum, qs)
    }
}

/// Evaluates a palindromic polynomial of degree `2m` on the unit circle,
/// with the linear-phase term removed: a real cosine series.
fn cosine_series(g: &[f64], omega: f64) -> f64 {
    let m = (g.len() - 1) / 2;
    g[m] + 2.0 * (1..=m).map(|k| g[m - k] * (k as f64 * omega).cos()).sum::<f64>()
}

fn bisect(g: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = cosine_series(g, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = cosine_series(g, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots in `(0, pi)` of a palindromic polynomial, found by a sign-change scan
/// that is refined until `expected` roots are bracketed.
fn unit_circle_roots(g: &[f64], expected: usize) -> Option<Vec<f64>> {
    if expected == 0 {
        return Some(Vec::new());
    }
    let mut n = INITIAL_GRID;
    while n <= MAX_GRID {
        let mut roots = Vec::with_capacity(expected);
        let mut prev_w = 0.0;
        let mut prev_f = cosine_series(g, 0.0);
        for i in 1..=n {
            let w = PI * i as f64 / n as f64;
            let f = cosine_series(g, w);
            if f == 0.0 && i < n {
                roots.push(w);
            } else if prev_f != 0.0 && (f < 0.0) != (prev_f < 0.0) {
                roots.push(bisect(g, prev_w, w));
            }
            prev_w = w;
            prev_f = f;
        }
        if roots.len() == expected {
            return Some(roots);
        }
        n *= 2;
    }
    None
}

/// Converts a minimum-phase predictor to line spectral frequencies in `(0, pi)`.
pub fn lpc_to_lsf(model: &LpcModel) -> Result<Vec<f64>, VocoderError> {
    let p = model.order();
    if p == 0 {
        return Ok(Vec::new());
    }
    let (ps, qs) = symmetric_factors(&model.coefficients);
    let n_p = p.div_ceil(2);
    let n_q = p / 2;
    let unstable = || VocoderError::Unstable(format!("could not bracket {p} line spectral frequencies"));
    let proots = unit_circle_roots(&ps, n_p).ok_or_else(unstable)?;
    let qroots = unit_circle_roots(&qs, n_q).ok_or_else(unstable)?;
    let mut lsf = Vec::with_capacity(p);
    for i in 0..n_p {
        lsf.push(proots[i]);
        if i < n_q {
            lsf.push(qroots[i]);
        }
    }
    if !is_valid_lsf(&lsf) {
        return Err(VocoderError::Unstable("sum and difference roots do not interlace".into()));
    }
    Ok(lsf)
}

/// True when the values are strictly increasing inside `(0, pi)`.
pub fn is_valid_lsf(lsf: &[f64]) -> bool {
    lsf.iter().all(|w| *w > 0.0 && *w < PI) && lsf.windows(2).all(|w| w[0] < w[1])
}

fn multiply(poly: &[f64], factor: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + factor.len() - 1];
    for (i, a) in poly.iter().enumerate() {
        for (j, b) in factor.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Rebuilds predictor coefficients from line spectral frequencies. The gain of
/// the returned model is 1.
pub fn lsf_to_lpc(lsf: &[f64]) -> Result<LpcModel, VocoderError> {
    if !is_valid_lsf(lsf) {
        return Err(VocoderError::InvalidLsf);
    }
    let p = lsf.len();
    let mut sum = vec![1.0];
    let mut diff = vec![1.0];
    for (i, w) in lsf.iter().enumerate() {
        let quad = [1.0, -2.0 * w.cos(), 1.0];
        if i % 2 == 0 {
            sum = multiply(&sum, &quad);
        } else {
            diff = multiply(&diff, &quad);
        }
    }
    if p.is_multiple_of(2) {
        sum = multiply(&sum, &[1.0, 1.0]);
        diff = multiply(&diff, &[1.0, -1.0]);
    } else {
        diff = multiply(&diff, &[1.0, 0.0, -1.0]);
    }
    let coefficients = (1..=p).map(|k| -0.5 * (sum[k] + diff[k])).collect();
    Ok(LpcModel {
        coefficients,
        gain: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocoder::reflection_to_lpc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(a: Vec<f64>) -> LpcModel {
        LpcModel { coefficients: a, gain: 1.0 }
    }

    #[test]
    fn flat_filter_gives_uniform_grid() {
        for p in [1usize, 2, 5, 10, 16] {
            let lsf = lpc_to_lsf(&model(vec![0.0; p])).unwrap();
            for (k, w) in lsf.iter().enumerate() {
                assert!((w - (k + 1) as f64 * PI / (p + 1) as f64).abs() < 1e-12, "p={p}");
            }
            let back = lsf_to_lpc(&lsf).unwrap();
            assert!(back.coefficients.iter().all(|a| a.abs() < 1e-12));
        }
    }

    #[test]
    fn order_two_matches_quadratic_roots() {
        // poles at radius 0.9, angle 0.7
        let (r, th) = (0.9f64, 0.7f64);
        let a = vec![2.0 * r * th.cos(), -r * r];
        let lsf = lpc_to_lsf(&model(a.clone())).unwrap();
        // P(z)/(1+1/z) = 1 + (c1 + c2 - 1)/z + 1/z^2 -> cos w = -(c1 + c2 - 1)/2
        let (c1, c2) = (-a[0], -a[1]);
        let wp = (-(c1 + c2 - 1.0) / 2.0).acos();
        // Q(z)/(1-1/z) = 1 + (c1 - c2 + 1)/z + 1/z^2
        let wq = (-(c1 - c2 + 1.0) / 2.0).acos();
        assert!((lsf[0] - wp).abs() < 1e-12);
        assert!((lsf[1] - wq).abs() < 1e-12);
    }

    #[test]
    fn round_trip_random_stable_filters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let p = rng.gen_range(4..=16);
            let k: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.95..0.95)).collect();
            let a = reflection_to_lpc(&k);
            let lsf = lpc_to_lsf(&model(a.clone())).unwrap();
            assert!(is_valid_lsf(&lsf));
            let back = lsf_to_lpc(&lsf).unwrap();
            for (x, y) in a.iter().zip(&back.coefficients) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn unstable_filter_is_rejected() {
        // a pole outside the unit circle
        assert!(lpc_to_lsf(&model(vec![2.5, -1.5625])).is_err());
    }

    #[test]
    fn non_monotone_lsf_rejected() {
        assert_eq!(lsf_to_lpc(&[0.5, 0.4]), Err(VocoderError::InvalidLsf));
        assert_eq!(lsf_to_lpc(&[0.0, 0.4]), Err(VocoderError::InvalidLsf));
        assert_eq!(lsf_to_lpc(&[0.1, PI]), Err(VocoderError::InvalidLsf));
    }

    #[test]
    fn closer_pair_sharpens_the_peak() {
        let base = [0.3, 0.6, 0.9, 1.2, 1.5, 1.8, 2.1, 2.4, 2.7, 2.9];
        let mut tight = base;
        tight[2] = 0.88;
        tight[3] = 0.92;
        let mut loose = base;
        loose[2] = 0.80;
        loose[3] = 1.00;
        // strongest response of |1/A| on a grid around the pair
        let peak = |lsf: &[f64]| {
            let m = lsf_to_lpc(lsf).unwrap();
            (0..20000)
                .map(|i| 0.7 + 0.4 * i as f64 / 20000.0)
                .map(|w| (w, 1.0 / m.inverse_magnitude(w)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
        };
        let (w_tight, peak_tight) = peak(&tight);
        let (_, peak_loose) = peak(&loose);
        assert!(w_tight > 0.88 && w_tight < 0.92, "peak at {w_tight}");
        assert!(peak_tight > 2.0 * peak_loose);
    }
}
