//! Adaptive Gauss-Kronrod (7/15) quadrature on finite and infinite intervals.
//!
//! Intervals are bisected in order of largest error estimate until the summed
//! estimate drops below the requested tolerance. Infinite ranges are mapped onto
//! `[0, 1)` with `x = a + t / (1 - t)`; the 15-point rule never samples interval
//! endpoints, so integrable endpoint singularities are tolerated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{EqmomError, Result};

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_INTERVALS: usize = 6000;

/// Default relative tolerance for kernel moment quadrature.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over the finite interval `[a, b]`.
///
/// Converges when the summed error estimate is below
/// `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let first = kronrod(&f, lo, hi);
    if !first.value.is_finite() {
        return Err(EqmomError::Quadrature { error: f64::INFINITY });
    }
    let mut total = first.value;
    let mut err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(EqmomError::Quadrature { error: err });
        }
        let Some(worst) = heap.pop() else { break };
        if worst.error == 0.0 {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(Segment { error: 0.0, ..worst });
            err -= worst.error;
            continue;
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed accumulated update round-off.
    let total: f64 = heap.iter().map(|s| s.value).sum();
    Ok(sign * total)
}

/// Integrates `f` over `[a, b]` where either end may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() {
        return Err(EqmomError::InvalidInput("NaN integration bound".into()));
    }
    if a > b {
        return integrate(f, b, a, rel_tol, abs_tol).map(|v| -v);
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(f, a, b, rel_tol, abs_tol),
        (true, false) => integrate_finite(
            |t| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            },
            0.0,
            1.0,
            rel_tol,
            abs_tol,
        ),
        (false, true) => integrate_finite(
            |t| {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            },
            0.0,
            1.0,
            rel_tol,
            abs_tol,
        ),
        (false, false) => {
            let left = integrate_finite(
                |t| {
                    let s = 1.0 - t;
                    f(-t / s) / (s * s)
                },
                0.0,
                1.0,
                rel_tol,
                abs_tol,
            )?;
            let right = integrate_finite(
                |t| {
                    let s = 1.0 - t;
                    f(t / s) / (s * s)
                },
                0.0,
                1.0,
                rel_tol,
                abs_tol,
            )?;
            Ok(left + right)
        }
    }
}

/// Integrates over `[a, b]`, splitting the range at every breakpoint inside it.
///
/// Used for densities with kinks or integrable singularities at known points.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], rel_tol: f64) -> Result<f64> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let pieces = edges.windows(2).map(|w| integrate(&f, w[0], w[1], rel_tol, 0.0)).collect::<Result<Vec<_>>>()?;
    // Sub-tolerances relative to each piece are tighter than relative to the sum
    // whenever the pieces share a sign, which holds for moment integrands of even order.
    Ok(pieces.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate_finite(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((v - 3.75).abs() < 1e-13);
    }

    #[test]
    fn gaussian_tails() {
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let total = integrate(|x| (-0.5 * x * x).exp() / norm, f64::NEG_INFINITY, f64::INFINITY, 1e-13, 0.0).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        let fourth =
            integrate(|x| x.powi(4) * (-0.5 * x * x).exp() / norm, f64::NEG_INFINITY, f64::INFINITY, 1e-13, 0.0).unwrap();
        assert!((fourth - 3.0).abs() < 1e-11);
    }

    #[test]
    fn endpoint_singularity() {
        // int_0^1 x^{-0.6} dx = 2.5
        let v = integrate_finite(|x| x.powf(-0.6), 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((v - 2.5).abs() < 1e-10, "{v}");
    }

    #[test]
    fn breaks_split_kinks() {
        let v = integrate_with_breaks(|x: f64| (1.0 - x.abs()).max(0.0), -1.0, 1.0, &[0.0], 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_bounds_negate() {
        let v = integrate(|x| x, 1.0, 0.0, 1e-12, 0.0).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }
}
