#![allow(dead_code)]

use eqmom::moments::{forward_map, NodeSet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random parameters in Omega: weights in [0.2, 2], width in [0.3, 1.5], nodes at
/// least a quarter apart.
pub fn random_omega(rng: &mut ChaCha8Rng, n: usize) -> NodeSet {
    let sigma = rng.random_range(0.3..1.5);
    let mut u = Vec::with_capacity(n);
    let mut x = rng.random_range(-2.0..0.0);
    for _ in 0..n {
        u.push(x);
        x += rng.random_range(0.25..2.0);
    }
    let w = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    NodeSet::new(w, u, sigma)
}

/// Like [`random_omega`] but nodes coincide with probability 0.2 and may be close.
pub fn random_omega_tot(rng: &mut ChaCha8Rng, n: usize) -> NodeSet {
    let sigma = rng.random_range(0.1..2.0);
    let mut u = Vec::with_capacity(n);
    let mut x = rng.random_range(-3.0..3.0);
    for _ in 0..n {
        u.push(x);
        if rng.random_bool(0.8) {
            x += rng.random_range(0.0..4.0);
        }
    }
    let w = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
    NodeSet::new(w, u, sigma)
}

/// Central finite-difference Jacobian of the forward map in the flat layout.
pub fn fd_jacobian(w: &NodeSet, m: &[f64], h: f64) -> DMatrix<f64> {
    let x = w.to_flat();
    let dim = x.len();
    let mut j = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        let mut p = x.clone();
        let mut q = x.clone();
        p[c] += h;
        q[c] -= h;
        let fp = forward_map(&NodeSet::from_flat(&p).unwrap(), m);
        let fq = forward_map(&NodeSet::from_flat(&q).unwrap(), m);
        for r in 0..dim {
            j[(r, c)] = (fp.values[r] - fq.values[r]) / (2.0 * h);
        }
    }
    j
}

/// `|a - b| / max(|b|, 1)`: relative for large entries, absolute near zero.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max)
}
