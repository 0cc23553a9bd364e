//! Small special-function helpers shared by the kernels and the solver.

use statrs::function::erf::erfc;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Row `n` of Pascal's triangle.
pub fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n + 1 - k) as f64 / k as f64;
    }
    row
}

/// Standard normal moments `E[Z^j]`: 1, 0, 1, 0, 3, 0, 15, ...
pub fn standard_normal_moment(j: usize) -> f64 {
    if j % 2 == 1 {
        0.0
    } else {
        (1..j).step_by(2).fold(1.0, |acc, k| acc * k as f64)
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Upper half-moments of the standard normal, `G_k(a) = int_a^inf z^k phi(z) dz`
/// for `k = 0..=max_order`, by the recursion `G_k = a^{k-1} phi(a) + (k-1) G_{k-2}`.
pub fn std_normal_upper_moments(a: f64, max_order: usize) -> Vec<f64> {
    let mut g = vec![0.0; max_order + 1];
    if a == f64::INFINITY {
        return g;
    }
    if a == f64::NEG_INFINITY {
        for (k, v) in g.iter_mut().enumerate() {
            *v = standard_normal_moment(k);
        }
        return g;
    }
    let phi = std_normal_pdf(a);
    g[0] = 0.5 * erfc(a / std::f64::consts::SQRT_2);
    if max_order >= 1 {
        g[1] = phi;
    }
    let mut apow = 1.0; // a^{k-1}
    for k in 2..=max_order {
        apow *= a;
        g[k] = apow * phi + (k - 1) as f64 * g[k - 2];
    }
    g
}

/// Upper half-moments `int_c^inf xi^j N(xi; mean, var) dxi`, `j = 0..=max_order`.
pub fn normal_upper_moments(c: f64, mean: f64, var: f64, max_order: usize) -> Vec<f64> {
    let sd = var.sqrt();
    let z = (c - mean) / sd;
    let g = std_normal_upper_moments(z, max_order);
    (0..=max_order)
        .map(|j| {
            let row = binomial_row(j);
            (0..=j).map(|k| row[k] * mean.powi((j - k) as i32) * sd.powi(k as i32) * g[k]).sum()
        })
        .collect()
}

/// Upper incomplete gamma for integer order: `int_a^inf x^n e^{-x} dx`, `a >= 0`.
pub fn upper_gamma_int(n: usize, a: f64) -> f64 {
    if a <= 0.0 {
        return factorial(n);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..=n {
        term *= a / i as f64;
        sum += term;
    }
    factorial(n) * (-a).exp() * sum
}
