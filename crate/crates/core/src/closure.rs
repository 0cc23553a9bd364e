//! Closure coefficients `a_j = dM_{2n+1}/dM_j`, the characteristic polynomial of the
//! closed system and strict-hyperbolicity checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{EqmomError, Result};
use crate::kernel::KernelContext;
use crate::moments::{d_delta_dsigma, delta_all, NodeSet};
use crate::poly::Poly;

/// Default imaginary-part tolerance relative to the spectral radius.
pub const TOL_IM: f64 = 1e-8;
/// Default minimal eigenvalue gap relative to the spectral radius.
pub const TOL_GAP: f64 = 1e-9;

/// `dM/dW` (rows `j = 0..2n`, columns `w_1, u_1, ..., w_n, u_n, sigma`) and the row
/// `dM_{2n+1}/dW`.
pub fn jacobian_forward(w: &NodeSet, m: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = w.n();
    let dim = 2 * n + 1;
    let mut jac = DMatrix::<f64>::zeros(dim + 1, dim);
    for i in 0..n {
        let d = delta_all(w.u[i], w.sigma, dim, m);
        for j in 0..=dim {
            jac[(j, 2 * i)] = d[j];
            jac[(j, 2 * i + 1)] = if j == 0 { 0.0 } else { w.w[i] * j as f64 * d[j - 1] };
            jac[(j, dim - 1)] += w.w[i] * d_delta_dsigma(w.u[i], w.sigma, j, m);
        }
    }
    let last = jac.row(dim).transpose();
    (jac.rows(0, dim).into_owned(), last)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureCoeffs {
    pub a: Vec<f64>,
}

/// Solves `a^T dM/dW = dM_{2n+1}/dW` for the closure gradient.
pub fn closure_gradient(w: &NodeSet, m: &[f64]) -> Result<ClosureCoeffs> {
    if !w.in_omega() {
        return Err(EqmomError::SingularJacobian);
    }
    let (jac, rhs) = jacobian_forward(w, m);
    let jt = jac.transpose();
    let a = jt.clone().lu().solve(&rhs).ok_or(EqmomError::SingularJacobian)?;
    let res = (&jt * &a - &rhs).amax();
    let scale = rhs.amax().max(jt.amax() * a.amax());
    if !a.iter().all(|v| v.is_finite()) || res > 1e-9 * scale {
        return Err(EqmomError::SingularJacobian);
    }
    Ok(ClosureCoeffs { a: a.iter().copied().collect() })
}

/// `u~ = a_{2n} - 2 sum_i u_i`.
pub fn u_tilde(w: &NodeSet, a: &ClosureCoeffs) -> f64 {
    a.a[2 * w.n()] - 2.0 * w.u.iter().sum::<f64>()
}

/// Closed form of `u~` for two nodes and an even kernel with fourth moment `m4`.
pub fn u_tilde_2node_even(w: &NodeSet, m4: f64) -> f64 {
    let (w1, w2, u1, u2, s) = (w.w[0], w.w[1], w.u[0], w.u[1], w.sigma);
    let mean = (w1 * u1 + w2 * u2) / (w1 + w2);
    let du = u1 - u2;
    let denom = (w1 + w2) * (du * du + 2.0 * (m4 - 3.0) * s * s);
    if du == 0.0 || denom == 0.0 {
        return mean;
    }
    mean + 4.0 * (m4 - 3.0) * s * s * (w1 - w2) * du / denom
}

/// `det dM/dW` for two nodes in the `(w_1, u_1, w_2, u_2, sigma)` layout:
/// `2 w_1 w_2 sigma^3 d^4 [w_1 q(d/sigma) + w_2 q(-d/sigma)]`, `d = u_1 - u_2`,
/// `q(x) = x^2 + 3 m3 x + 2 (m4 - 3)`.
pub fn jacobian_determinant_2node(w: &NodeSet, m3: f64, m4: f64) -> f64 {
    let q = |x: f64| x * x + 3.0 * m3 * x + 2.0 * (m4 - 3.0);
    let (w1, w2, d, s) = (w.w[0], w.w[1], w.u[0] - w.u[1], w.sigma);
    2.0 * w1 * w2 * s.powi(3) * d.powi(4) * (w1 * q(d / s) + w2 * q(-d / s))
}

/// `g(u; W) = prod (u - u_i)^2 (u - u~)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GPoly {
    pub u_nodes: Vec<f64>,
    pub u_tilde: f64,
    pub poly: Poly,
}

impl GPoly {
    pub fn new(u_nodes: &[f64], u_tilde: f64) -> Self {
        let mut roots = Vec::with_capacity(2 * u_nodes.len() + 1);
        for &u in u_nodes {
            roots.push(u);
            roots.push(u);
        }
        roots.push(u_tilde);
        Self { u_nodes: u_nodes.to_vec(), u_tilde, poly: Poly::from_roots(&roots) }
    }
}

/// `c(u) = sum_k b_k sigma^k g^{(k)}(u)`.
pub fn char_poly(g: &GPoly, sigma: f64, b: &[f64]) -> Poly {
    let deg = g.poly.degree();
    let mut c = Poly::new(vec![0.0; deg + 1]);
    let mut deriv = g.poly.clone();
    let mut sp = 1.0;
    for bk in b.iter().take(deg + 1) {
        c = c.add(&deriv.scale(bk * sp));
        deriv = deriv.derivative();
        sp *= sigma;
    }
    c
}

/// `u^{2n+1} - sum_j a_j u^j`.
pub fn char_poly_from_a(a: &ClosureCoeffs) -> Poly {
    let mut coeffs: Vec<f64> = a.a.iter().map(|v| -v).collect();
    coeffs.push(1.0);
    Poly::new(coeffs)
}

/// Coefficient matrix of the closed system in companion form (last row `a`).
pub fn coefficient_matrix(a: &ClosureCoeffs) -> DMatrix<f64> {
    let dim = a.a.len();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim - 1 {
        m[(j, j + 1)] = 1.0;
    }
    for (k, v) in a.a.iter().enumerate() {
        m[(dim - 1, k)] = *v;
    }
    m
}

/// How the characteristic polynomial of a state was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharRoute {
    /// g-polynomial with the closed-form `u~` (two nodes, even kernel).
    ClosedForm,
    /// g-polynomial with `u~` from the linear system.
    LinearSystem,
    /// Singular Jacobian: `u~` replaced by the weighted mean of the nodes.
    MeanFallback,
}

/// Characteristic polynomial of the closed system at `w`.
pub fn state_char_poly(w: &NodeSet, ctx: &KernelContext) -> (Poly, CharRoute) {
    let b = &ctx.b().b;
    let (ut, route) = if w.n() == 2 && ctx.is_even() {
        (u_tilde_2node_even(w, ctx.m(4)), CharRoute::ClosedForm)
    } else {
        match closure_gradient(w, &ctx.moments().values) {
            Ok(a) => (u_tilde(w, &a), CharRoute::LinearSystem),
            Err(_) => {
                let mean = w.w.iter().zip(&w.u).map(|(a, b)| a * b).sum::<f64>() / w.total_weight();
                (mean, CharRoute::MeanFallback)
            }
        }
    };
    (char_poly(&GPoly::new(&w.u, ut), w.sigma, b), route)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Real spectra sorted ascending; otherwise in solver order.
    pub eigenvalues: Vec<Complex64>,
    /// Smallest distance between consecutive real parts.
    pub min_gap: f64,
    pub max_imag: f64,
    pub spectral_radius: f64,
    pub real: bool,
}

impl Spectrum {
    pub fn is_strictly_hyperbolic(&self, tol_im: f64, tol_gap: f64) -> bool {
        let scale = self.spectral_radius.max(f64::MIN_POSITIVE);
        self.max_imag <= tol_im * scale && self.min_gap > tol_gap * scale
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

/// Roots of the characteristic polynomial.
pub fn spectrum(c: &Poly) -> Spectrum {
    let mut eig = c.roots();
    let spectral_radius = eig.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let max_imag = eig.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
    let real = max_imag <= TOL_IM * spectral_radius.max(f64::MIN_POSITIVE);
    eig.sort_by(|a, b| a.re.total_cmp(&b.re));
    let min_gap = eig.windows(2).map(|p| p[1].re - p[0].re).fold(f64::INFINITY, f64::min);
    Spectrum { eigenvalues: eig, min_gap, max_imag, spectral_radius, real }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityReport {
    pub char_poly: Poly,
    pub route: CharRoute,
    pub spectrum: Spectrum,
    pub strictly_hyperbolic: bool,
}

/// Spectrum and verdict for a parameter set.
pub fn hyperbolicity(w: &NodeSet, ctx: &KernelContext, tol_im: f64, tol_gap: f64) -> HyperbolicityReport {
    let (c, route) = state_char_poly(w, ctx);
    let spectrum = spectrum(&c);
    let strictly_hyperbolic = spectrum.is_strictly_hyperbolic(tol_im, tol_gap);
    HyperbolicityReport { char_poly: c, route, spectrum, strictly_hyperbolic }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{closure_moment, forward_moments};

    const GAUSS: [f64; 8] = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0];

    #[test]
    fn jacobian_matches_differences() {
        let w = NodeSet::from_flat(&[0.3, -1.0, 0.7, 0.5, 0.8]).unwrap();
        let (jac, last) = jacobian_forward(&w, &GAUSS);
        let base = w.to_flat();
        let h = 1e-3;
        for c in 0..5 {
            let eval = |d: f64| {
                let mut v = base.clone();
                v[c] += d;
                let ws = NodeSet::from_flat(&v).unwrap();
                let mut m = forward_moments(&ws, 4, &GAUSS);
                m.push(closure_moment(&ws, &GAUSS));
                m
            };
            // five-point stencil is exact on these polynomials of degree <= 5 up to h^4 terms
            let (p2, p1, m1, m2) = (eval(2.0 * h), eval(h), eval(-h), eval(-2.0 * h));
            for j in 0..6 {
                let fd = (-p2[j] + 8.0 * p1[j] - 8.0 * m1[j] + m2[j]) / (12.0 * h);
                let an = if j < 5 { jac[(j, c)] } else { last[c] };
                assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "j={j} c={c}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn symmetric_state_parity() {
        let w = NodeSet::from_flat(&[0.5, -0.7, 0.5, 0.7, 0.6]).unwrap();
        let a = closure_gradient(&w, &GAUSS).unwrap();
        assert!(a.a[0].abs() < 1e-12 && a.a[2].abs() < 1e-12 && a.a[4].abs() < 1e-12, "{:?}", a.a);
    }

    #[test]
    fn u_tilde_equal_weights_is_midpoint() {
        let w = NodeSet::from_flat(&[0.5, -0.2, 0.5, 0.9, 0.6]).unwrap();
        assert!((u_tilde_2node_even(&w, 4.2) - 0.35).abs() < 1e-15);
        let w = NodeSet::from_flat(&[0.2, -0.2, 0.8, 0.9, 0.6]).unwrap();
        assert!((u_tilde_2node_even(&w, 3.0) - (0.2 * -0.2 + 0.8 * 0.9)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_symmetric_char_poly() {
        let w = NodeSet::from_flat(&[0.5, 0.0, 0.5, 0.0, 1.0]).unwrap();
        let g = GPoly::new(&w.u, u_tilde_2node_even(&w, 3.0));
        let c = char_poly(&g, 1.0, &[1.0, 0.0, -0.5, 0.0, 0.125, 0.0]);
        let expect = [0.0, 15.0, 0.0, -10.0, 0.0, 1.0];
        for (a, b) in c.coeffs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{:?}", c.coeffs);
        }
        let s = spectrum(&c);
        assert!(s.is_strictly_hyperbolic(TOL_IM, TOL_GAP));
        let r = (5.0 - 10f64.sqrt()).sqrt();
        assert!(s.real_parts().iter().any(|x| (x - r).abs() < 1e-12));
    }

    #[test]
    fn coincident_nodes_are_singular() {
        let w = NodeSet::from_flat(&[0.5, 0.1, 0.5, 0.1, 1.0]).unwrap();
        assert_eq!(closure_gradient(&w, &GAUSS), Err(EqmomError::SingularJacobian));
    }
}
