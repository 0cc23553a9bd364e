//! Moment algebra: the kernel polynomials `Delta_j`, the forward map from node
//! parameters to moments, auxiliary moments, Hankel tests, the sigma-polynomial and
//! Maxwellian equilibrium moments.

use nalgebra::DMatrix;

use crate::error::{EqmomError, Result};
use crate::special::{binomial_row, standard_normal_moment};

/// EQMOM parameters: weights, nodes and the shared width.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub sigma: f64,
}

impl NodeSet {
    pub fn new(w: Vec<f64>, u: Vec<f64>, sigma: f64) -> Self {
        assert_eq!(w.len(), u.len(), "weights and nodes must have equal length");
        Self { w, u, sigma }
    }

    /// From the flat layout `(w_1, u_1, ..., w_n, u_n, sigma)`.
    pub fn from_flat(v: &[f64]) -> Result<Self> {
        if v.len() < 3 || v.len().is_multiple_of(2) {
            return Err(EqmomError::InvalidInput(format!(
                "parameter vector needs 2n+1 entries (w1,u1,...,wn,un,sigma), got {}",
                v.len()
            )));
        }
        let n = (v.len() - 1) / 2;
        let w = (0..n).map(|i| v[2 * i]).collect();
        let u = (0..n).map(|i| v[2 * i + 1]).collect();
        Ok(Self { w, u, sigma: v[2 * n] })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.n() + 1);
        for (w, u) in self.w.iter().zip(&self.u) {
            v.push(*w);
            v.push(*u);
        }
        v.push(self.sigma);
        v
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// Positive weights, strictly increasing nodes, positive width.
    pub fn in_omega(&self) -> bool {
        self.sigma > 0.0 && self.w.iter().all(|&w| w > 0.0) && self.u.windows(2).all(|p| p[0] < p[1])
    }

    /// Like [`NodeSet::in_omega`] but nodes may coincide.
    pub fn in_omega_tot(&self) -> bool {
        self.sigma > 0.0 && self.w.iter().all(|&w| w > 0.0) && self.u.windows(2).all(|p| p[0] <= p[1])
    }

    pub fn total_weight(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Transported moments `M_0..M_{2n}` (or any length).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub values: Vec<f64>,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Node count `n` for a vector of length `2n + 1`.
    pub fn n(&self) -> usize {
        self.values.len().saturating_sub(1) / 2
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rho(&self) -> f64 {
        self.values[0]
    }

    pub fn velocity(&self) -> f64 {
        self.values[1] / self.values[0]
    }

    pub fn temperature(&self) -> f64 {
        let u = self.velocity();
        self.values[2] / self.values[0] - u * u
    }

    /// `(rho, U, theta)`, rejecting `M_0 <= 0` and `theta <= 0`.
    pub fn primitives(&self) -> Result<(f64, f64, f64)> {
        if self.values.len() < 3 {
            return Err(EqmomError::InvalidInput("need at least M_0, M_1, M_2".into()));
        }
        let rho = self.rho();
        if !(rho > 0.0) {
            return Err(EqmomError::NotRealizable(format!("M_0 = {rho} must be positive")));
        }
        let theta = self.temperature();
        if !(theta > 0.0) {
            return Err(EqmomError::NotRealizable(format!("temperature {theta} must be positive")));
        }
        Ok((rho, self.velocity(), theta))
    }
}

/// `Delta_j(u, sigma) = sum_k C(j,k) m_k sigma^k u^{j-k}`.
pub fn delta_j(u: f64, sigma: f64, j: usize, m: &[f64]) -> f64 {
    let row = binomial_row(j);
    let mut s = 0.0;
    let mut sp = 1.0;
    for k in 0..=j {
        s += row[k] * m[k] * sp * u.powi((j - k) as i32);
        sp *= sigma;
    }
    s
}

/// `Delta_0..Delta_max` at one point.
pub fn delta_all(u: f64, sigma: f64, max: usize, m: &[f64]) -> Vec<f64> {
    let mut up = vec![1.0; max + 1];
    let mut sp = vec![1.0; max + 1];
    for k in 1..=max {
        up[k] = up[k - 1] * u;
        sp[k] = sp[k - 1] * sigma;
    }
    let mut out = Vec::with_capacity(max + 1);
    let mut row = vec![1.0];
    for j in 0..=max {
        if j > 0 {
            let mut next = vec![1.0; j + 1];
            for k in 1..j {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
        }
        out.push((0..=j).map(|k| row[k] * m[k] * sp[k] * up[j - k]).sum());
    }
    out
}

/// `d Delta_j / du = j Delta_{j-1}`.
pub fn d_delta_du(u: f64, sigma: f64, j: usize, m: &[f64]) -> f64 {
    if j == 0 {
        0.0
    } else {
        j as f64 * delta_j(u, sigma, j - 1, m)
    }
}

/// `d Delta_j / dsigma = j sum_{k=0}^{j-1} C(j-1,k) m_{k+1} sigma^k u^{j-1-k}`.
pub fn d_delta_dsigma(u: f64, sigma: f64, j: usize, m: &[f64]) -> f64 {
    if j == 0 {
        return 0.0;
    }
    let row = binomial_row(j - 1);
    let mut s = 0.0;
    let mut sp = 1.0;
    for k in 0..j {
        s += row[k] * m[k + 1] * sp * u.powi((j - 1 - k) as i32);
        sp *= sigma;
    }
    j as f64 * s
}

/// `M_j = sum_i w_i Delta_j(u_i, sigma)` for `j = 0..=max`.
pub fn forward_moments(w: &NodeSet, max: usize, m: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; max + 1];
    for (wi, ui) in w.w.iter().zip(&w.u) {
        for (o, d) in out.iter_mut().zip(delta_all(*ui, w.sigma, max, m)) {
            *o += wi * d;
        }
    }
    out
}

/// The forward map: moments `M_0..M_{2n}` of the EQMOM ansatz.
pub fn forward_map(w: &NodeSet, m: &[f64]) -> MomentVector {
    MomentVector::new(forward_moments(w, 2 * w.n(), m))
}

/// The closing moment `M_{2n+1}`.
pub fn closure_moment(w: &NodeSet, m: &[f64]) -> f64 {
    let j = 2 * w.n() + 1;
    w.w.iter().zip(&w.u).map(|(wi, ui)| wi * delta_j(*ui, w.sigma, j, m)).sum()
}

/// Auxiliary moments `M*_j(sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxMoments {
    pub mstar: Vec<f64>,
    pub sigma: f64,
}

/// `M*_j(sigma) = sum_{k=0}^{j} b_k sigma^k j!/(j-k)! M_{j-k}` for every available `j`.
pub fn auxiliary_moments(mom: &[f64], sigma: f64, b: &[f64]) -> AuxMoments {
    let len = mom.len();
    let mut mstar = vec![0.0; len];
    for (j, out) in mstar.iter_mut().enumerate() {
        let mut s = 0.0;
        let mut sp = 1.0;
        let mut fall = 1.0; // j!/(j-k)!
        for k in 0..=j {
            s += b[k] * sp * fall * mom[j - k];
            sp *= sigma;
            fall *= (j - k) as f64;
        }
        *out = s;
    }
    AuxMoments { mstar, sigma }
}

/// Inverse of [`auxiliary_moments`]: `M_j = sum_k C(j,k) m_k sigma^k M*_{j-k}`.
pub fn reconstruct_from_star(aux: &AuxMoments, m: &[f64]) -> MomentVector {
    let len = aux.mstar.len();
    let mut out = vec![0.0; len];
    for (j, o) in out.iter_mut().enumerate() {
        let row = binomial_row(j);
        let mut sp = 1.0;
        for k in 0..=j {
            *o += row[k] * m[k] * sp * aux.mstar[j - k];
            sp *= aux.sigma;
        }
    }
    MomentVector::new(out)
}

/// The `(k+1) x (k+1)` Hankel matrix `H_k = (values_{i+j})`.
pub fn hankel(values: &[f64], k: usize) -> DMatrix<f64> {
    assert!(values.len() > 2 * k, "H_{k} needs {} entries", 2 * k + 1);
    DMatrix::from_fn(k + 1, k + 1, |i, j| values[i + j])
}

/// Outcome of a pivoted-free Cholesky attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdCheck {
    /// Smallest pivot divided by the largest absolute diagonal entry.
    pub min_rel_pivot: f64,
    /// Index of the first pivot at or below the tolerance, if any.
    pub failing_pivot: Option<usize>,
}

/// Cholesky factorization of a symmetric matrix, reporting every pivot relative to
/// the largest diagonal entry.
pub fn pd_check(h: &DMatrix<f64>, tol: f64) -> PdCheck {
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return PdCheck { min_rel_pivot: 0.0, failing_pivot: Some(0) };
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut min_rel = f64::INFINITY;
    let mut failing = None;
    for j in 0..n {
        let mut d = h[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        let rel = d / scale;
        min_rel = min_rel.min(rel);
        if !(rel > tol) {
            failing.get_or_insert(j);
            if d <= 0.0 || !d.is_finite() {
                break;
            }
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    PdCheck { min_rel_pivot: min_rel, failing_pivot: failing }
}

/// Default relative pivot tolerance for positive definiteness.
pub const PD_TOL: f64 = 1e-12;

pub fn is_positive_definite(h: &DMatrix<f64>, tol: f64) -> bool {
    pd_check(h, tol).failing_pivot.is_none()
}

/// `P_n(sigma; M) = det H_n(M*(sigma))`, `n = (len(M) - 1) / 2`.
pub fn sigma_polynomial(mom: &[f64], sigma: f64, b: &[f64]) -> f64 {
    let n = (mom.len() - 1) / 2;
    let aux = auxiliary_moments(&mom[..2 * n + 1], sigma, b);
    hankel(&aux.mstar, n).determinant()
}

/// Central quantities `(rho, U, theta, M3', M4')` used by the two-node cubic.
pub fn central_moments_2node(mom: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    let (rho, u, theta) = MomentVector::new(mom[..3].to_vec()).primitives()?;
    let m3p = mom[3] / rho - 3.0 * u * theta - u * u * u;
    let m4p = mom[4] / rho - 4.0 * u * m3p - 6.0 * u * u * theta - u.powi(4);
    Ok((rho, u, theta, m3p, m4p))
}

/// Coefficients `(c3, c2, c1, c0)` of the two-node sigma-cubic in `s1 = sigma^2 - theta`
/// for an even normalized kernel with fourth moment `m4`.
pub fn sigma_cubic_2node_even(mom: &[f64], m4: f64) -> Result<[f64; 4]> {
    if mom.len() < 5 {
        return Err(EqmomError::InvalidInput("two-node cubic needs M_0..M_4".into()));
    }
    let (_, _, theta, m3p, m4p) = central_moments_2node(mom)?;
    Ok([5.0 - m4, 2.0 * theta * (3.0 - m4), m4p - m4 * theta * theta, m3p * m3p])
}

/// `rho Delta^eq_j(U, sqrt(theta))` for `j = 0..=order`: moments of a Maxwellian.
pub fn equilibrium_moments(rho: f64, u: f64, theta: f64, order: usize) -> Result<Vec<f64>> {
    if !(theta > 0.0) {
        return Err(EqmomError::NotRealizable(format!("temperature {theta} must be positive")));
    }
    let g: Vec<f64> = (0..=order).map(standard_normal_moment).collect();
    Ok(delta_all(u, theta.sqrt(), order, &g).into_iter().map(|d| rho * d).collect())
}
