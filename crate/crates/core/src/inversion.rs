//! Moment inversion: recover `(w_i, u_i, sigma)` from `M_0..M_{2n}`.
//!
//! The width is a positive root of `P_n(sigma) = det H_n(M*(sigma))` at which
//! `H_{n-1}(M*(sigma))` is positive definite; the nodes then follow from the power
//! sums `M*_j(sigma) = sum_i w_i u_i^j`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{EqmomError, Result};
use crate::kernel::KernelContext;
use crate::moments::{
    auxiliary_moments, central_moments_2node, forward_moments, hankel, pd_check, sigma_cubic_2node_even, sigma_polynomial,
    MomentVector, NodeSet,
};
use crate::poly::{real_cubic_roots, Poly};

/// Relative Cholesky pivot separating qualifying roots from degenerate ones.
pub const DEGENERATE_PIVOT: f64 = 1e-10;
/// Residual above which an inversion is reported as inconsistent.
pub const RESIDUAL_BOUND: f64 = 1e-6;
const MERGE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootClass {
    /// `H_{n-1}(M*)` positive definite.
    Qualifying,
    /// Smallest relative pivot within the degenerate band around zero.
    NearDegenerate,
    Rejected,
}

/// One positive root of the sigma-polynomial with its Hankel evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaRoot {
    pub sigma: f64,
    pub min_rel_pivot: f64,
    pub class: RootClass,
}

impl SigmaRoot {
    pub fn pd(&self) -> bool {
        self.class == RootClass::Qualifying
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnosis {
    RealizableInterior,
    RealizableDegenerate,
    NotRealizable,
    Ambiguous,
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diagnosis::RealizableInterior => "realizable-interior",
            Diagnosis::RealizableDegenerate => "realizable-degenerate",
            Diagnosis::NotRealizable => "not-realizable",
            Diagnosis::Ambiguous => "ambiguous",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    pub w: NodeSet,
    pub sigma_roots: Vec<SigmaRoot>,
    /// Nodes coincide (reduced node count).
    pub degenerate: bool,
    /// Largest scaled defect of the forward map of `w` against the input.
    pub residual: f64,
}

impl InversionResult {
    pub fn diagnosis(&self) -> Diagnosis {
        if self.degenerate {
            Diagnosis::RealizableDegenerate
        } else {
            Diagnosis::RealizableInterior
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizabilityReport {
    pub diagnosis: Diagnosis,
    pub sigma_roots: Vec<SigmaRoot>,
    pub result: Option<InversionResult>,
    pub error: Option<EqmomError>,
}

fn validate(mom: &[f64], n: usize) -> Result<(f64, f64, f64)> {
    if mom.len() != 2 * n + 1 {
        return Err(EqmomError::InvalidInput(format!("expected {} moments, got {}", 2 * n + 1, mom.len())));
    }
    if mom.iter().any(|v| !v.is_finite()) {
        return Err(EqmomError::InvalidInput("moments must be finite".into()));
    }
    MomentVector::new(mom.to_vec()).primitives()
}

fn classify_root(mom: &[f64], sigma: f64, b: &[f64], n: usize) -> SigmaRoot {
    let aux = auxiliary_moments(mom, sigma, b);
    let check = pd_check(&hankel(&aux.mstar, n - 1), 0.0);
    let p = check.min_rel_pivot;
    let class = if p >= DEGENERATE_PIVOT {
        RootClass::Qualifying
    } else if p.abs() < DEGENERATE_PIVOT {
        RootClass::NearDegenerate
    } else {
        RootClass::Rejected
    };
    SigmaRoot { sigma, min_rel_pivot: p, class }
}

/// Roots up to `(1 + SMAX_SLACK) sqrt(theta)` are kept (and clamped to `sqrt(theta)`)
/// by both root routes, so a root sitting on the boundary is reported by each.
const SMAX_SLACK: f64 = 1e-6;

/// Positive roots of the two-node even-kernel cubic in `sigma^2 - theta`, mapped to
/// `sigma` in `(0, sqrt(theta)]`.
pub fn cubic_sigma_roots(mom: &[f64], m4: f64) -> Result<Vec<f64>> {
    let (_, _, theta, _, _) = central_moments_2node(mom)?;
    let smax = theta.sqrt();
    let mut c = sigma_cubic_2node_even(mom, m4)?;
    snap_roundoff(mom, m4, &mut c);
    Ok(real_cubic_roots(c[0], c[1], c[2], c[3])
        .into_iter()
        .filter(|&s1| s1 > -theta && s1 <= SMAX_SLACK * (2.0 + SMAX_SLACK) * theta)
        .map(|s1| (theta + s1).max(0.0).sqrt().min(smax))
        .collect())
}

/// Positive roots of the sigma-polynomial in `(0, sqrt(theta)]` (a normalized kernel
/// makes `H_1(M*)` positive definite only for `sigma^2 < theta`).
fn positive_roots(mom: &[f64], ctx: &KernelContext, n: usize, theta: f64) -> Vec<f64> {
    let b = &ctx.b().b;
    let smax = theta.sqrt();
    let mut roots = if n == 2 && ctx.is_even() {
        cubic_sigma_roots(mom, ctx.m(4)).expect("validated")
    } else {
        determinant_sigma_roots(mom, b, n, smax)
    };
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match merged.last() {
            Some(&last) if (r - last).abs() <= MERGE_TOL * smax => {}
            _ => merged.push(r),
        }
    }
    merged
}

/// Zeroes the two lowest cubic coefficients when they are at the rounding level of
/// the central moments they come from, so exact Maxwellian data lands on the
/// degenerate root `sigma^2 = theta` instead of a spurious nearby split.
fn snap_roundoff(mom: &[f64], m4: f64, c: &mut [f64; 4]) {
    let Ok((rho, u, theta, m3p, _)) = central_moments_2node(mom) else { return };
    let eps = 100.0 * f64::EPSILON;
    let au = u.abs();
    let e3 = eps * ((mom[3] / rho).abs() + 3.0 * au * theta + au.powi(3));
    let e4 =
        eps * ((mom[4] / rho).abs() + 4.0 * au * (mom[3] / rho).abs() + 6.0 * u * u * theta + u.powi(4) + m4 * theta * theta);
    if m3p.abs() <= e3 {
        c[3] = 0.0;
    }
    if c[2].abs() <= e4 {
        c[2] = 0.0;
    }
}

/// Real roots in `(0, smax]` of the degree-`n(n+1)` determinant, by Chebyshev
/// interpolation on `[-1.25 smax, 1.25 smax]`, companion roots and Newton polish.
pub fn determinant_sigma_roots(mom: &[f64], b: &[f64], n: usize, smax: f64) -> Vec<f64> {
    let deg = n * (n + 1);
    let npts = deg + 1;
    let half = 1.25 * smax;
    let nodes: Vec<f64> = (0..npts).map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / npts as f64).cos()).collect();
    let vals: Vec<f64> = nodes.iter().map(|&x| sigma_polynomial(mom, half * x, b)).collect();
    // Chebyshev coefficients, then expand into the monomial basis in x.
    let mut cheb = vec![0.0; npts];
    for (j, c) in cheb.iter_mut().enumerate() {
        let s: f64 = nodes.iter().zip(&vals).map(|(&x, &f)| f * (j as f64 * x.acos()).cos()).sum();
        *c = 2.0 * s / npts as f64;
    }
    cheb[0] *= 0.5;
    let mut t_prev = Poly::new(vec![1.0]);
    let mut t_cur = Poly::new(vec![0.0, 1.0]);
    let mut poly = t_prev.scale(cheb[0]);
    if npts > 1 {
        poly = poly.add(&t_cur.scale(cheb[1]));
    }
    for c in cheb.iter().skip(2) {
        let t_next = Poly::new(vec![0.0, 2.0]).mul(&t_cur).add(&t_prev.scale(-1.0));
        poly = poly.add(&t_next.scale(*c));
        t_prev = t_cur;
        t_cur = t_next;
    }
    // Drop numerically zero leading terms.
    let cs = poly.coeff_scale();
    while poly.coeffs.len() > 1 && poly.coeffs.last().is_some_and(|c| c.abs() <= 1e-13 * cs) {
        poly.coeffs.pop();
    }
    let dpoly = poly.derivative();
    let vscale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let xmax = smax / half;
    let mut out = Vec::new();
    for z in poly.roots() {
        if z.im.abs() > 1e-4 || z.re <= 0.0 || z.re > xmax * (1.0 + SMAX_SLACK) {
            continue;
        }
        let mut x = z.re;
        let mut fx = sigma_polynomial(mom, half * x, b);
        for _ in 0..8 {
            let d = dpoly.eval(x);
            if d == 0.0 || fx == 0.0 {
                break;
            }
            let cand = x - fx / d;
            let fc = sigma_polynomial(mom, half * cand, b);
            if fc.abs() < fx.abs() {
                x = cand;
                fx = fc;
            } else {
                break;
            }
        }
        // A complex pair far from the axis would leave a large determinant here.
        if fx.abs() <= 1e-6 * vscale.max(f64::MIN_POSITIVE) && x > 0.0 {
            out.push((half * x).min(smax));
        }
    }
    out
}

/// Candidate sigma-roots with their Hankel classification.
pub fn sigma_roots(mom: &[f64], ctx: &KernelContext) -> Result<Vec<SigmaRoot>> {
    let n = (mom.len().max(1) - 1) / 2;
    let (_, _, theta) = validate(mom, n)?;
    let b = &ctx.b().b;
    Ok(positive_roots(mom, ctx, n, theta).into_iter().map(|s| classify_root(mom, s, b, n)).collect())
}

/// The unique positive sigma-root with `H_{n-1}(M*)` positive definite.
pub fn find_sigma(mom: &[f64], ctx: &KernelContext) -> Result<f64> {
    let roots = sigma_roots(mom, ctx)?;
    let q: Vec<f64> = roots.iter().filter(|r| r.pd()).map(|r| r.sigma).collect();
    match q.len() {
        1 => Ok(q[0]),
        0 => Err(EqmomError::NotRealizable(format!("no qualifying sigma-root among {roots:?}"))),
        _ => Err(EqmomError::Ambiguous { roots: q }),
    }
}

/// Weights and nodes with power sums `M*_0..M*_{2n-1}`.
///
/// Requires `H_{n-1}(M*)` positive definite; otherwise the error names the
/// failing Cholesky pivot.
pub fn nodes_from_star(mstar: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if mstar.len() < 2 * n {
        return Err(EqmomError::InvalidInput(format!("need {} power sums, got {}", 2 * n, mstar.len())));
    }
    let m0 = mstar[0];
    if !(m0 > 0.0) {
        return Err(EqmomError::NotPositiveDefinite { pivot: 0 });
    }
    if n == 1 {
        return Ok((vec![m0], vec![mstar[1] / m0]));
    }
    // Standardize: mean and spread of the discrete measure.
    let mean = mstar[1] / m0;
    let var = mstar[2] / m0 - mean * mean;
    if !(var > 1e-14 * (mstar[2] / m0).abs().max(mean * mean)) {
        return Err(EqmomError::NotPositiveDefinite { pivot: 1 });
    }
    let sd = var.sqrt();
    if n == 2 {
        let c3 = mstar[3] / m0 - 3.0 * mean * var - mean * mean * mean;
        let s = c3 / (var * sd);
        let r = (0.25 * s * s + 1.0).sqrt();
        // x1 < 0 < x2 are the standardized atoms of the unique two-point law.
        let x1 = if s > 0.0 { -1.0 / (0.5 * s + r) } else { 0.5 * s - r };
        let x2 = if s > 0.0 { 0.5 * s + r } else { 1.0 / (r - 0.5 * s) };
        let p1 = x2 / (x2 - x1);
        let p2 = -x1 / (x2 - x1);
        return Ok((vec![m0 * p1, m0 * p2], vec![mean + sd * x1, mean + sd * x2]));
    }
    let z: Vec<f64> = (0..2 * n)
        .map(|j| {
            let row = crate::special::binomial_row(j);
            (0..=j).map(|i| row[i] * (mstar[i] / m0) * (-mean).powi((j - i) as i32)).sum::<f64>() / sd.powi(j as i32)
        })
        .collect();
    let check = pd_check(&hankel(&z, n - 1), 0.0);
    if let Some(p) = check.failing_pivot {
        return Err(EqmomError::NotPositiveDefinite { pivot: p });
    }
    let (alpha, beta) = wheeler(&z, n)?;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = alpha[i];
        if i + 1 < n {
            let off = beta[i + 1].sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w = pairs.iter().map(|p| m0 * p.1).collect();
    let u = pairs.iter().map(|p| mean + sd * p.0).collect();
    Ok((w, u))
}

/// Recurrence coefficients of the monic orthogonal polynomials of a unit-mass
/// sequence `z_0..z_{2n-1}` (Wheeler's algorithm).
fn wheeler(z: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = 2 * n;
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut prev = vec![0.0; len];
    let mut cur = z[..len].to_vec();
    alpha[0] = cur[1] / cur[0];
    beta[0] = cur[0];
    for k in 1..n {
        let mut next = vec![0.0; len];
        for l in k..len - k {
            next[l] = cur[l + 1] - alpha[k - 1] * cur[l] - beta[k - 1] * prev[l];
        }
        if !(next[k] > 0.0) {
            return Err(EqmomError::NotPositiveDefinite { pivot: k });
        }
        alpha[k] = next[k + 1] / next[k] - cur[k] / cur[k - 1];
        beta[k] = next[k] / cur[k - 1];
        prev = cur;
        cur = next;
    }
    Ok((alpha, beta))
}

/// Scaled defect `max_j |M_j(W) - M_j| / (M_0 (M_2/M_0)^{j/2})`.
pub fn residual(w: &NodeSet, mom: &[f64], ctx: &KernelContext) -> f64 {
    let fwd = forward_moments(w, mom.len() - 1, &ctx.moments().values);
    let m0 = mom[0].abs();
    let spread = (mom[2] / mom[0]).abs().sqrt();
    fwd.iter()
        .zip(mom)
        .enumerate()
        .map(|(j, (a, b))| (a - b).abs() / (m0 * spread.powi(j as i32)).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn interior_at(mom: &[f64], ctx: &KernelContext, n: usize, sigma: f64) -> Result<NodeSet> {
    let aux = auxiliary_moments(mom, sigma, &ctx.b().b);
    let (w, u) = nodes_from_star(&aux.mstar, n)?;
    Ok(NodeSet::new(w, u, sigma))
}

/// Inverts `M_0..M_{2n}` (`n` taken from the length).
pub fn invert(m: &MomentVector, ctx: &KernelContext) -> Result<InversionResult> {
    let mom = &m.values;
    let n = m.n();
    if n == 0 || mom.len() != 2 * n + 1 {
        return Err(EqmomError::InvalidInput(format!("moment vector needs odd length >= 3, got {}", mom.len())));
    }
    if ctx.max_order() < 2 * n + 1 {
        return Err(EqmomError::InvalidInput(format!("kernel context holds moments to {}, need {}", ctx.max_order(), 2 * n + 1)));
    }
    let (rho, u_mean, theta) = validate(mom, n)?;
    let b = &ctx.b().b;
    let roots: Vec<SigmaRoot> = positive_roots(mom, ctx, n, theta).into_iter().map(|s| classify_root(mom, s, b, n)).collect();
    let qualifying: Vec<f64> = roots.iter().filter(|r| r.pd()).map(|r| r.sigma).collect();
    let finish = |w: NodeSet, degenerate: bool| -> Result<InversionResult> {
        let res = residual(&w, mom, ctx);
        if !(res <= RESIDUAL_BOUND) {
            return Err(EqmomError::Inconsistent { residual: res });
        }
        Ok(InversionResult { w, sigma_roots: roots.clone(), degenerate, residual: res })
    };
    match qualifying.len() {
        1 => return finish(interior_at(mom, ctx, n, qualifying[0])?, false),
        0 => {}
        _ => return Err(EqmomError::Ambiguous { roots: qualifying }),
    }
    let near: Vec<&SigmaRoot> = roots.iter().filter(|r| r.class == RootClass::NearDegenerate).collect();
    if near.is_empty() {
        return Err(EqmomError::NotRealizable(format!(
            "no positive sigma-root with positive definite H_{}(M*); roots examined: {:?}",
            n - 1,
            roots.iter().map(|r| (r.sigma, r.min_rel_pivot)).collect::<Vec<_>>()
        )));
    }
    // Barely positive pivots still admit distinct nodes.
    for r in near.iter().filter(|r| r.min_rel_pivot > 0.0) {
        if let Ok(w) = interior_at(mom, ctx, n, r.sigma) {
            if w.in_omega() && residual(&w, mom, ctx) <= RESIDUAL_BOUND {
                return finish(w, false);
            }
        }
    }
    if n > 2 {
        return Err(EqmomError::DegenerateUnsupported { n });
    }
    // One node of full mass: the Maxwellian-like state u_1 = u_2 = U, sigma^2 = theta.
    let sigma = theta.sqrt();
    let w = if n == 1 {
        NodeSet::new(vec![rho], vec![u_mean], sigma)
    } else {
        NodeSet::new(vec![0.5 * rho, 0.5 * rho], vec![u_mean, u_mean], sigma)
    };
    finish(w, n == 2)
}

/// Realizability diagnosis with the sigma-root evidence attached.
pub fn realizable(m: &MomentVector, ctx: &KernelContext) -> RealizabilityReport {
    let sigma_roots = sigma_roots(&m.values, ctx).unwrap_or_default();
    match invert(m, ctx) {
        Ok(r) => RealizabilityReport { diagnosis: r.diagnosis(), sigma_roots, result: Some(r), error: None },
        Err(e) => {
            let diagnosis =
                if matches!(e, EqmomError::Ambiguous { .. }) { Diagnosis::Ambiguous } else { Diagnosis::NotRealizable };
            RealizabilityReport { diagnosis, sigma_roots, result: None, error: Some(e) }
        }
    }
}
