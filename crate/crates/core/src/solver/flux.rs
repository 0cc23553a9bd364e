//! Kinetic flux-vector splitting on the EQMOM reconstruction.

use crate::error::Result;
use crate::kernel::KernelContext;
use crate::moments::{delta_all, equilibrium_moments, MomentVector, NodeSet};
use crate::special::binomial_row;

/// Upper half-moments `int_0^inf xi^k K((xi - u)/sigma)/sigma dxi`, `k = 0..=max`.
pub fn node_half_moments(u: f64, sigma: f64, max: usize, ctx: &KernelContext) -> Result<Vec<f64>> {
    let h = ctx.half_moments(max, -u / sigma)?;
    Ok((0..=max)
        .map(|k| {
            let row = binomial_row(k);
            let mut s = 0.0;
            let mut sp = 1.0;
            for i in 0..=k {
                s += row[i] * u.powi((k - i) as i32) * sp * h[i];
                sp *= sigma;
            }
            s
        })
        .collect())
}

/// Split flux contributions of one cell: `plus` travels right (`xi > 0`), `minus` left.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFlux {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

/// Flux parts `sum_i w_i hm^{+/-}_{j+1}(u_i, sigma)` for `j = 0..=2n`.
pub fn split_flux(w: &NodeSet, ctx: &KernelContext) -> Result<SplitFlux> {
    let dim = 2 * w.n() + 1;
    let m = &ctx.moments().values;
    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    for (&wi, &ui) in w.w.iter().zip(&w.u) {
        let hp = node_half_moments(ui, w.sigma, dim, ctx)?;
        let full = delta_all(ui, w.sigma, dim, m);
        for j in 0..dim {
            plus[j] += wi * hp[j + 1];
            minus[j] += wi * (full[j + 1] - hp[j + 1]);
        }
    }
    Ok(SplitFlux { plus, minus })
}

/// `F_{j} = sum_i w^L_i hm^+_{j+1}(u^L_i, sigma_L) + sum_i w^R_i hm^-_{j+1}(u^R_i, sigma_R)`.
pub fn interface_flux(left: &NodeSet, right: &NodeSet, ctx: &KernelContext) -> Result<Vec<f64>> {
    let l = split_flux(left, ctx)?;
    let r = split_flux(right, ctx)?;
    Ok(l.plus.iter().zip(&r.minus).map(|(a, b)| a + b).collect())
}

/// Exact BGK relaxation over `dt`; `tau = 0` projects and `tau = inf` is the identity.
pub fn relax(m: &MomentVector, tau: f64, dt: f64) -> Result<MomentVector> {
    if tau.is_infinite() {
        return Ok(m.clone());
    }
    let (rho, u, theta) = m.primitives()?;
    let eq = equilibrium_moments(rho, u, theta, m.len() - 1)?;
    if tau == 0.0 {
        let mut v = eq;
        v[..3].copy_from_slice(&m.values[..3]);
        return Ok(MomentVector::new(v));
    }
    let e = (-dt / tau).exp();
    let mut v: Vec<f64> = m.values.iter().zip(&eq).map(|(a, b)| e * a + (1.0 - e) * b).collect();
    v[..3].copy_from_slice(&m.values[..3]);
    Ok(MomentVector::new(v))
}
