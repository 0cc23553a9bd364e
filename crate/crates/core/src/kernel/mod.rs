//! Kernel densities, their moment sequences, normalization and the b-coefficients.
//!
//! A kernel is any nonnegative density with finite moments. Families with known
//! closed forms live in [`KernelSpec`]; anything else can implement [`Kernel`]
//! by supplying only `density` and inherit quadrature-backed moments.

mod classify;
mod families;

use std::fmt;
use std::sync::Arc;

pub use classify::{b_poly_check, b_poly_sufficient, classify_two_node, BPolyReport, KernelClassification, Verdict};
pub use families::KernelSpec;

use crate::error::{EqmomError, Result};
use crate::quadrature::{integrate_with_breaks, DEFAULT_REL_TOL};
use crate::special::{binomial_row, factorial};

/// A nonnegative density on the real line with finite moments.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn density(&self, xi: f64) -> f64;

    /// Closed interval outside which the density vanishes (ends may be infinite).
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Interior points where the density is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn is_even(&self) -> bool {
        false
    }

    /// Raw moment `int xi^j K(xi) dxi`.
    fn raw_moment(&self, j: usize) -> Result<f64> {
        quadrature_moment(self, j)
    }

    /// Raw upper half-moment `int_a^inf xi^j K(xi) dxi`.
    fn raw_half_moment(&self, j: usize, a: f64) -> Result<f64> {
        quadrature_half_moment(self, j, a)
    }

    /// Upper half-moments of orders `0..=max_order` at one cut.
    fn raw_half_moments(&self, max_order: usize, a: f64) -> Result<Vec<f64>> {
        (0..=max_order).map(|j| self.raw_half_moment(j, a)).collect()
    }
}

fn moment_breaks<K: Kernel + ?Sized>(k: &K) -> Vec<f64> {
    let mut b = k.breakpoints();
    b.push(0.0);
    b
}

/// Moment by adaptive quadrature of the density (split at 0 and at the kernel kinks).
pub fn quadrature_moment<K: Kernel + ?Sized>(kernel: &K, j: usize) -> Result<f64> {
    let (lo, hi) = kernel.support();
    let v = integrate_with_breaks(|x| x.powi(j as i32) * kernel.density(x), lo, hi, &moment_breaks(kernel), DEFAULT_REL_TOL)
        .map_err(|_| EqmomError::MomentUndefined { order: j })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EqmomError::MomentUndefined { order: j })
    }
}

/// Upper half-moment by adaptive quadrature.
pub fn quadrature_half_moment<K: Kernel + ?Sized>(kernel: &K, j: usize, a: f64) -> Result<f64> {
    let (lo, hi) = kernel.support();
    let lo = lo.max(a);
    if lo >= hi {
        return Ok(0.0);
    }
    let v = integrate_with_breaks(|x| x.powi(j as i32) * kernel.density(x), lo, hi, &moment_breaks(kernel), DEFAULT_REL_TOL)
        .map_err(|_| EqmomError::MomentUndefined { order: j })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EqmomError::MomentUndefined { order: j })
    }
}

/// A kernel given only by its density; all moments come from quadrature.
#[derive(Clone)]
pub struct DensityKernel<F> {
    pub density: F,
    pub support: (f64, f64),
    pub breakpoints: Vec<f64>,
    pub even: bool,
}

impl<F> fmt::Debug for DensityKernel<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityKernel").field("support", &self.support).field("even", &self.even).finish()
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Kernel for DensityKernel<F> {
    fn density(&self, xi: f64) -> f64 {
        (self.density)(xi)
    }
    fn support(&self) -> (f64, f64) {
        self.support
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
    fn is_even(&self) -> bool {
        self.even
    }
}

/// Shift-scale map `K+(xi) = h K(h xi + xi0)` applied during normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    /// Total mass of the original sequence.
    pub mass: f64,
    /// `xi0`, the mean of the unit-mass kernel.
    pub shift: f64,
    /// `h`, the standard deviation of the unit-mass kernel.
    pub scale: f64,
}

/// Moments `m_0..m_J` of a kernel, raw or normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    pub values: Vec<f64>,
    pub normalized: bool,
    /// Set when produced by [`MomentSequence::normalize`].
    pub transform: Option<AffineTransform>,
}

impl MomentSequence {
    pub fn raw(values: Vec<f64>) -> Self {
        Self { values, normalized: false, transform: None }
    }

    /// Highest available order `J`.
    pub fn max_order(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Moments of the shift-scale transformed kernel with `m_0 = 1, m_1 = 0, m_2 = 1`.
    pub fn normalize(&self) -> Result<MomentSequence> {
        if self.values.len() < 3 {
            return Err(EqmomError::InvalidInput("normalization needs moments up to order 2".into()));
        }
        let mass = self.values[0];
        if !(mass > 0.0) {
            return Err(EqmomError::InvalidInput(format!("kernel mass {mass} must be positive")));
        }
        let unit: Vec<f64> = self.values.iter().map(|v| v / mass).collect();
        let shift = unit[1];
        let var = unit[2] - shift * shift;
        if !(var > 1e-14 * unit[2].abs()) {
            return Err(EqmomError::DegenerateVariance);
        }
        let scale = var.sqrt();
        let mut out = Vec::with_capacity(unit.len());
        for k in 0..unit.len() {
            let row = binomial_row(k);
            let central: f64 = (0..=k).map(|i| row[i] * unit[i] * (-shift).powi((k - i) as i32)).sum();
            out.push(central / scale.powi(k as i32));
        }
        out[0] = 1.0;
        out[1] = 0.0;
        out[2] = 1.0;
        Ok(MomentSequence { values: out, normalized: true, transform: Some(AffineTransform { mass, shift, scale }) })
    }
}

/// Raw moments `m~_0..m~_J` of `kernel`.
pub fn raw_moments<K: Kernel + ?Sized>(kernel: &K, max_order: usize) -> Result<MomentSequence> {
    let values = (0..=max_order).map(|j| kernel.raw_moment(j)).collect::<Result<Vec<_>>>()?;
    Ok(MomentSequence::raw(values))
}

/// The sequence `b_0 = 1, b_j = -sum_{k=1}^{j} (m_k / k!) b_{j-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BCoefficients {
    pub b: Vec<f64>,
}

impl BCoefficients {
    pub fn get(&self, j: usize) -> f64 {
        self.b[j]
    }
    pub fn len(&self) -> usize {
        self.b.len()
    }
    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
}

/// Computes `b_0..b_K` from whatever sequence is supplied (normalized or not).
pub fn b_coefficients(moments: &MomentSequence, max_order: usize) -> Result<BCoefficients> {
    if moments.max_order() < max_order {
        return Err(EqmomError::InvalidInput(format!(
            "b-coefficients up to {max_order} need moments up to {max_order}, have {}",
            moments.max_order()
        )));
    }
    let mut b = vec![0.0; max_order + 1];
    b[0] = 1.0;
    for j in 1..=max_order {
        b[j] = -(1..=j).map(|k| moments.values[k] / factorial(k) * b[j - k]).sum::<f64>();
    }
    Ok(BCoefficients { b })
}

/// A normalized kernel together with its moments and b-coefficients: everything the
/// moment algebra, inversion, closure and solver need from a kernel.
#[derive(Debug, Clone)]
pub struct KernelContext {
    kernel: Arc<dyn Kernel>,
    name: String,
    moments: MomentSequence,
    b: BCoefficients,
    transform: AffineTransform,
    even: bool,
}

impl KernelContext {
    /// Builds the context with normalized moments up to `max_order` (at least 2).
    pub fn new(kernel: Arc<dyn Kernel>, name: impl Into<String>, max_order: usize) -> Result<Self> {
        let max_order = max_order.max(2);
        let moments = raw_moments(kernel.as_ref(), max_order)?.normalize()?;
        let transform = moments.transform.expect("normalize records the transform");
        let b = b_coefficients(&moments, max_order)?;
        let even = kernel.is_even();
        Ok(Self { kernel, name: name.into(), moments, b, transform, even })
    }

    /// Context for an `n`-node closure: moments up to `2n + 1`.
    pub fn for_nodes(spec: KernelSpec, n: usize) -> Result<Self> {
        let name = spec.to_string();
        Self::new(Arc::new(spec), name, 2 * n + 1)
    }

    /// Parses a kernel id (see [`KernelSpec`]) and builds an `n`-node context.
    pub fn from_id(id: &str, n: usize) -> Result<Self> {
        Self::for_nodes(id.parse()?, n)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }
    pub fn moments(&self) -> &MomentSequence {
        &self.moments
    }
    pub fn b(&self) -> &BCoefficients {
        &self.b
    }
    pub fn transform(&self) -> AffineTransform {
        self.transform
    }
    pub fn is_even(&self) -> bool {
        self.even
    }
    pub fn max_order(&self) -> usize {
        self.moments.max_order()
    }

    /// Normalized moment `m_k`.
    pub fn m(&self, k: usize) -> f64 {
        self.moments.values[k]
    }

    /// Density of the normalized kernel.
    pub fn density(&self, xi: f64) -> f64 {
        let t = self.transform;
        t.scale * self.kernel.density(t.scale * xi + t.shift) / t.mass
    }

    /// Upper half-moments of the normalized kernel, orders `0..=max_order`, at cut `a`.
    pub fn half_moments(&self, max_order: usize, a: f64) -> Result<Vec<f64>> {
        let t = self.transform;
        let raw = self.kernel.raw_half_moments(max_order, t.scale * a + t.shift)?;
        if t.shift == 0.0 && t.scale == 1.0 && t.mass == 1.0 {
            return Ok(raw);
        }
        Ok((0..=max_order)
            .map(|m| {
                let row = binomial_row(m);
                let s: f64 = (0..=m).map(|i| row[i] * (-t.shift).powi((m - i) as i32) * raw[i]).sum();
                s / (t.mass * t.scale.powi(m as i32))
            })
            .collect())
    }

    /// Upper half-moment `int_a^inf xi^j K+(xi) dxi` of the normalized kernel.
    pub fn half_moment(&self, j: usize, a: f64) -> Result<f64> {
        Ok(self.half_moments(j, a)?[j])
    }
}

/// Upper half-moment of a raw kernel (convenience wrapper over the trait).
pub fn half_moment<K: Kernel + ?Sized>(kernel: &K, j: usize, a: f64) -> Result<f64> {
    kernel.raw_half_moment(j, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_already_normalized_is_identity() {
        let s = MomentSequence::raw(vec![1.0, 0.0, 1.0, 0.0, 3.0]);
        let n = s.normalize().unwrap();
        assert_eq!(n.values, vec![1.0, 0.0, 1.0, 0.0, 3.0]);
        assert!(n.normalized);
    }

    #[test]
    fn normalize_rejects_point_mass() {
        let s = MomentSequence::raw(vec![2.0, 2.0, 2.0, 2.0]);
        assert_eq!(s.normalize(), Err(EqmomError::DegenerateVariance));
    }

    #[test]
    fn normalize_records_transform() {
        // unit-mass shifted gamma: mean 2, variance 2
        let s = MomentSequence::raw(vec![1.0, 2.0, 6.0, 24.0, 120.0]);
        let n = s.normalize().unwrap();
        let t = n.transform.unwrap();
        assert_eq!(t.shift, 2.0);
        assert!((t.scale - 2f64.sqrt()).abs() < 1e-15);
        // third central moment 4 -> skewness 4 / 2^{3/2}
        assert!((n.values[3] - 4.0 / 2f64.powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn b_even_normalized() {
        let m4 = 4.2;
        let s = MomentSequence::raw(vec![1.0, 0.0, 1.0, 0.0, m4, 0.0]);
        let b = b_coefficients(&s, 5).unwrap();
        assert_eq!(b.b[0], 1.0);
        assert_eq!(b.b[1], 0.0);
        assert_eq!(b.b[2], -0.5);
        assert_eq!(b.b[3], 0.0);
        assert!((b.b[4] - (0.25 - m4 / 24.0)).abs() < 1e-16);
        assert_eq!(b.b[5], 0.0);
    }

    #[test]
    fn b_gaussian_fourth() {
        let s = MomentSequence::raw(vec![1.0, 0.0, 1.0, 0.0, 3.0]);
        assert_eq!(b_coefficients(&s, 4).unwrap().b[4], 0.125);
    }

    #[test]
    fn b_shifted_gamma_terminates() {
        let s = MomentSequence::raw((0..=7).map(|j| factorial(j + 1)).collect());
        let b = b_coefficients(&s, 7).unwrap();
        assert_eq!(&b.b[..3], &[1.0, -2.0, 1.0]);
        assert!(b.b[3..].iter().all(|&x| x == 0.0), "{:?}", b.b);
    }

    #[test]
    fn b_needs_enough_moments() {
        let s = MomentSequence::raw(vec![1.0, 0.0, 1.0]);
        assert!(b_coefficients(&s, 4).is_err());
    }
}
