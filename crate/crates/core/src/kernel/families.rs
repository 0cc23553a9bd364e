//! Kernel families with closed-form moments and half-moments.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use statrs::function::beta::{beta_reg, ln_beta};

use super::Kernel;
use crate::error::{EqmomError, Result};
use crate::special::{factorial, standard_normal_moment, std_normal_pdf, std_normal_upper_moments, upper_gamma_int};

/// Default exponents of the uneven example kernel.
pub const UNEVEN_ALPHA: f64 = 0.6060;
pub const UNEVEN_BETA: f64 = 0.5340;

/// Named kernel families.
///
/// String ids: `gaussian`, `ppoly:<j>`, `kappa:<k>`, `absexp:<j>`, `cosexp`,
/// `uneven` or `uneven:<alpha>,<beta>`, `shgamma`, `gmix:<m4>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Standard normal density.
    Gaussian,
    /// `(j+1)/2 (1-|xi|)^j` on `[-1, 1]`.
    PiecewisePoly { j: u32 },
    /// Kappa distribution `C (1 + xi^2/(kappa - 3/2))^{-kappa}`, `kappa > 3`.
    Kappa { kappa: f64 },
    /// `|xi|^j e^{-|xi|} / (2 j!)`, `j >= 1`.
    AbsExp { j: u32 },
    /// `(1 + cos xi) e^{-|xi|} / 3`.
    CosineExp,
    /// `((1-xi) xi^{-alpha} 1_{0<xi<=1} + (1+xi)|xi|^{-beta} 1_{-1<=xi<0}) / c`.
    Uneven { alpha: f64, beta: f64 },
    /// `xi e^{-xi}` on `xi > 0`.
    ShiftedGamma,
    /// Even scale mixture `p N(0, 1/2) + (1-p) N(0, v)` with unit variance and
    /// fourth moment `m4 >= 3`; a synthetic family covering every kurtosis.
    GaussianMixture { m4: f64 },
}

impl KernelSpec {
    pub fn uneven_default() -> Self {
        KernelSpec::Uneven { alpha: UNEVEN_ALPHA, beta: UNEVEN_BETA }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Kappa { kappa } if !(kappa > 3.0) => {
                Err(EqmomError::InvalidKernel(format!("kappa must exceed 3, got {kappa}")))
            }
            KernelSpec::AbsExp { j } if j < 1 => Err(EqmomError::InvalidKernel("absexp needs j >= 1".into())),
            KernelSpec::Uneven { alpha, beta } if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) => {
                Err(EqmomError::InvalidKernel(format!("uneven exponents must lie in (0,1): {alpha}, {beta}")))
            }
            KernelSpec::GaussianMixture { m4 } if !(m4 >= 3.0 && m4.is_finite()) => {
                Err(EqmomError::InvalidKernel(format!("gmix needs m4 >= 3, got {m4}")))
            }
            _ => Ok(()),
        }
    }

    /// Normalizing constant `c` of the uneven kernel.
    pub fn uneven_constant(alpha: f64, beta: f64) -> f64 {
        1.0 / ((1.0 - alpha) * (2.0 - alpha)) + 1.0 / ((1.0 - beta) * (2.0 - beta))
    }

    /// Mixture weight and the two component variances of `gmix`.
    fn mixture_params(m4: f64) -> (f64, f64, f64) {
        let p = (4.0 * m4 - 12.0) / (4.0 * m4 - 9.0);
        let v1 = 0.5;
        let v2 = if p < 1.0 { (1.0 - 0.5 * p) / (1.0 - p) } else { f64::INFINITY };
        (p, v1, v2)
    }

    fn kappa_scale(kappa: f64) -> f64 {
        kappa - 1.5
    }

    /// `int_0^inf xi^k (1 + xi^2/s)^{-kappa} dxi / int_R (1 + xi^2/s)^{-kappa} dxi`.
    fn kappa_half_line(kappa: f64, k: usize) -> f64 {
        let s = Self::kappa_scale(kappa);
        let h = (k as f64 + 1.0) / 2.0;
        0.5 * s.powf(k as f64 / 2.0) * (ln_beta(h, kappa - h) - ln_beta(0.5, kappa - 0.5)).exp()
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::Gaussian => write!(f, "gaussian"),
            KernelSpec::PiecewisePoly { j } => write!(f, "ppoly:{j}"),
            KernelSpec::Kappa { kappa } => write!(f, "kappa:{kappa}"),
            KernelSpec::AbsExp { j } => write!(f, "absexp:{j}"),
            KernelSpec::CosineExp => write!(f, "cosexp"),
            KernelSpec::Uneven { alpha, beta } => {
                if alpha == UNEVEN_ALPHA && beta == UNEVEN_BETA {
                    write!(f, "uneven")
                } else {
                    write!(f, "uneven:{alpha},{beta}")
                }
            }
            KernelSpec::ShiftedGamma => write!(f, "shgamma"),
            KernelSpec::GaussianMixture { m4 } => write!(f, "gmix:{m4}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = EqmomError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || EqmomError::UnknownKernel(s.to_string());
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let float = |a: Option<&str>| -> Result<f64> { a.ok_or_else(unknown)?.trim().parse::<f64>().map_err(|_| unknown()) };
        let int = |a: Option<&str>| -> Result<u32> { a.ok_or_else(unknown)?.trim().parse::<u32>().map_err(|_| unknown()) };
        let spec = match (name.to_ascii_lowercase().as_str(), arg) {
            ("gaussian" | "gauss", None) => KernelSpec::Gaussian,
            ("ppoly", a) => KernelSpec::PiecewisePoly { j: int(a)? },
            ("kappa", a) => KernelSpec::Kappa { kappa: float(a)? },
            ("absexp", a) => KernelSpec::AbsExp { j: int(a)? },
            ("cosexp", None) => KernelSpec::CosineExp,
            ("uneven", None) => KernelSpec::uneven_default(),
            ("uneven", Some(a)) => {
                let (x, y) = a.split_once(',').ok_or_else(unknown)?;
                KernelSpec::Uneven { alpha: float(Some(x))?, beta: float(Some(y))? }
            }
            ("shgamma", None) => KernelSpec::ShiftedGamma,
            ("gmix", a) => KernelSpec::GaussianMixture { m4: float(a)? },
            _ => return Err(unknown()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn reflect_even<F: Fn(f64) -> f64>(upper_nonneg: F, full: f64, j: usize, a: f64) -> f64 {
    if a >= 0.0 {
        upper_nonneg(a)
    } else {
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        full - sign * upper_nonneg(-a)
    }
}

/// `int_a^1 xi^k (1-xi)^j dxi` for `a in [0, 1]`, by repeated integration by parts
/// (every term is nonnegative, so there is no cancellation).
fn ppoly_tail(k: usize, j: u32, a: f64) -> f64 {
    if a >= 1.0 {
        return 0.0;
    }
    let om = 1.0 - a;
    let mut acc = 0.0;
    let mut coef = 1.0;
    for i in 0..=k {
        let jj = j as f64 + i as f64 + 1.0;
        let kk = (k - i) as i32;
        let term = if kk == 0 { om.powf(jj) / jj } else { a.powi(kk) * om.powf(jj) / jj };
        acc += coef * term;
        coef *= (k - i) as f64 / jj;
        if coef == 0.0 {
            break;
        }
    }
    acc
}

/// `int_a^inf xi^k e^{-z xi} dxi` for `a >= 0`.
fn exp_tail_complex(k: usize, z: Complex64, a: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut apow = 1.0;
    for i in 0..=k {
        sum += apow / factorial(i) / z.powi((k - i + 1) as i32);
        apow *= a;
    }
    (-z * a).exp() * sum * factorial(k)
}

impl Kernel for KernelSpec {
    fn density(&self, xi: f64) -> f64 {
        match *self {
            KernelSpec::Gaussian => std_normal_pdf(xi),
            KernelSpec::PiecewisePoly { j } => {
                let r = 1.0 - xi.abs();
                if r < 0.0 {
                    0.0
                } else {
                    0.5 * (j as f64 + 1.0) * r.powi(j as i32)
                }
            }
            KernelSpec::Kappa { kappa } => {
                let s = Self::kappa_scale(kappa);
                let c = (-ln_beta(0.5, kappa - 0.5)).exp() / s.sqrt();
                c * (1.0 + xi * xi / s).powf(-kappa)
            }
            KernelSpec::AbsExp { j } => xi.abs().powi(j as i32) * (-xi.abs()).exp() / (2.0 * factorial(j as usize)),
            KernelSpec::CosineExp => (1.0 + xi.cos()) * (-xi.abs()).exp() / 3.0,
            KernelSpec::Uneven { alpha, beta } => {
                let c = Self::uneven_constant(alpha, beta);
                if xi > 0.0 && xi <= 1.0 {
                    (1.0 - xi) * xi.powf(-alpha) / c
                } else if (-1.0..0.0).contains(&xi) {
                    (1.0 + xi) * (-xi).powf(-beta) / c
                } else {
                    0.0
                }
            }
            KernelSpec::ShiftedGamma => {
                if xi > 0.0 {
                    xi * (-xi).exp()
                } else {
                    0.0
                }
            }
            KernelSpec::GaussianMixture { m4 } => {
                let (p, v1, v2) = Self::mixture_params(m4);
                let comp = |v: f64| std_normal_pdf(xi / v.sqrt()) / v.sqrt();
                if p == 0.0 {
                    comp(v2)
                } else {
                    p * comp(v1) + (1.0 - p) * comp(v2)
                }
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            KernelSpec::PiecewisePoly { .. } | KernelSpec::Uneven { .. } => (-1.0, 1.0),
            KernelSpec::ShiftedGamma => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            KernelSpec::PiecewisePoly { .. } | KernelSpec::AbsExp { .. } | KernelSpec::CosineExp | KernelSpec::Uneven { .. } => {
                vec![0.0]
            }
            _ => Vec::new(),
        }
    }

    fn is_even(&self) -> bool {
        !matches!(self, KernelSpec::Uneven { .. } | KernelSpec::ShiftedGamma)
    }

    fn raw_moment(&self, k: usize) -> Result<f64> {
        let odd = k % 2 == 1;
        Ok(match *self {
            KernelSpec::Gaussian => standard_normal_moment(k),
            KernelSpec::PiecewisePoly { j } => {
                if odd {
                    0.0
                } else {
                    // (j+1) B(k+1, j+1) = k! / prod_{i=2}^{k+1} (j+i)
                    (1..=k).fold(1.0, |acc, i| acc * i as f64 / (j as f64 + i as f64 + 1.0))
                }
            }
            KernelSpec::Kappa { kappa } => {
                if !(kappa > (k as f64 + 1.0) / 2.0) {
                    return Err(EqmomError::MomentUndefined { order: k });
                }
                if odd {
                    0.0
                } else {
                    let s = Self::kappa_scale(kappa);
                    (1..=k / 2).fold(1.0, |acc, m| acc * s * (m as f64 - 0.5) / (kappa - m as f64 - 0.5))
                }
            }
            KernelSpec::AbsExp { j } => {
                if odd {
                    0.0
                } else {
                    (1..=k).fold(1.0, |acc, i| acc * (j as f64 + i as f64))
                }
            }
            KernelSpec::CosineExp => {
                if odd {
                    0.0
                } else {
                    let z = Complex64::new(0.5, 0.5).powi(k as i32 + 1);
                    2.0 * factorial(k) * (1.0 + z.re) / 3.0
                }
            }
            KernelSpec::Uneven { alpha, beta } => {
                let c = Self::uneven_constant(alpha, beta);
                let kf = k as f64;
                let pos = 1.0 / ((kf + 1.0 - alpha) * (kf + 2.0 - alpha));
                let neg = 1.0 / ((kf + 1.0 - beta) * (kf + 2.0 - beta));
                (pos + if odd { -neg } else { neg }) / c
            }
            KernelSpec::ShiftedGamma => factorial(k + 1),
            KernelSpec::GaussianMixture { m4 } => {
                if odd {
                    0.0
                } else if k == 4 {
                    m4
                } else {
                    let (p, v1, v2) = Self::mixture_params(m4);
                    let h = (k / 2) as i32;
                    let mix = if p == 0.0 { v2.powi(h) } else { p * v1.powi(h) + (1.0 - p) * v2.powi(h) };
                    standard_normal_moment(k) * mix
                }
            }
        })
    }

    fn raw_half_moment(&self, k: usize, a: f64) -> Result<f64> {
        if a == f64::NEG_INFINITY {
            return self.raw_moment(k);
        }
        let full = self.raw_moment(k)?;
        Ok(match *self {
            KernelSpec::Gaussian => std_normal_upper_moments(a, k)[k],
            KernelSpec::PiecewisePoly { j } => reflect_even(|x| 0.5 * (j as f64 + 1.0) * ppoly_tail(k, j, x), full, k, a),
            KernelSpec::Kappa { kappa } => {
                let s = Self::kappa_scale(kappa);
                let h = (k as f64 + 1.0) / 2.0;
                let half_line = Self::kappa_half_line(kappa, k);
                let upper = |x: f64| {
                    if x == 0.0 {
                        half_line
                    } else {
                        // tail fraction = I_{s/(s+x^2)}(kappa - h, h)
                        let y = s / (s + x * x);
                        half_line * beta_reg(kappa - h, h, y)
                    }
                };
                reflect_even(upper, full, k, a)
            }
            KernelSpec::AbsExp { j } => {
                reflect_even(|x| upper_gamma_int(k + j as usize, x) / (2.0 * factorial(j as usize)), full, k, a)
            }
            KernelSpec::CosineExp => reflect_even(
                |x| {
                    let plain = upper_gamma_int(k, x);
                    let osc = exp_tail_complex(k, Complex64::new(1.0, -1.0), x).re;
                    (plain + osc) / 3.0
                },
                full,
                k,
                a,
            ),
            KernelSpec::Uneven { alpha, beta } => {
                let c = Self::uneven_constant(alpha, beta);
                let p = k as f64 + 1.0 - alpha;
                let q = k as f64 + 1.0 - beta;
                // int_lo^1 xi^{k-alpha}(1-xi)
                let pos = |lo: f64| {
                    if lo <= 0.0 {
                        1.0 / (p * (p + 1.0))
                    } else {
                        let lnlo = lo.ln();
                        -(p * lnlo).exp_m1() / p + ((p + 1.0) * lnlo).exp_m1() / (p + 1.0)
                    }
                };
                // int_0^y eta^{k-beta}(1-eta), mapped from the negative side
                let neg_part = |y: f64| y.powf(q) / q - y.powf(q + 1.0) / (q + 1.0);
                let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                if a >= 1.0 {
                    0.0
                } else if a >= 0.0 {
                    pos(a) / c
                } else if a >= -1.0 {
                    (pos(0.0) + sign * neg_part(-a)) / c
                } else {
                    full
                }
            }
            KernelSpec::ShiftedGamma => upper_gamma_int(k + 1, a.max(0.0)),
            KernelSpec::GaussianMixture { m4 } => {
                let (p, v1, v2) = Self::mixture_params(m4);
                let comp = |v: f64| v.powf(k as f64 / 2.0) * std_normal_upper_moments(a / v.sqrt(), k)[k];
                if p == 0.0 {
                    comp(v2)
                } else {
                    p * comp(v1) + (1.0 - p) * comp(v2)
                }
            }
        })
    }

    fn raw_half_moments(&self, max_order: usize, a: f64) -> Result<Vec<f64>> {
        match *self {
            KernelSpec::Gaussian => Ok(std_normal_upper_moments(a, max_order)),
            _ => (0..=max_order).map(|j| self.raw_half_moment(j, a)).collect(),
        }
    }
}
