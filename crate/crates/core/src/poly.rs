//! Dense real polynomials, companion-matrix root finding, and a closed-form cubic.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

/// Polynomial with real coefficients stored in ascending order: `c[0] + c[1] x + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Builds `prod (x - r_i)`.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Poly::new(vec![1.0]), |acc, &r| acc.mul(&Poly::new(vec![-r, 1.0])))
    }

    /// Degree after discarding exact trailing zeros.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    /// k-th derivative.
    pub fn derivative_n(&self, k: usize) -> Poly {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Poly, i: usize| p.coeffs.get(i).copied().unwrap_or(0.0);
        Poly::new((0..len).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Largest coefficient magnitude.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// All complex roots (with multiplicity) from the eigenvalues of the balanced
    /// companion matrix, each refined by a few Newton steps.
    ///
    /// Exact zero low-order coefficients are deflated as exact roots at zero.
    pub fn roots(&self) -> Vec<Complex64> {
        let deg = self.degree();
        if deg == 0 {
            return Vec::new();
        }
        let coeffs = &self.coeffs[..=deg];
        let zeros = coeffs.iter().position(|&c| c != 0.0).unwrap_or(0);
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
        let reduced = &coeffs[zeros..];
        let m = reduced.len() - 1;
        if m == 0 {
            return roots;
        }
        let lead = reduced[m];
        if m == 1 {
            roots.push(Complex64::new(-reduced[0] / lead, 0.0));
            return roots;
        }
        let mut companion = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            companion[(0, j)] = -reduced[m - 1 - j] / lead;
        }
        for i in 1..m {
            companion[(i, i - 1)] = 1.0;
        }
        balance(&mut companion);
        let p = Poly::new(reduced.to_vec());
        let dp = p.derivative();
        let eig: Vec<Complex64> = match Schur::try_new(companion, f64::EPSILON, 1000 * m) {
            Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
            None => aberth(&p),
        };
        for z in eig {
            roots.push(newton_polish(&p, &dp, z));
        }
        roots
    }
}

/// Aberth-Ehrlich simultaneous iteration; fallback when the QR iteration stalls.
fn aberth(p: &Poly) -> Vec<Complex64> {
    let m = p.degree();
    let lead = p.coeffs[m];
    let radius = 1.0 + p.coeffs[..m].iter().fold(0.0_f64, |a, c| a.max((c / lead).abs()));
    let dp = p.derivative();
    let mut z: Vec<Complex64> =
        (0..m).map(|k| Complex64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / m as f64)).collect();
    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for i in 0..m {
            let ratio = p.eval_complex(z[i]) / dp.eval_complex(z[i]);
            let repulsion: Complex64 = (0..m).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm());
            }
        }
        if max_step <= 4.0 * f64::EPSILON * radius {
            break;
        }
    }
    z
}

fn newton_polish(p: &Poly, dp: &Poly, z0: Complex64) -> Complex64 {
    let mut z = z0;
    let mut fz = p.eval_complex(z).norm();
    for _ in 0..4 {
        let d = dp.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let mut cand = z - p.eval_complex(z) / d;
        if z.im == 0.0 {
            cand.im = 0.0;
        }
        let fc = p.eval_complex(cand).norm();
        if fc < fz {
            z = cand;
            fz = fc;
        } else {
            break;
        }
    }
    z
}

/// Parlett-Reinsch diagonal balancing (radix 2) applied in place.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Result of a real-rootedness check.
#[derive(Debug, Clone)]
pub struct RealRootCheck {
    /// Roots with conjugate pairs at a numerically multiple real root merged onto the real line.
    pub roots: Vec<Complex64>,
    pub all_real: bool,
    pub scale: f64,
}

/// Decides whether all roots of `p` are real, treating imaginary parts below
/// `rel_tol * scale` as zero, where `scale = max(1, max |root|)`.
///
/// A conjugate pair whose real part is numerically a multiple root (both `p` and
/// `p'` vanish there to working precision) is counted as a real double root,
/// since the companion eigenvalues of an exact double root split by ~sqrt(eps).
pub fn check_real_rooted(p: &Poly, rel_tol: f64) -> RealRootCheck {
    let mut roots = p.roots();
    let scale = roots.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    let dp = p.derivative();
    let cscale = p.coeff_scale().max(f64::MIN_POSITIVE);
    for z in roots.iter_mut() {
        if z.im.abs() > rel_tol * scale && z.im.abs() < 1e-6 * scale {
            let x = z.re;
            let pow_scale: f64 = (0..p.coeffs.len()).map(|k| x.abs().max(1.0).powi(k as i32)).fold(0.0, f64::max);
            let tiny = 64.0 * f64::EPSILON * cscale * pow_scale;
            if p.eval(x).abs() <= tiny * scale && dp.eval(x).abs() <= 1e-7 * cscale * pow_scale * scale {
                z.im = 0.0;
            }
        }
    }
    let all_real = roots.iter().all(|z| z.im.abs() <= rel_tol * scale);
    RealRootCheck { roots, all_real, scale }
}

/// Real roots of `a x^2 + b x + c`, ascending.
pub fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut r = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, c / q] };
    r.sort_by(f64::total_cmp);
    r
}

/// Real roots of `c3 x^3 + c2 x^2 + c1 x + c0`, ascending, by the trigonometric /
/// Cardano formulas with one Newton refinement each.
///
/// Falls back to the quadratic when the leading coefficient is negligible.
pub fn real_cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if c3.abs() <= 1e-14 * scale {
        return real_quadratic_roots(c2, c1, c0);
    }
    let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if p == 0.0 && q == 0.0 {
        vec![-shift; 3]
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        vec![u + v - shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = if r == 0.0 { 0.0 } else { (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0) };
        let phi = arg.acos();
        (0..3).map(|k| 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() - shift).collect()
    };
    let poly = Poly::new(vec![c0, c1, c2, c3]);
    let dpoly = poly.derivative();
    for x in roots.iter_mut() {
        let f = poly.eval(*x);
        let d = dpoly.eval(*x);
        if d != 0.0 {
            let cand = *x - f / d;
            if poly.eval(cand).abs() < f.abs() {
                *x = cand;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}
