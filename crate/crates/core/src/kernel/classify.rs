//! Two-node verdicts for a kernel: well-posedness of the moment map, strict
//! hyperbolicity and dissipativeness, plus the b-polynomial real-rootedness test.

use std::fmt;

use num_complex::Complex64;

use super::{b_coefficients, raw_moments, BCoefficients, KernelContext};
use crate::error::Result;
use crate::poly::{check_real_rooted, Poly};

/// Relative tolerance for real roots and for "nonzero" in the b-polynomial test.
pub const B_POLY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Outcome of the b-polynomial test `p(t) = sum_j b_{2n+1-j} t^j`.
#[derive(Debug, Clone)]
pub struct BPolyReport {
    pub coeffs: Vec<f64>,
    pub roots: Vec<Complex64>,
    pub all_real: bool,
    pub nonzero_roots: usize,
    pub passes: bool,
}

/// Runs the real-rootedness test on `b_0..b_{2n+1}`.
pub fn b_poly_check(b: &BCoefficients, n: usize) -> BPolyReport {
    let deg = 2 * n + 1;
    // coefficient of t^j is b_{deg - j}
    let coeffs: Vec<f64> = (0..=deg).map(|j| b.get(deg - j)).collect();
    let poly = Poly::new(coeffs.clone());
    let check = check_real_rooted(&poly, B_POLY_TOL);
    let nonzero_roots = check.roots.iter().filter(|z| z.norm() > B_POLY_TOL * check.scale).count();
    BPolyReport {
        coeffs,
        passes: check.all_real && nonzero_roots >= 2,
        roots: check.roots,
        all_real: check.all_real,
        nonzero_roots,
    }
}

/// `true` iff the b-polynomial has `2n + 1` real roots, at least two of them nonzero.
pub fn b_poly_sufficient(b: &BCoefficients, n: usize) -> bool {
    b_poly_check(b, n).passes
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelClassification {
    pub kernel: String,
    pub even: bool,
    pub m3: f64,
    pub m4: f64,
    /// `3 + (9/8) m3^2`.
    pub well_defined_threshold: f64,
    pub two_node_well_defined: bool,
    pub two_node_strictly_hyperbolic: Verdict,
    pub two_node_dissipative: Verdict,
    pub b_poly_sufficient: bool,
}

impl KernelClassification {
    /// Flat `key=value` lines.
    pub fn report(&self) -> String {
        let lines = [
            format!("kernel={}", self.kernel),
            format!("even={}", self.even),
            format!("m3={:.10e}", self.m3),
            format!("m4={:.10e}", self.m4),
            format!("well_defined_threshold={:.10e}", self.well_defined_threshold),
            format!("two_node_well_defined={}", self.two_node_well_defined),
            format!("two_node_strictly_hyperbolic={}", self.two_node_strictly_hyperbolic),
            format!("two_node_dissipative={}", self.two_node_dissipative),
            format!("b_poly_sufficient={}", self.b_poly_sufficient),
        ];
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

/// Classifies a kernel for the two-node closure.
///
/// The b-polynomial test is run on the normalized sequence and on the raw
/// unit-mass sequence; passing either counts (rescaling the kernel maps the roots
/// of the test polynomial by a constant factor, but shifting it does not preserve
/// real-rootedness, so both natural representatives are tried).
pub fn classify_two_node(ctx: &KernelContext) -> Result<KernelClassification> {
    let m3 = ctx.m(3);
    let m4 = ctx.m(4);
    let well_defined_threshold = 3.0 + 9.0 / 8.0 * m3 * m3;
    let two_node_well_defined = m4 >= well_defined_threshold;

    let mut b_ok = b_poly_sufficient(ctx.b(), 2);
    if !b_ok {
        let raw = raw_moments(ctx.kernel().as_ref(), 5)?;
        let mass = raw.values[0];
        let unit = super::MomentSequence::raw(raw.values.iter().map(|v| v / mass).collect());
        b_ok = b_poly_sufficient(&b_coefficients(&unit, 5)?, 2);
    }

    let (hyperbolic, dissipative) = if ctx.is_even() {
        (Verdict::from_bool((3.0..6.0).contains(&m4)), Verdict::from_bool((3.0..5.0).contains(&m4)))
    } else if b_ok {
        (Verdict::Yes, Verdict::Unknown)
    } else {
        (Verdict::Unknown, Verdict::Unknown)
    };

    Ok(KernelClassification {
        kernel: ctx.name().to_string(),
        even: ctx.is_even(),
        m3,
        m4,
        well_defined_threshold,
        two_node_well_defined,
        two_node_strictly_hyperbolic: hyperbolic,
        two_node_dissipative: dissipative,
        b_poly_sufficient: b_ok,
    })
}
