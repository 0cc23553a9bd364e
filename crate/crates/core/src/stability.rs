//! BGK source term, the equilibrium manifold of the two-node system and a numerical
//! check of the structural stability conditions (I)-(III).

use nalgebra::{DMatrix, SymmetricEigen};

use crate::closure::{coefficient_matrix, spectrum, state_char_poly, ClosureCoeffs};
use crate::error::{EqmomError, Result};
use crate::inversion::invert;
use crate::kernel::KernelContext;
use crate::moments::{equilibrium_moments, pd_check, MomentVector, NodeSet};

/// `S(M) = (rho Delta^eq(U, sqrt(theta)) - M) / tau`; the first three entries vanish.
pub fn source(m: &MomentVector, tau: f64) -> Result<Vec<f64>> {
    let (rho, u, theta) = m.primitives()?;
    let eq = equilibrium_moments(rho, u, theta, m.len() - 1)?;
    let mut s: Vec<f64> = eq.iter().zip(&m.values).map(|(e, v)| (e - v) / tau).collect();
    s[..3].iter_mut().for_each(|v| *v = 0.0);
    Ok(s)
}

/// The six nonzero source-Jacobian entries `s_1..s_6` of the two-node system.
pub fn source_entries(u: f64, theta: f64) -> [f64; 6] {
    let u2 = u * u;
    [
        u * u2 - 3.0 * u * theta,
        3.0 * (theta - u2),
        3.0 * u,
        3.0 * (u2 * u2 - 2.0 * u2 * theta - theta * theta),
        -8.0 * u * u2,
        6.0 * (u2 + theta),
    ]
}

/// Jacobian of the two-node source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceJacobian {
    pub s: [f64; 6],
    pub tau: f64,
    pub matrix: DMatrix<f64>,
}

pub fn source_jacobian(m: &MomentVector, tau: f64) -> Result<SourceJacobian> {
    if m.len() != 5 {
        return Err(EqmomError::InvalidInput("source Jacobian is defined for the two-node system".into()));
    }
    let (_, u, theta) = m.primitives()?;
    let s = source_entries(u, theta);
    let mut mat = DMatrix::<f64>::zeros(5, 5);
    for k in 0..3 {
        mat[(3, k)] = s[k] / tau;
        mat[(4, k)] = s[k + 3] / tau;
    }
    mat[(3, 3)] = -1.0 / tau;
    mat[(4, 4)] = -1.0 / tau;
    Ok(SourceJacobian { s, tau, matrix: mat })
}

/// The block-diagonalizing matrix `P` with `P S_M = diag(0,0,0,-1,-1) P / tau`.
pub fn p_matrix(s: &[f64; 6]) -> DMatrix<f64> {
    let mut p = DMatrix::<f64>::identity(5, 5);
    for k in 0..3 {
        p[(3, k)] = -s[k];
        p[(4, k)] = -s[k + 3];
    }
    p
}

pub fn p_inverse(s: &[f64; 6]) -> DMatrix<f64> {
    let mut p = DMatrix::<f64>::identity(5, 5);
    for k in 0..3 {
        p[(3, k)] = s[k];
        p[(4, k)] = s[k + 3];
    }
    p
}

/// Equilibrium node parameters: `w = rho/2`, `u = U -/+ nu sigma`,
/// `sigma = sqrt(theta/(nu^2+1))`, `nu = ((m4-3)/2)^{1/4}`.
pub fn equilibrium_nodes(rho: f64, u: f64, theta: f64, m4: f64) -> Result<NodeSet> {
    if !(rho > 0.0 && theta > 0.0) {
        return Err(EqmomError::InvalidInput(format!("need rho, theta > 0, got {rho}, {theta}")));
    }
    if m4 < 3.0 {
        return Err(EqmomError::NoEquilibrium { m4 });
    }
    let nu = ((m4 - 3.0) / 2.0).powf(0.25);
    let sigma = (theta / (nu * nu + 1.0)).sqrt();
    Ok(NodeSet::new(vec![0.5 * rho, 0.5 * rho], vec![u - nu * sigma, u + nu * sigma], sigma))
}

/// Quantities of the two-node equilibrium for an even kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumData {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
    pub m4: f64,
    pub nu: f64,
    pub sigma: f64,
    pub b1: f64,
    pub b2: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Closure coefficients `a_0..a_4` at the equilibrium state.
    pub a: [f64; 5],
}

impl EquilibriumData {
    pub fn new(rho: f64, u: f64, theta: f64, m4: f64) -> Result<Self> {
        let w = equilibrium_nodes(rho, u, theta, m4)?;
        let nu = ((m4 - 3.0) / 2.0).powf(0.25);
        let nu2 = nu * nu;
        let b1 = 2.0 * nu2 + 10.0;
        let b2 = -9.0 * nu2 * nu2 + 6.0 * nu2 + 15.0;
        let disc = (0.25 * b1 * b1 - b2).sqrt();
        // mu1^2 = b2 / mu2^2 avoids cancellation in b1/2 - disc
        let mu2sq = 0.5 * b1 + disc;
        let mu1sq = b2 / mu2sq;
        let s = w.sigma;
        let (s2, s4) = (s * s, s.powi(4));
        let a = [
            u.powi(5) - b1 * u.powi(3) * s2 + b2 * u * s4,
            -5.0 * u.powi(4) + 3.0 * b1 * u * u * s2 - b2 * s4,
            10.0 * u.powi(3) - 3.0 * b1 * u * s2,
            -10.0 * u * u + b1 * s2,
            5.0 * u,
        ];
        Ok(Self { rho, u, theta, m4, nu, sigma: s, b1, b2, mu1: mu1sq.max(0.0).sqrt(), mu2: mu2sq.sqrt(), a })
    }

    /// `U + mu_1 sigma, U - mu_1 sigma, U + mu_2 sigma, U - mu_2 sigma, U`.
    pub fn eigenvalues(&self) -> [f64; 5] {
        let (u, s) = (self.u, self.sigma);
        [u + self.mu1 * s, u - self.mu1 * s, u + self.mu2 * s, u - self.mu2 * s, u]
    }

    pub fn moments(&self) -> Vec<f64> {
        equilibrium_moments(self.rho, self.u, self.theta, 4).expect("theta > 0")
    }
}

/// Left-eigenvector matrix `L = V T` of the companion matrix with last row `a`.
pub fn left_eigenvectors(lambda: &[f64], a: &[f64]) -> DMatrix<f64> {
    let dim = a.len();
    let v = DMatrix::from_fn(dim, dim, |i, j| lambda[i].powi((dim - 1 - j) as i32));
    // T: -1 on the diagonal, a_{dim-1}, a_{dim-2}, ... on successive subdiagonals.
    let t = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            -1.0
        } else if i > j {
            a[dim - (i - j)]
        } else {
            0.0
        }
    });
    v * t
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizerCertificate {
    pub feasible: bool,
    /// `x_1^2..x_5^2` (diagonal of `Lambda`), after the Condition III rescaling.
    pub lambda: [f64; 5],
    pub a0: DMatrix<f64>,
    /// Largest entry of the off-diagonal block of `P^{-T} A_0 P^{-1}`, relative to its largest entry.
    pub block_offdiag: f64,
    /// Smallest eigenvalue of `2Y`, the doubled lower block of `P^{-T} A_0 P^{-1}`.
    pub lower_block_min_eig: f64,
    /// `B_2 - 3 theta'^2 = -6 (m4 - 5)` at unit width; feasible only while positive.
    pub b2_minus_3theta2: f64,
    pub reason: Option<String>,
}

fn transformed(a0: &DMatrix<f64>, pinv: &DMatrix<f64>) -> DMatrix<f64> {
    pinv.transpose() * a0 * pinv
}

fn block_offdiag_rel(b: &DMatrix<f64>) -> f64 {
    let mut off = 0.0_f64;
    for i in 0..3 {
        for j in 3..5 {
            off = off.max(b[(i, j)].abs());
        }
    }
    off / b.amax().max(f64::MIN_POSITIVE)
}

fn lower_min_eig(b: &DMatrix<f64>) -> f64 {
    let y = b.view((3, 3), (2, 2)).into_owned() * 2.0;
    SymmetricEigen::new(y).eigenvalues.min()
}

/// Diagonal weights making `A_0 = L^T Lambda L` block-diagonal in the `P` frame.
///
/// Uses the unit-width reduction to a 2x2 system for `x_1^2 = x_2^2` and
/// `x_3^2 = x_4^2` with `x_5^2 = 1`; `Lambda` is then rescaled so that the lower
/// block satisfies `2Y >= I`. When no positive solution exists the certificate
/// carries `Lambda = I` (rescaled likewise) and the reason.
pub fn solve_symmetrizer(eq: &EquilibriumData) -> Result<SymmetrizerCertificate> {
    if !(eq.m4 >= 3.0 && eq.m4 < 6.0) {
        return Err(EqmomError::InvalidInput(format!(
            "symmetrizer needs a strictly hyperbolic equilibrium (3 <= m4 < 6), got m4 = {}",
            eq.m4
        )));
    }
    let nu2 = eq.nu * eq.nu;
    let theta1 = nu2 + 1.0;
    let b2_minus_3theta2 = eq.b2 - 3.0 * theta1 * theta1;
    let (m1, m2) = (eq.mu1 * eq.mu1, eq.mu2 * eq.mu2);
    let rhs = 2.0 * (1.0 - nu2) / theta1;
    let x3 = rhs * ((5.0 - 3.0 * nu2) - m1) / (m2 - m1);
    let x1 = rhs - x3;
    let feasible = x1 > 0.0 && x3 > 0.0;
    let mut lambda = if feasible { [x1, x1, x3, x3, 1.0] } else { [1.0; 5] };
    let reason = (!feasible).then(|| {
        format!("B2 - 3 theta'^2 = {b2_minus_3theta2:.6e} <= 0 (m4 = {} >= 5): Y0 and Y2 cannot both be positive", eq.m4)
    });

    let s = source_entries(eq.u, eq.theta);
    let pinv = p_inverse(&s);
    let l = left_eigenvectors(&eq.eigenvalues(), &eq.a);
    let build = |lam: &[f64; 5]| {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lam));
        l.transpose() * d * &l
    };
    let b = transformed(&build(&lambda), &pinv);
    let min_eig = lower_min_eig(&b);
    if min_eig > 0.0 {
        let k = 1.0 / min_eig;
        lambda.iter_mut().for_each(|x| *x *= k);
    }
    let a0 = build(&lambda);
    let b = transformed(&a0, &pinv);
    Ok(SymmetrizerCertificate {
        feasible,
        lambda,
        block_offdiag: block_offdiag_rel(&b),
        lower_block_min_eig: lower_min_eig(&b),
        a0,
        b2_minus_3theta2,
        reason,
    })
}

/// Outcome of one structural stability condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub pass: bool,
    pub residual: f64,
    pub scale: f64,
}

impl ConditionCheck {
    fn new(residual: f64, scale: f64, rel_tol: f64) -> Self {
        Self { pass: residual <= rel_tol * scale, residual, scale }
    }
}

/// Condition I: `P S_M = diag(0,0,0,-1,-1) P / tau`.
pub fn condition_i(m: &MomentVector, tau: f64) -> Result<(DMatrix<f64>, ConditionCheck)> {
    let sj = source_jacobian(m, tau)?;
    let p = p_matrix(&sj.s);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[0.0, 0.0, 0.0, -1.0, -1.0])) / tau;
    let lhs = &p * &sj.matrix;
    let rhs = d * &p;
    let residual = (&lhs - &rhs).amax();
    let scale = lhs.amax().max(rhs.amax());
    Ok((p, ConditionCheck::new(residual, scale, 1e-10)))
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub equilibrium: EquilibriumData,
    pub certificate: SymmetrizerCertificate,
    pub condition_i: ConditionCheck,
    pub condition_ii: ConditionCheck,
    /// A_0 passed the Cholesky test.
    pub a0_positive_definite: bool,
    /// `residual` is the largest eigenvalue of `A_0 Q + Q^T A_0 + P^T diag(0,0,0,1,1) P`.
    pub condition_iii: ConditionCheck,
    /// Spread between the closure spectrum and `U +/- mu sigma, U`.
    pub eigen_mismatch: f64,
}

impl StabilityReport {
    pub fn passes(&self) -> bool {
        self.condition_i.pass && self.condition_ii.pass && self.condition_iii.pass
    }

    pub fn report(&self) -> String {
        let c = &self.certificate;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        let e = &self.equilibrium;
        kv("rho", format!("{:.10e}", e.rho));
        kv("U", format!("{:.10e}", e.u));
        kv("theta", format!("{:.10e}", e.theta));
        kv("m4", format!("{:.10e}", e.m4));
        kv("nu", format!("{:.10e}", e.nu));
        kv("sigma_eq", format!("{:.10e}", e.sigma));
        kv("mu1", format!("{:.10e}", e.mu1));
        kv("mu2", format!("{:.10e}", e.mu2));
        kv("symmetrizer_feasible", c.feasible.to_string());
        kv("lambda", c.lambda.iter().map(|x| format!("{x:.10e}")).collect::<Vec<_>>().join(","));
        kv("block_offdiag", format!("{:.3e}", c.block_offdiag));
        kv("b2_minus_3theta2", format!("{:.10e}", c.b2_minus_3theta2));
        if let Some(r) = &c.reason {
            kv("infeasibility", r.clone());
        }
        for (name, cc) in [("I", &self.condition_i), ("II", &self.condition_ii), ("III", &self.condition_iii)] {
            kv(&format!("condition_{name}"), if cc.pass { "pass".into() } else { "fail".into() });
            kv(&format!("condition_{name}_residual"), format!("{:.3e}", cc.residual));
            kv(&format!("condition_{name}_scale"), format!("{:.3e}", cc.scale));
        }
        kv("a0_positive_definite", self.a0_positive_definite.to_string());
        kv("eigen_mismatch", format!("{:.3e}", self.eigen_mismatch));
        kv("structurally_stable", self.passes().to_string());
        s
    }
}

/// Checks conditions (I)-(III) at the equilibrium `(rho, U, theta)` for an even kernel
/// with `3 <= m4 < 6`.
pub fn verify_structural_stability(ctx: &KernelContext, rho: f64, u: f64, theta: f64) -> Result<StabilityReport> {
    if !ctx.is_even() {
        return Err(EqmomError::InvalidInput(format!(
            "structural stability check covers even kernels only; `{}` is not even",
            ctx.name()
        )));
    }
    let eq = EquilibriumData::new(rho, u, theta, ctx.m(4))?;
    let cert = solve_symmetrizer(&eq)?;
    let m = MomentVector::new(eq.moments());

    let (p, cond_i) = condition_i(&m, 1.0)?;

    // The coefficient matrix comes from the closure at the equilibrium nodes.
    let w = equilibrium_nodes(rho, u, theta, eq.m4)?;
    let (c, _) = state_char_poly(&w, ctx);
    let a = ClosureCoeffs { a: c.coeffs[..5].iter().map(|v| -v).collect() };
    let amat = coefficient_matrix(&a);
    let spec = spectrum(&c);
    let mut want = eq.eigenvalues().to_vec();
    want.sort_by(f64::total_cmp);
    let eigen_mismatch = spec.eigenvalues.iter().zip(&want).map(|(z, w)| (z.re - w).abs().max(z.im.abs())).fold(0.0, f64::max);

    let a0 = &cert.a0;
    let a0_pd = pd_check(a0, 0.0).failing_pivot.is_none();
    let sym = a0 * &amat;
    let asym = (&sym - sym.transpose()).amax();
    let cond_ii = ConditionCheck::new(if a0_pd { asym } else { f64::INFINITY }, sym.amax(), 1e-8);

    // tau-normalized source Jacobian Q = tau S_M
    let q = source_jacobian(&m, 1.0)?.matrix;
    let e = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[0.0, 0.0, 0.0, 1.0, 1.0]));
    let lhs = a0 * &q + q.transpose() * a0;
    let bound = p.transpose() * e * &p;
    let total = &lhs + &bound;
    let max_eig = SymmetricEigen::new((&total + total.transpose()) * 0.5).eigenvalues.max();
    let cond_iii = ConditionCheck::new(max_eig, lhs.amax().max(bound.amax()), 1e-8);

    Ok(StabilityReport {
        equilibrium: eq,
        certificate: cert,
        condition_i: cond_i,
        condition_ii: cond_ii,
        a0_positive_definite: a0_pd,
        condition_iii: cond_iii,
        eigen_mismatch,
    })
}

/// Kernel-agnostic exploration of Condition III for two nodes: the equilibrium
/// state is inverted numerically, and the six block-orthogonality equations are
/// solved for `Lambda` in the least-squares sense.
#[derive(Debug, Clone)]
pub struct NumericSymmetrizer {
    pub nodes: NodeSet,
    pub eigenvalues: Vec<f64>,
    /// Unit-sum weights minimizing the orthogonality defect.
    pub lambda: Vec<f64>,
    /// Smallest singular value over the largest of the 6x5 system.
    pub relative_residual: f64,
    pub all_positive: bool,
}

pub fn numeric_symmetrizer(ctx: &KernelContext, rho: f64, u: f64, theta: f64) -> Result<NumericSymmetrizer> {
    let m = MomentVector::new(equilibrium_moments(rho, u, theta, 4)?);
    let inv = invert(&m, ctx)?;
    let (c, _) = state_char_poly(&inv.w, ctx);
    let spec = spectrum(&c);
    if !spec.is_strictly_hyperbolic(crate::closure::TOL_IM, crate::closure::TOL_GAP) {
        return Err(EqmomError::InvalidInput("equilibrium spectrum is not real and distinct".into()));
    }
    let a: Vec<f64> = c.coeffs[..5].iter().map(|v| -v).collect();
    let lam = spec.real_parts();
    let l = left_eigenvectors(&lam, &a);
    let mm = l * p_inverse(&source_entries(u, theta));
    let mut sys = DMatrix::<f64>::zeros(6, 5);
    let mut row = 0;
    for i in 0..3 {
        for j in 3..5 {
            for k in 0..5 {
                sys[(row, k)] = mm[(k, i)] * mm[(k, j)];
            }
            row += 1;
        }
    }
    let svd = sys.clone().svd(true, true);
    let vt = svd.v_t.expect("requested");
    let (imin, smin) =
        svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = svd.singular_values.max();
    let mut x: Vec<f64> = vt.row(imin).iter().copied().collect();
    let sum: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= sum);
    Ok(NumericSymmetrizer {
        nodes: inv.w,
        eigenvalues: lam,
        all_positive: x.iter().all(|&v| v > 0.0),
        lambda: x,
        relative_residual: smin / smax.max(f64::MIN_POSITIVE),
    })
}
