//! Reference solutions of the Riemann problem in the collisionless and continuum limits.

use super::config::Primitive;
use crate::error::{EqmomError, Result};
use crate::special::normal_upper_moments;

/// Collisionless solution with Maxwellian initial halves: at `x` the particles with
/// `xi > x/t` came from the left state, the rest from the right one.
pub fn analytic_free_molecular(x: f64, t: f64, left: Primitive, right: Primitive) -> Primitive {
    if t <= 0.0 {
        return if x < 0.0 { left } else { right };
    }
    let c = x / t;
    let gl = normal_upper_moments(c, left.u, left.theta, 2);
    let gr = normal_upper_moments(c, right.u, right.theta, 2);
    let full_r = [1.0, right.u, right.theta + right.u * right.u];
    let m: Vec<f64> = (0..3).map(|j| left.rho * gl[j] + right.rho * (full_r[j] - gr[j])).collect();
    let rho = m[0];
    let u = m[1] / rho;
    Primitive::new(rho, u, m[2] / rho - u * u)
}

/// Adiabatic exponent of the one-dimensional monatomic gas.
pub const GAMMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wave {
    Shock { speed: f64 },
    Rarefaction { head: f64, tail: f64 },
}

/// Exact self-similar solution of the Euler Riemann problem with `p = rho theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerSolution {
    pub left: Primitive,
    pub right: Primitive,
    pub p_star: f64,
    pub u_star: f64,
    pub rho_star_left: f64,
    pub rho_star_right: f64,
    pub left_wave: Wave,
    pub right_wave: Wave,
}

fn sound(p: Primitive) -> f64 {
    (GAMMA * p.theta).sqrt()
}

/// Pressure function of one side and its derivative.
fn pressure_fn(p: f64, s: Primitive) -> (f64, f64) {
    let pk = s.pressure();
    let ck = sound(s);
    if p > pk {
        let a = 2.0 / ((GAMMA + 1.0) * s.rho);
        let b = (GAMMA - 1.0) / (GAMMA + 1.0) * pk;
        let q = (a / (p + b)).sqrt();
        ((p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (p + b)))
    } else {
        let e = (GAMMA - 1.0) / (2.0 * GAMMA);
        let r = p / pk;
        (2.0 * ck / (GAMMA - 1.0) * (r.powf(e) - 1.0), r.powf(-(GAMMA + 1.0) / (2.0 * GAMMA)) / (s.rho * ck))
    }
}

impl EulerSolution {
    pub fn solve(left: Primitive, right: Primitive) -> Result<Self> {
        for s in [left, right] {
            if !(s.rho > 0.0 && s.theta > 0.0) {
                return Err(EqmomError::InvalidInput("Euler states need rho, theta > 0".into()));
            }
        }
        let (cl, cr) = (sound(left), sound(right));
        let du = right.u - left.u;
        if 2.0 / (GAMMA - 1.0) * (cl + cr) <= du {
            return Err(EqmomError::Vacuum);
        }
        let (pl, pr) = (left.pressure(), right.pressure());
        // two-rarefaction guess, exact when both waves are rarefactions
        let e = (GAMMA - 1.0) / (2.0 * GAMMA);
        let guess = ((cl + cr - 0.5 * (GAMMA - 1.0) * du) / (cl / pl.powf(e) + cr / pr.powf(e))).powf(1.0 / e);
        let mut p = guess.max(1e-12 * (pl + pr));
        for _ in 0..100 {
            let (fl, dl) = pressure_fn(p, left);
            let (fr, dr) = pressure_fn(p, right);
            let next = (p - (fl + fr + du) / (dl + dr)).max(1e-14 * (pl + pr));
            let change = 2.0 * (next - p).abs() / (next + p);
            p = next;
            if change < 1e-15 {
                break;
            }
        }
        let (fl, _) = pressure_fn(p, left);
        let (fr, _) = pressure_fn(p, right);
        let u_star = 0.5 * (left.u + right.u) + 0.5 * (fr - fl);
        let g6 = (GAMMA - 1.0) / (GAMMA + 1.0);
        let side = |s: Primitive, c: f64, sign: f64| -> (f64, Wave) {
            let r = p / s.pressure();
            if r > 1.0 {
                let rho = s.rho * (r + g6) / (g6 * r + 1.0);
                let q = ((GAMMA + 1.0) / (2.0 * GAMMA) * r + (GAMMA - 1.0) / (2.0 * GAMMA)).sqrt();
                (rho, Wave::Shock { speed: s.u + sign * c * q })
            } else {
                let rho = s.rho * r.powf(1.0 / GAMMA);
                let c_star = c * r.powf((GAMMA - 1.0) / (2.0 * GAMMA));
                (rho, Wave::Rarefaction { head: s.u + sign * c, tail: u_star + sign * c_star })
            }
        };
        let (rho_star_left, left_wave) = side(left, cl, -1.0);
        let (rho_star_right, right_wave) = side(right, cr, 1.0);
        Ok(Self { left, right, p_star: p, u_star, rho_star_left, rho_star_right, left_wave, right_wave })
    }

    /// Star state on the given side of the contact.
    pub fn star(&self, left_side: bool) -> Primitive {
        let rho = if left_side { self.rho_star_left } else { self.rho_star_right };
        Primitive::new(rho, self.u_star, self.p_star / rho)
    }

    fn fan(s: Primitive, xi: f64, sign: f64) -> Primitive {
        let c = sound(s);
        let g = 2.0 / (GAMMA + 1.0);
        let k = g + sign * (GAMMA - 1.0) / ((GAMMA + 1.0) * c) * (s.u - xi);
        let rho = s.rho * k.powf(2.0 / (GAMMA - 1.0));
        let u = g * (sign * c + 0.5 * (GAMMA - 1.0) * s.u + xi);
        let p = s.pressure() * k.powf(2.0 * GAMMA / (GAMMA - 1.0));
        Primitive::new(rho, u, p / rho)
    }

    /// Solution at the similarity coordinate `xi = x / t`.
    pub fn sample(&self, xi: f64) -> Primitive {
        if xi <= self.u_star {
            match self.left_wave {
                Wave::Shock { speed } => {
                    if xi < speed {
                        self.left
                    } else {
                        self.star(true)
                    }
                }
                Wave::Rarefaction { head, tail } => {
                    if xi < head {
                        self.left
                    } else if xi > tail {
                        self.star(true)
                    } else {
                        Self::fan(self.left, xi, 1.0)
                    }
                }
            }
        } else {
            match self.right_wave {
                Wave::Shock { speed } => {
                    if xi > speed {
                        self.right
                    } else {
                        self.star(false)
                    }
                }
                Wave::Rarefaction { head, tail } => {
                    if xi > head {
                        self.right
                    } else if xi < tail {
                        self.star(false)
                    } else {
                        Self::fan(self.right, xi, -1.0)
                    }
                }
            }
        }
    }

    /// Speeds of the shocks in the pattern (left wave first).
    pub fn shock_speeds(&self) -> Vec<f64> {
        [self.left_wave, self.right_wave]
            .iter()
            .filter_map(|w| match w {
                Wave::Shock { speed } => Some(*speed),
                Wave::Rarefaction { .. } => None,
            })
            .collect()
    }
}

pub fn exact_euler(x: f64, t: f64, left: Primitive, right: Primitive) -> Result<Primitive> {
    let sol = EulerSolution::solve(left, right)?;
    if t <= 0.0 {
        return Ok(if x < 0.0 { left } else { right });
    }
    Ok(sol.sample(x / t))
}

fn conserved(s: Primitive) -> ([f64; 3], [f64; 3]) {
    let p = s.pressure();
    let e = 0.5 * s.rho * s.u * s.u + p / (GAMMA - 1.0);
    ([s.rho, s.rho * s.u, e], [s.rho * s.u, s.rho * s.u * s.u + p, s.u * (e + p)])
}

/// Largest relative defect of the jump conditions `s [q] = [f(q)]` across a discontinuity.
pub fn rankine_hugoniot_residual(a: Primitive, b: Primitive, speed: f64) -> f64 {
    let (qa, fa) = conserved(a);
    let (qb, fb) = conserved(b);
    (0..3)
        .map(|k| {
            let r = speed * (qb[k] - qa[k]) - (fb[k] - fa[k]);
            let scale = fa[k].abs().max(fb[k].abs()).max(speed.abs() * qa[k].abs().max(qb[k].abs()));
            r.abs() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}
