use std::fmt::Write as _;
use std::str::FromStr;

use super::config::Primitive;
use super::{EulerSolution, GridState, Simulation};
use crate::error::{EqmomError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    FreeMolecular,
    Euler,
}

impl FromStr for ReferenceKind {
    type Err = EqmomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Self::FreeMolecular),
            "euler" => Ok(Self::Euler),
            other => Err(EqmomError::InvalidInput(format!("unknown reference `{other}` (free|euler)"))),
        }
    }
}

impl std::fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FreeMolecular => "free",
            Self::Euler => "euler",
        })
    }
}

/// L1 (times `dx`) and L-infinity errors of `rho, U, theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l1: [f64; 3],
    pub linf: [f64; 3],
}

pub fn error_norms(numeric: &[Primitive], reference: &[Primitive], dx: f64) -> ErrorNorms {
    let mut l1 = [0.0; 3];
    let mut linf = [0.0_f64; 3];
    for (a, b) in numeric.iter().zip(reference) {
        let e = [(a.rho - b.rho).abs(), (a.u - b.u).abs(), (a.theta - b.theta).abs()];
        for k in 0..3 {
            l1[k] += e[k] * dx;
            linf[k] = linf[k].max(e[k]);
        }
    }
    ErrorNorms { l1, linf }
}

/// Midpoint of the interface with the steepest pressure jump at `x > x_from`.
pub fn shock_position(x: &[f64], states: &[Primitive], x_from: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for k in 1..x.len() {
        let mid = 0.5 * (x[k - 1] + x[k]);
        if mid <= x_from {
            continue;
        }
        let jump = (states[k].pressure() - states[k - 1].pressure()).abs();
        if best.is_none_or(|(j, _)| jump > j) {
            best = Some((jump, mid));
        }
    }
    best.map(|(_, m)| m)
}

/// A density spike above twice the larger initial density.
pub fn delta_shock_detected(states: &[Primitive], left: Primitive, right: Primitive) -> bool {
    let peak = states.iter().map(|s| s.rho).fold(f64::NEG_INFINITY, f64::max);
    peak > 2.0 * left.rho.max(right.rho)
}

pub(super) fn csv(x: &[f64], state: &GridState, reference: Option<&[Primitive]>) -> Result<String> {
    let prims = state.primitives()?;
    let mut s = String::from("x,rho,U,theta,M3,M4");
    if reference.is_some() {
        s.push_str(",ref_rho,ref_U,ref_theta");
    }
    s.push('\n');
    for (i, (xi, p)) in x.iter().zip(&prims).enumerate() {
        let m = &state.cells[i].values;
        let _ = write!(s, "{xi:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", p.rho, p.u, p.theta, m[3], m[4]);
        if let Some(r) = reference {
            let _ = write!(s, ",{:.12e},{:.12e},{:.12e}", r[i].rho, r[i].u, r[i].theta);
        }
        s.push('\n');
    }
    Ok(s)
}

pub(super) fn summary(sim: &Simulation, reference: Option<ReferenceKind>) -> Result<String> {
    let prims = sim.state.primitives()?;
    let c = &sim.config;
    let st = &sim.stats;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("kernel", c.kernel.clone());
    kv("cells", c.cells.to_string());
    kv("tau", if c.tau.is_infinite() { "inf".into() } else { format!("{:e}", c.tau) });
    kv("t_final", format!("{:.12e}", sim.state.t));
    kv("steps", st.steps.to_string());
    kv("min_dt", format!("{:.6e}", st.min_dt));
    kv("max_spectral_radius", format!("{:.6e}", st.max_spectral_radius));
    kv("max_rel_imag", format!("{:.3e}", st.max_rel_imag));
    kv("clamped_cells", st.clamped.to_string());
    for j in 0..3 {
        kv(&format!("transport_defect_m{j}"), format!("{:.3e}", st.transport_defect[j]));
    }
    let mass: f64 = sim.state.cells.iter().map(|m| m.values[0]).sum::<f64>() * sim.dx();
    kv("mass", format!("{mass:.12e}"));
    let fold = |f: fn(&Primitive) -> f64, init: f64, op: fn(f64, f64) -> f64| prims.iter().map(f).fold(init, op);
    kv("min_rho", format!("{:.6e}", fold(|p| p.rho, f64::INFINITY, f64::min)));
    kv("max_rho", format!("{:.6e}", fold(|p| p.rho, f64::NEG_INFINITY, f64::max)));
    kv("min_theta", format!("{:.6e}", fold(|p| p.theta, f64::INFINITY, f64::min)));
    kv("delta_shock", delta_shock_detected(&prims, c.left, c.right).to_string());
    if let Some(kind) = reference {
        let r = sim.reference(kind)?;
        let e = error_norms(&prims, &r, sim.dx());
        kv("reference", kind.to_string());
        for (k, name) in ["rho", "U", "theta"].iter().enumerate() {
            kv(&format!("l1_{name}"), format!("{:.6e}", e.l1[k]));
            kv(&format!("linf_{name}"), format!("{:.6e}", e.linf[k]));
        }
        if kind == ReferenceKind::Euler {
            let sol = EulerSolution::solve(c.left, c.right)?;
            if let (Some(&speed), Some(pos)) = (sol.shock_speeds().last(), shock_position(sim.x(), &prims, 0.0)) {
                kv("shock_position", format!("{pos:.6e}"));
                kv("shock_position_exact", format!("{:.6e}", speed * sim.state.t));
            }
        }
    }
    Ok(s)
}
