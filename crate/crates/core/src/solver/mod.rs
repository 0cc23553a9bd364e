//! First-order finite-volume solver for the closed moment system with BGK relaxation.
//!
//! Transport uses kinetic flux-vector splitting of the EQMOM reconstruction; the
//! source is integrated exactly (it is affine in `M` once `rho, U, theta` are frozen,
//! and those are collision invariants) inside a Strang splitting.

mod config;
mod flux;
mod output;
mod reference;

use rayon::prelude::*;

pub use config::{Primitive, SimConfig, CONFIG_KEYS};
pub use flux::{interface_flux, node_half_moments, relax, split_flux, SplitFlux};
pub use output::{delta_shock_detected, error_norms, shock_position, ErrorNorms, ReferenceKind};
pub use reference::{analytic_free_molecular, exact_euler, rankine_hugoniot_residual, EulerSolution, Wave, GAMMA};

use crate::closure::{spectrum, state_char_poly};
use crate::error::{EqmomError, Result};
use crate::inversion::invert;
use crate::kernel::KernelContext;
use crate::moments::{equilibrium_moments, MomentVector, NodeSet};
use crate::stability::equilibrium_nodes;

/// Reconstructions with a node farther than this many thermal speeds from the bulk
/// velocity are rejected. Two-node closures reach such states near the boundary of
/// their range (a vanishing-weight node running off to infinity), where the closing
/// moment and the spectral radius blow up.
pub const NODE_SPREAD_LIMIT: f64 = 25.0;

fn check_spread(w: NodeSet, m: &MomentVector) -> Result<NodeSet> {
    let (_, u, theta) = m.primitives()?;
    let spread = w.u.iter().map(|x| (x - u).abs()).fold(0.0, f64::max) / theta.sqrt();
    if spread > NODE_SPREAD_LIMIT {
        return Err(EqmomError::NotRealizable(format!(
            "ill-conditioned reconstruction: node {spread:.3e} thermal speeds from the bulk velocity"
        )));
    }
    Ok(w)
}

/// Cell moments at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub t: f64,
    pub cells: Vec<MomentVector>,
}

impl GridState {
    pub fn primitives(&self) -> Result<Vec<Primitive>> {
        self.cells.iter().map(|m| m.primitives().map(|(rho, u, theta)| Primitive::new(rho, u, theta))).collect()
    }
}

/// Each cell holds the Maxwellian moments of its side of the Riemann data.
pub fn init_riemann(config: &SimConfig) -> Result<GridState> {
    config.validate()?;
    let order = 2 * config.n;
    let l = config.left;
    let r = config.right;
    let ml = MomentVector::new(equilibrium_moments(l.rho, l.u, l.theta, order)?);
    let mr = MomentVector::new(equilibrium_moments(r.rho, r.u, r.theta, order)?);
    let cells = config.cell_centers().into_iter().map(|x| if x < 0.0 { ml.clone() } else { mr.clone() }).collect();
    Ok(GridState { t: 0.0, cells })
}

/// Diagnostics accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    /// Cells replaced by their Maxwellian after failing inversion (limiter on).
    pub clamped: usize,
    /// Largest per-step defect of the telescoped balance of `M_0, M_1, M_2`,
    /// relative to the total of each moment's magnitude.
    pub transport_defect: [f64; 3],
    pub min_dt: f64,
    pub max_spectral_radius: f64,
    /// Largest imaginary part seen in any cell spectrum, relative to its radius.
    pub max_rel_imag: f64,
}

pub struct Simulation {
    pub config: SimConfig,
    pub ctx: KernelContext,
    pub state: GridState,
    pub stats: RunStats,
    x: Vec<f64>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        let ctx = KernelContext::from_id(&config.kernel, config.n)?;
        Self::with_context(config, ctx)
    }

    pub fn with_context(config: SimConfig, ctx: KernelContext) -> Result<Self> {
        let state = init_riemann(&config)?;
        let x = config.cell_centers();
        Ok(Self { config, ctx, state, stats: RunStats { min_dt: f64::INFINITY, ..RunStats::default() }, x })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn dx(&self) -> f64 {
        self.config.dx()
    }

    fn abort(&self, cell: usize, reason: String) -> EqmomError {
        EqmomError::SolverAbort { cell, time: self.state.t, reason, moments: self.state.cells[cell].values.clone() }
    }

    /// Node parameters of every cell; failing cells are clamped or abort the run.
    fn reconstruct(&mut self, equilibrium: bool) -> Result<Vec<NodeSet>> {
        let ctx = &self.ctx;
        let n = self.config.n;
        let found: Vec<Result<NodeSet>> = self
            .state
            .cells
            .par_iter()
            .map(|m| {
                if equilibrium && n == 2 {
                    let (rho, u, theta) = m.primitives()?;
                    equilibrium_nodes(rho, u, theta, ctx.m(4))
                } else {
                    invert(m, ctx).and_then(|r| check_spread(r.w, m))
                }
            })
            .collect();
        let mut nodes = Vec::with_capacity(found.len());
        for (i, r) in found.into_iter().enumerate() {
            match r {
                Ok(w) => nodes.push(w),
                Err(e) if self.config.limiter => {
                    let m = &self.state.cells[i];
                    let (rho, u, theta) = m.primitives().map_err(|_| self.abort(i, e.to_string()))?;
                    let eq = MomentVector::new(equilibrium_moments(rho, u, theta, 2 * n)?);
                    let w = if n == 2 { equilibrium_nodes(rho, u, theta, ctx.m(4)) } else { invert(&eq, ctx).map(|r| r.w) }
                        .map_err(|e2| self.abort(i, format!("{e}; clamp failed: {e2}")))?;
                    self.state.cells[i] = eq;
                    self.stats.clamped += 1;
                    nodes.push(w);
                }
                Err(e) => return Err(self.abort(i, e.to_string())),
            }
        }
        Ok(nodes)
    }

    /// Largest spectral radius over the cells and the largest relative imaginary part.
    fn spectral_radius(&self, nodes: &[NodeSet]) -> (f64, f64) {
        nodes
            .par_iter()
            .map(|w| {
                let s = spectrum(&state_char_poly(w, &self.ctx).0);
                (s.spectral_radius, s.max_imag / s.spectral_radius.max(f64::MIN_POSITIVE))
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    }

    /// Time step `cfl dx / max spectral radius`, capped by the remaining time.
    pub fn cfl_dt(&self, nodes: &[NodeSet]) -> f64 {
        let (r, _) = self.spectral_radius(nodes);
        (self.config.cfl * self.dx() / r).min(self.config.t_end - self.state.t)
    }

    fn relax_all(&mut self, dt: f64) -> Result<()> {
        let tau = self.config.tau;
        let out: Vec<Result<MomentVector>> = self.state.cells.par_iter().map(|m| relax(m, tau, dt)).collect();
        for (i, r) in out.into_iter().enumerate() {
            self.state.cells[i] = r.map_err(|e| self.abort(i, e.to_string()))?;
        }
        Ok(())
    }

    fn transport(&mut self, nodes: &[NodeSet], dt: f64) -> Result<()> {
        let ctx = &self.ctx;
        let split: Vec<Result<SplitFlux>> = nodes.par_iter().map(|w| split_flux(w, ctx)).collect();
        let mut parts = Vec::with_capacity(split.len());
        for (i, s) in split.into_iter().enumerate() {
            parts.push(s.map_err(|e| self.abort(i, e.to_string()))?);
        }
        let nc = parts.len();
        // Interface k sits between cells k-1 and k; Neumann ghosts copy the end cells.
        let fluxes: Vec<Vec<f64>> = (0..=nc)
            .into_par_iter()
            .map(|k| {
                let l = &parts[k.saturating_sub(1)];
                let r = &parts[k.min(nc - 1)];
                l.plus.iter().zip(&r.minus).map(|(a, b)| a + b).collect()
            })
            .collect();
        let lam = dt / self.dx();
        let before = moment_totals(&self.state.cells);
        let new: Vec<MomentVector> = self
            .state
            .cells
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                MomentVector::new(m.values.iter().enumerate().map(|(j, v)| v - lam * (fluxes[i + 1][j] - fluxes[i][j])).collect())
            })
            .collect();
        if let Some(i) = new.iter().position(|m| m.values.iter().any(|v| !v.is_finite())) {
            return Err(self.abort(i, "non-finite moments after transport".into()));
        }
        let after = moment_totals(&new);
        let scale = magnitude_totals(&self.state.cells);
        for j in 0..3 {
            let expected = -lam * (fluxes[nc][j] - fluxes[0][j]);
            let d = (after[j] - before[j] - expected).abs() / scale[j].max(f64::MIN_POSITIVE);
            self.stats.transport_defect[j] = self.stats.transport_defect[j].max(d);
        }
        self.state.cells = new;
        Ok(())
    }

    /// One Strang step: half relaxation, transport, half relaxation. Returns `dt`.
    pub fn step(&mut self) -> Result<f64> {
        let tau = self.config.tau;
        let continuum = tau == 0.0;
        let mut nodes = self.reconstruct(continuum)?;
        let (radius, imag) = self.spectral_radius(&nodes);
        let dt = (self.config.cfl * self.dx() / radius).min(self.config.t_end - self.state.t);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(self.abort(0, format!("invalid time step {dt} (spectral radius {radius})")));
        }
        self.stats.max_spectral_radius = self.stats.max_spectral_radius.max(radius);
        self.stats.max_rel_imag = self.stats.max_rel_imag.max(imag);
        if tau.is_finite() && !continuum {
            self.relax_all(0.5 * dt)?;
            nodes = self.reconstruct(false)?;
        }
        self.transport(&nodes, dt)?;
        if continuum {
            self.relax_all(dt)?;
        } else if tau.is_finite() {
            self.relax_all(0.5 * dt)?;
        }
        self.state.t += dt;
        self.stats.steps += 1;
        self.stats.min_dt = self.stats.min_dt.min(dt);
        Ok(dt)
    }

    /// Steps until `t_end`.
    pub fn run(&mut self) -> Result<()> {
        let eps = 1e-12 * self.config.t_end.max(1.0);
        while self.state.t < self.config.t_end - eps {
            self.step()?;
        }
        Ok(())
    }

    pub fn reference(&self, kind: ReferenceKind) -> Result<Vec<Primitive>> {
        let (l, r, t) = (self.config.left, self.config.right, self.state.t);
        match kind {
            ReferenceKind::FreeMolecular => Ok(self.x.iter().map(|&x| analytic_free_molecular(x, t, l, r)).collect()),
            ReferenceKind::Euler => {
                let sol = EulerSolution::solve(l, r)?;
                Ok(self
                    .x
                    .iter()
                    .map(|&x| {
                        if t > 0.0 {
                            sol.sample(x / t)
                        } else if x < 0.0 {
                            l
                        } else {
                            r
                        }
                    })
                    .collect())
            }
        }
    }

    /// CSV with header `x,rho,U,theta,M3,M4[,ref_rho,ref_U,ref_theta]`.
    pub fn csv(&self, reference: Option<ReferenceKind>) -> Result<String> {
        output::csv(&self.x, &self.state, reference.map(|k| self.reference(k)).transpose()?.as_deref())
    }

    /// Run summary as `key=value` lines.
    pub fn summary(&self, reference: Option<ReferenceKind>) -> Result<String> {
        output::summary(self, reference)
    }
}

fn moment_totals(cells: &[MomentVector]) -> [f64; 3] {
    let mut t = [0.0; 3];
    for m in cells {
        for (acc, v) in t.iter_mut().zip(&m.values) {
            *acc += v;
        }
    }
    t
}

fn magnitude_totals(cells: &[MomentVector]) -> [f64; 3] {
    let mut t = [0.0; 3];
    for m in cells {
        for (acc, v) in t.iter_mut().zip(&m.values) {
            *acc += v.abs();
        }
    }
    t
}
