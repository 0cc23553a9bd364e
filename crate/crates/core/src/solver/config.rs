use std::fmt;
use std::str::FromStr;

use crate::error::{EqmomError, Result};

/// Macroscopic state `(rho, U, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
}

impl Primitive {
    pub const fn new(rho: f64, u: f64, theta: f64) -> Self {
        Self { rho, u, theta }
    }

    pub fn pressure(&self) -> f64 {
        self.rho * self.theta
    }
}

/// Parameters of a Riemann run. `tau = 0` is the continuum limit and
/// `tau = inf` the free-molecular one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub kernel: String,
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub cells: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub tau: f64,
    pub left: Primitive,
    pub right: Primitive,
    /// Replace cells that fail inversion by their Maxwellian moments instead of aborting.
    pub limiter: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            kernel: "gaussian".into(),
            n: 2,
            x_min: -1.0,
            x_max: 1.0,
            cells: 1000,
            cfl: 0.45,
            t_end: 0.1,
            tau: f64::INFINITY,
            left: Primitive::new(3.093, 0.0, 1.0),
            right: Primitive::new(1.0, 0.0, 1.0),
            limiter: false,
        }
    }
}

pub const CONFIG_KEYS: [&str; 15] = [
    "kernel", "n", "x_min", "x_max", "cells", "cfl", "t_end", "tau", "rho_l", "u_l", "theta_l", "rho_r", "u_r", "theta_r",
    "limiter",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| EqmomError::InvalidInput(format!("bad value `{value}` for `{key}`")))
}

fn parse_tau(value: &str) -> Result<f64> {
    match value.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "free" => Ok(f64::INFINITY),
        "continuum" => Ok(0.0),
        v => parse("tau", v),
    }
}

impl SimConfig {
    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "kernel" => self.kernel = value.to_string(),
            "n" => self.n = parse(key, value)?,
            "x_min" => self.x_min = parse(key, value)?,
            "x_max" => self.x_max = parse(key, value)?,
            "cells" => self.cells = parse(key, value)?,
            "cfl" => self.cfl = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "tau" => self.tau = parse_tau(value)?,
            "rho_l" => self.left.rho = parse(key, value)?,
            "u_l" => self.left.u = parse(key, value)?,
            "theta_l" => self.left.theta = parse(key, value)?,
            "rho_r" => self.right.rho = parse(key, value)?,
            "u_r" => self.right.u = parse(key, value)?,
            "theta_r" => self.right.theta = parse(key, value)?,
            "limiter" => self.limiter = parse(key, value)?,
            other => return Err(EqmomError::InvalidInput(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text (blank lines and `#` comments allowed) on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| EqmomError::InvalidInput(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EqmomError::InvalidInput(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.cells < 2 {
            return bad(format!("cells must be at least 2, got {}", self.cells));
        }
        if !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return bad(format!("invalid domain [{}, {}]", self.x_min, self.x_max));
        }
        if !(self.cfl > 0.0 && self.cfl < 0.5) {
            return bad(format!("cfl must lie in (0, 0.5), got {}", self.cfl));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("invalid t_end {}", self.t_end));
        }
        if !(self.tau >= 0.0) {
            return bad(format!("tau must be nonnegative, got {}", self.tau));
        }
        for (side, p) in [("left", self.left), ("right", self.right)] {
            if !(p.rho > 0.0 && p.theta > 0.0 && p.u.is_finite()) {
                return bad(format!("{side} state needs rho, theta > 0"));
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.cells as f64
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.cells).map(|i| self.x_min + (i as f64 + 0.5) * dx).collect()
    }
}

impl fmt::Display for SimConfig {
    /// The config as `key = value` lines; parsing the output restores `self`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kernel = {}", self.kernel)?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "x_min = {}", self.x_min)?;
        writeln!(f, "x_max = {}", self.x_max)?;
        writeln!(f, "cells = {}", self.cells)?;
        writeln!(f, "cfl = {}", self.cfl)?;
        writeln!(f, "t_end = {}", self.t_end)?;
        if self.tau.is_infinite() {
            writeln!(f, "tau = inf")?;
        } else {
            writeln!(f, "tau = {}", self.tau)?;
        }
        writeln!(f, "rho_l = {}", self.left.rho)?;
        writeln!(f, "u_l = {}", self.left.u)?;
        writeln!(f, "theta_l = {}", self.left.theta)?;
        writeln!(f, "rho_r = {}", self.right.rho)?;
        writeln!(f, "u_r = {}", self.right.u)?;
        writeln!(f, "theta_r = {}", self.right.theta)?;
        writeln!(f, "limiter = {}", self.limiter)
    }
}
