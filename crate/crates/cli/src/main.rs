//! `eqmom` command-line frontend.
//!
//! Exit codes: 0 ok, 1 usage or I/O error, 2 non-realizable input, 3 solver abort,
//! 4 certification failure.

mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eqmom::closure::{hyperbolicity, TOL_GAP, TOL_IM};
use eqmom::inversion::{invert, realizable};
use eqmom::kernel::{classify_two_node, KernelContext};
use eqmom::solver::{ReferenceKind, SimConfig, Simulation};
use eqmom::stability::{solve_symmetrizer, verify_structural_stability, EquilibriumData};
use eqmom::{Diagnosis, EqmomError, MomentVector, NodeSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use manifest::RunManifest;

const OUT_DIR_ENV: &str = "EQMOM_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "eqmom", version, about = "Kernel-parametrized EQMOM for the 1-D BGK equation")]
struct Cli {
    /// Also write the run manifest to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moments, thresholds and two-node verdicts of a kernel.
    KernelReport { kernel: String },
    /// Recover (w_i, u_i, sigma) from M_0..M_{2n}.
    Invert {
        #[arg(long, default_value = "gaussian")]
        kernel: String,
        #[arg(required = true, allow_negative_numbers = true)]
        moments: Vec<f64>,
    },
    /// Spectrum of the closed system at a parameter set or a moment vector.
    Hyperbolicity {
        #[arg(long, default_value = "gaussian")]
        kernel: String,
        /// Parameters w1,u1,...,wn,un,sigma.
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            conflicts_with = "moments",
            required_unless_present = "moments"
        )]
        w: Option<Vec<f64>>,
        /// Moments M0,...,M2n (inverted first).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        moments: Option<Vec<f64>>,
        #[arg(long, default_value_t = TOL_IM)]
        tol_im: f64,
        #[arg(long, default_value_t = TOL_GAP)]
        tol_gap: f64,
    },
    /// Structural stability conditions at the equilibrium (rho, U, theta).
    StabilityCheck {
        #[arg(long, default_value = "gaussian")]
        kernel: String,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        u: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Riemann problem run; writes `<name>.csv`, `<name>.summary` and `<name>.manifest`.
    Simulate {
        /// `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one config key, e.g. `--set cells=500`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        cells: Option<usize>,
        /// Relaxation time; `inf` for free flow, 0 for the continuum limit.
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        limiter: bool,
        /// Append reference columns and error norms.
        #[arg(long, value_parser = ["free", "euler"])]
        reference: Option<String>,
        /// Output file stem.
        #[arg(long, default_value = "run")]
        name: String,
    },
    /// Symmetrizer feasibility across m4, optionally with a random hyperbolicity sample.
    SweepM4 {
        #[arg(long, default_value_t = 3.0)]
        from: f64,
        #[arg(long, default_value_t = 5.95)]
        to: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Random parameter sets per m4 (gmix kernel); 0 skips the sample.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<EqmomError> for Failure {
    fn from(e: EqmomError) -> Self {
        let code = match e {
            EqmomError::NotRealizable(_)
            | EqmomError::Ambiguous { .. }
            | EqmomError::Inconsistent { .. }
            | EqmomError::NotPositiveDefinite { .. }
            | EqmomError::DegenerateUnsupported { .. } => 2,
            EqmomError::SolverAbort { .. } => 3,
            _ => 1,
        };
        Self::new(code, e.to_string())
    }
}

type CmdResult = Result<(String, RunManifest), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::KernelReport { kernel } => kernel_report(&kernel),
        Command::Invert { kernel, moments } => cmd_invert(&kernel, &moments),
        Command::Hyperbolicity { kernel, w, moments, tol_im, tol_gap } => cmd_hyperbolicity(&kernel, w, moments, tol_im, tol_gap),
        Command::StabilityCheck { kernel, rho, u, theta } => cmd_stability(&kernel, rho, u, theta),
        Command::Simulate { config, sets, kernel, cells, tau, t_end, limiter, reference, name } => {
            let overrides = Overrides { kernel, cells, tau, t_end, limiter, sets };
            cmd_simulate(config.as_deref(), overrides, reference.as_deref(), &name)
        }
        Command::SweepM4 { from, to, step, samples, seed } => cmd_sweep(from, to, step, samples, seed),
    };
    match result {
        Ok((out, manifest)) => {
            print!("{out}");
            if let Some(path) = cli.manifest {
                if let Err(e) = std::fs::write(&path, manifest.render()) {
                    eprintln!("error: cannot write manifest {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn kernel_report(kernel: &str) -> CmdResult {
    let ctx = KernelContext::from_id(kernel, 2)?;
    let c = classify_two_node(&ctx)?;
    let mut out = c.report();
    let b: Vec<String> = ctx.b().b.iter().take(6).map(|v| format!("{:.10e}", v + 0.0)).collect();
    let _ = writeln!(out, "b={}", b.join(","));
    let mut m = RunManifest::new("kernel-report");
    m.option("kernel", kernel);
    Ok((out, m))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(",")
}

fn context_for(kernel: &str, len: usize) -> Result<KernelContext, Failure> {
    if len < 3 || len.is_multiple_of(2) {
        return Err(Failure::new(1, format!("need 2n+1 >= 3 values, got {len}")));
    }
    Ok(KernelContext::from_id(kernel, (len - 1) / 2)?)
}

fn cmd_invert(kernel: &str, moments: &[f64]) -> CmdResult {
    let ctx = context_for(kernel, moments.len())?;
    let rep = realizable(&MomentVector::new(moments.to_vec()), &ctx);
    let mut out = String::new();
    let _ = writeln!(out, "diagnosis={}", rep.diagnosis);
    for (k, r) in rep.sigma_roots.iter().enumerate() {
        let _ = writeln!(out, "sigma_root_{k}={:.12e},pivot={:.3e},class={:?}", r.sigma, r.min_rel_pivot, r.class);
    }
    let mut m = RunManifest::new("invert");
    m.option("kernel", kernel).option("moments", join(moments));
    match (rep.result, rep.error) {
        (Some(res), _) => {
            let _ = writeln!(out, "w={}", join(&res.w.w));
            let _ = writeln!(out, "u={}", join(&res.w.u));
            let _ = writeln!(out, "sigma={:.12e}", res.w.sigma);
            let _ = writeln!(out, "residual={:.3e}", res.residual);
            Ok((out, m))
        }
        (None, e) => {
            print!("{out}");
            let msg = e.map_or_else(|| "inversion failed".to_string(), |e| e.to_string());
            Err(Failure::new(
                if rep.diagnosis == Diagnosis::NotRealizable || rep.diagnosis == Diagnosis::Ambiguous { 2 } else { 1 },
                msg,
            ))
        }
    }
}

fn cmd_hyperbolicity(kernel: &str, w: Option<Vec<f64>>, moments: Option<Vec<f64>>, tol_im: f64, tol_gap: f64) -> CmdResult {
    let mut m = RunManifest::new("hyperbolicity");
    m.option("kernel", kernel).option("tol_im", tol_im).option("tol_gap", tol_gap);
    let nodes = match (w, moments) {
        (Some(w), _) => {
            context_for(kernel, w.len())?;
            m.option("w", join(&w));
            NodeSet::from_flat(&w)?
        }
        (None, Some(mom)) => {
            let ctx = context_for(kernel, mom.len())?;
            m.option("moments", join(&mom));
            invert(&MomentVector::new(mom), &ctx)?.w
        }
        (None, None) => return Err(Failure::new(1, "give --w or --moments")),
    };
    let ctx = KernelContext::from_id(kernel, nodes.n())?;
    let rep = hyperbolicity(&nodes, &ctx, tol_im, tol_gap);
    let mut out = String::new();
    let _ = writeln!(out, "route={:?}", rep.route);
    let _ = writeln!(out, "char_poly={}", join(&rep.char_poly.coeffs));
    for (k, z) in rep.spectrum.eigenvalues.iter().enumerate() {
        let _ = writeln!(out, "eigenvalue_{k}={:.12e},{:.12e}", z.re, z.im);
    }
    let _ = writeln!(out, "spectral_radius={:.6e}", rep.spectrum.spectral_radius);
    let _ = writeln!(out, "max_imag={:.3e}", rep.spectrum.max_imag);
    let _ = writeln!(out, "min_gap={:.3e}", rep.spectrum.min_gap);
    let _ = writeln!(out, "strictly_hyperbolic={}", rep.strictly_hyperbolic);
    if rep.strictly_hyperbolic {
        Ok((out, m))
    } else {
        print!("{out}");
        Err(Failure::new(4, "spectrum is not real and distinct"))
    }
}

fn cmd_stability(kernel: &str, rho: f64, u: f64, theta: f64) -> CmdResult {
    let ctx = KernelContext::from_id(kernel, 2)?;
    let rep = verify_structural_stability(&ctx, rho, u, theta)?;
    let mut m = RunManifest::new("stability-check");
    m.option("kernel", kernel).option("rho", rho).option("u", u).option("theta", theta);
    let out = rep.report();
    if rep.passes() {
        Ok((out, m))
    } else {
        print!("{out}");
        let failed: Vec<&str> = [("I", rep.condition_i), ("II", rep.condition_ii), ("III", rep.condition_iii)]
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(n, _)| *n)
            .collect();
        Err(Failure::new(4, format!("structural stability conditions failed: {}", failed.join(", "))))
    }
}

struct Overrides {
    kernel: Option<String>,
    cells: Option<usize>,
    tau: Option<String>,
    t_end: Option<f64>,
    limiter: bool,
    sets: Vec<String>,
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))
}

fn cmd_simulate(config: Option<&Path>, o: Overrides, reference: Option<&str>, name: &str) -> CmdResult {
    let mut cfg = SimConfig::default();
    let mut m = RunManifest::new("simulate");
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::new(1, format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
        m.inputs.push(path.to_path_buf());
    }
    if let Some(k) = o.kernel {
        cfg.kernel = k;
    }
    if let Some(c) = o.cells {
        cfg.cells = c;
    }
    if let Some(t) = o.tau {
        cfg.set("tau", &t)?;
    }
    if let Some(t) = o.t_end {
        cfg.t_end = t;
    }
    cfg.limiter |= o.limiter;
    for s in &o.sets {
        let (k, v) = s.split_once('=').ok_or_else(|| Failure::new(1, format!("--set expects KEY=VALUE, got `{s}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    let reference: Option<ReferenceKind> = reference.map(str::parse).transpose()?;
    if let Some(r) = reference {
        m.option("reference", r);
    }

    let dir = out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Failure::new(1, format!("cannot create {}: {e}", dir.display())))?;
    let csv_path = dir.join(format!("{name}.csv"));
    let summary_path = dir.join(format!("{name}.summary"));
    let manifest_path = dir.join(format!("{name}.manifest"));
    m.outputs = vec![csv_path.clone(), summary_path.clone()];
    m.config = Some(cfg.to_string());
    write_file(&manifest_path, &m.render())?;

    let mut sim = Simulation::new(cfg)?;
    sim.run()?;
    write_file(&csv_path, &sim.csv(reference)?)?;
    let summary = sim.summary(reference)?;
    write_file(&summary_path, &summary)?;
    Ok((summary, m))
}

fn cmd_sweep(from: f64, to: f64, step: f64, samples: usize, seed: u64) -> CmdResult {
    if !(step > 0.0 && from >= 3.0 && to >= from) {
        return Err(Failure::new(1, "need 3 <= from <= to and step > 0"));
    }
    let mut m = RunManifest::new("sweep-m4");
    m.option("from", from).option("to", to).option("step", step).option("samples", samples);
    m.seed = Some(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let count = ((to - from) / step + 1e-9).floor() as usize;
    for k in 0..=count {
        let m4 = from + step * k as f64;
        let _ = write!(out, "m4={m4:.6}");
        match EquilibriumData::new(1.0, 0.0, 1.0, m4).and_then(|eq| solve_symmetrizer(&eq)) {
            Ok(c) => {
                let _ = write!(out, ",feasible={},b2_minus_3theta2={:.6e}", c.feasible, c.b2_minus_3theta2);
            }
            Err(_) => {
                let _ = write!(out, ",feasible=n/a");
            }
        }
        if samples > 0 {
            let ctx = KernelContext::from_id(&format!("gmix:{m4}"), 2)?;
            let bad = (0..samples)
                .filter(|_| {
                    let w = random_omega_tot(&mut rng);
                    !hyperbolicity(&w, &ctx, TOL_IM, TOL_GAP).strictly_hyperbolic
                })
                .count();
            let _ = write!(out, ",non_hyperbolic={bad}/{samples}");
        }
        out.push('\n');
    }
    Ok((out, m))
}

/// Weights in [0.05, 3), width in [0.1, 2), nodes a nonnegative gap apart (equal with
/// probability 0.2).
fn random_omega_tot(rng: &mut ChaCha8Rng) -> NodeSet {
    let sigma = rng.random_range(0.1..2.0);
    let u1 = rng.random_range(-3.0..3.0);
    let u2 = if rng.random_bool(0.2) { u1 } else { u1 + rng.random_range(0.0..4.0) };
    NodeSet::new(vec![rng.random_range(0.05..3.0), rng.random_range(0.05..3.0)], vec![u1, u2], sigma)
}
