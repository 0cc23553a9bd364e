use std::path::Path;
use std::process::{Command, Output};

fn eqmom(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eqmom"));
    cmd.args(args);
    if let Some(d) = out_dir {
        cmd.env("EQMOM_OUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn kernel_report_verdicts() {
    let o = eqmom(&["kernel-report", "gaussian"], None);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "two_node_dissipative"), "yes");
    let o = eqmom(&["kernel-report", "cosexp"], None);
    let s = stdout(&o);
    assert_eq!(value(&s, "two_node_strictly_hyperbolic"), "no");
    assert!((value(&s, "m4").parse::<f64>().unwrap() - 14.0).abs() < 1e-8);
    let s = stdout(&eqmom(&["kernel-report", "ppoly:25"], None));
    assert_eq!(value(&s, "two_node_strictly_hyperbolic"), "yes");
    assert_eq!(value(&s, "two_node_dissipative"), "no");
}

#[test]
fn unknown_kernel_is_a_usage_error() {
    assert_eq!(eqmom(&["kernel-report", "nope"], None).status.code(), Some(1));
    assert_eq!(eqmom(&["frobnicate"], None).status.code(), Some(1));
}

#[test]
fn invert_equilibrium_and_bad_input() {
    // kappa:6 equilibrium at rest: nodes at +-sqrt(theta - sigma^2).
    let o = eqmom(&["invert", "--kernel", "kappa:6", "1", "0", "1", "0", "3"], None);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(value(&s, "diagnosis"), "realizable-interior");
    let u: Vec<f64> = value(&s, "u").split(',').map(|v| v.parse().unwrap()).collect();
    assert!((u[0] + u[1]).abs() < 1e-10 && u[1] > 0.0);

    let o = eqmom(&["invert", "1", "0.5", "0.25", "0.125", "0.0625"], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(value(&stdout(&o), "diagnosis"), "not-realizable");

    let o = eqmom(&["invert", "1", "-0.5", "1.25", "-1.625", "4.5625"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn hyperbolicity_exit_codes() {
    let o = eqmom(&["hyperbolicity", "--kernel", "kappa:6", "--w", "0.4,-1,0.6,0.8,0.7"], None);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "strictly_hyperbolic"), "true");
    let o = eqmom(&["hyperbolicity", "--kernel", "gaussian", "--moments", "1,0,1,0,3"], None);
    assert!(o.status.success());
    let o = eqmom(&["hyperbolicity", "--kernel", "gmix:14", "--w", "0.5,0,0.5,0,1"], None);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn stability_check_exit_codes() {
    let o = eqmom(&["stability-check", "--kernel", "kappa:6", "--rho", "1.2", "--u", "-0.3", "--theta", "0.7"], None);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "structurally_stable"), "true");
    let o = eqmom(&["stability-check", "--kernel", "ppoly:25"], None);
    assert_eq!(o.status.code(), Some(4));
    let s = stdout(&o);
    assert_eq!(value(&s, "condition_I"), "pass");
    assert_eq!(value(&s, "condition_II"), "pass");
    assert_eq!(value(&s, "condition_III"), "fail");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small free-flow run\nkernel = kappa:6\ncells = 120\ntau = inf\n").unwrap();
    let args = ["simulate", "--config", cfg.to_str().unwrap(), "--set", "t_end=0.05", "--reference", "free", "--name", "a"];
    let o = eqmom(&args, Some(dir.path()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert_eq!(value(&s, "cells"), "120");
    assert!(value(&s, "l1_rho").parse::<f64>().unwrap() < 0.1);
    let first = std::fs::read(dir.path().join("a.csv")).unwrap();
    let header = String::from_utf8_lossy(&first).lines().next().unwrap().to_string();
    assert_eq!(header, "x,rho,U,theta,M3,M4,ref_rho,ref_U,ref_theta");

    // The manifest is itself a config: replaying it gives identical bytes.
    let manifest = dir.path().join("a.manifest");
    let replay = ["simulate", "--config", manifest.to_str().unwrap(), "--reference", "free", "--name", "b"];
    assert!(eqmom(&replay, Some(dir.path())).status.success());
    assert_eq!(first, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(std::fs::read(dir.path().join("a.summary")).unwrap(), std::fs::read(dir.path().join("b.summary")).unwrap());
}

#[test]
fn simulate_abort_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = eqmom(&["simulate", "--kernel", "gaussian", "--cells", "100", "--tau", "inf"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cell"));
}

#[test]
fn simulate_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = eqmom(&["simulate", "--set", "cfl=0.9"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    let o = eqmom(&["simulate", "--set", "nonsense"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_is_seeded_and_flips_at_five() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("sweep.manifest");
    let args = ["sweep-m4", "--from", "4.9", "--to", "5.1", "--samples", "50", "--seed", "9", "--manifest", m.to_str().unwrap()];
    let a = eqmom(&args, None);
    let b = eqmom(&args, None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let s = stdout(&a);
    let feasible: Vec<bool> = s.lines().map(|l| l.contains("feasible=true")).collect();
    assert_eq!(feasible, vec![true, true, false, false, false]);
    assert!(std::fs::read_to_string(&m).unwrap().contains("# seed = 9"));
}
