mod common;

use std::sync::Arc;

use eqmom::closure::jacobian_determinant_2node;
use eqmom::inversion::{invert, realizable, RootClass};
use eqmom::kernel::{DensityKernel, KernelContext};
use eqmom::moments::{equilibrium_moments, forward_map, MomentVector, NodeSet};
use eqmom::{Diagnosis, EqmomError};
use proptest::prelude::*;

fn round_trip_error(w: &NodeSet, ctx: &KernelContext) -> (f64, usize) {
    let m = forward_map(w, &ctx.moments().values);
    let r = invert(&m, ctx).unwrap_or_else(|e| panic!("{}: {e} for {w:?}", ctx.name()));
    let qualifying = r.sigma_roots.iter().filter(|s| s.pd()).count();
    (common::max_rel(&r.w.to_flat(), &w.to_flat()), qualifying)
}

#[test]
fn round_trip_two_nodes() {
    let mut r = common::rng(1);
    for id in ["gaussian", "ppoly:3", "kappa:6"] {
        let ctx = KernelContext::from_id(id, 2).unwrap();
        for _ in 0..200 {
            let w = common::random_omega(&mut r, 2);
            let (err, q) = round_trip_error(&w, &ctx);
            assert!(err < 1e-8, "{id}: {err:e} for {w:?}");
            assert_eq!(q, 1, "{id}: {w:?}");
        }
    }
}

#[test]
fn round_trip_three_nodes_gaussian() {
    let ctx = KernelContext::from_id("gaussian", 3).unwrap();
    let mut r = common::rng(2);
    for _ in 0..50 {
        let w = common::random_omega(&mut r, 3);
        let (err, _) = round_trip_error(&w, &ctx);
        assert!(err < 1e-6, "{err:e} for {w:?}");
    }
}

#[test]
fn equilibrium_is_degenerate() {
    let ctx = KernelContext::from_id("gaussian", 2).unwrap();
    let m = MomentVector::new(equilibrium_moments(1.3, 0.4, 0.8, 4).unwrap());
    let rep = realizable(&m, &ctx);
    assert_eq!(rep.diagnosis, Diagnosis::RealizableDegenerate);
    let w = rep.result.unwrap().w;
    assert!((w.u[0] - 0.4).abs() < 1e-12 && (w.u[1] - 0.4).abs() < 1e-12);
    assert!((w.sigma - 0.8f64.sqrt()).abs() < 1e-12);
}

#[test]
fn heavy_tailed_equilibrium_has_distinct_nodes() {
    // For m4 > 3 the Maxwellian moments are interior points with nodes at U +- sqrt(theta - sigma^2).
    let ctx = KernelContext::from_id("kappa:6", 2).unwrap();
    let m = MomentVector::new(equilibrium_moments(2.0, -0.3, 1.5, 4).unwrap());
    let r = invert(&m, &ctx).unwrap();
    assert_eq!(r.diagnosis(), Diagnosis::RealizableInterior);
    let expect = eqmom::stability::equilibrium_nodes(2.0, -0.3, 1.5, ctx.m(4)).unwrap();
    assert!(common::max_rel(&r.w.to_flat(), &expect.to_flat()) < 1e-9);
}

#[test]
fn zero_temperature_is_rejected() {
    let ctx = KernelContext::from_id("gaussian", 2).unwrap();
    let m = MomentVector::new(vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    assert!(invert(&m, &ctx).is_err());
    assert_eq!(realizable(&m, &ctx).diagnosis, Diagnosis::NotRealizable);
}

#[test]
fn outside_the_image_is_not_realizable() {
    // M4 < M2^2 violates Hankel positivity of the moments themselves.
    let ctx = KernelContext::from_id("gaussian", 2).unwrap();
    let m = MomentVector::new(vec![1.0, 0.0, 1.0, 0.0, 0.9]);
    let rep = realizable(&m, &ctx);
    assert_eq!(rep.diagnosis, Diagnosis::NotRealizable, "{:?}", rep.sigma_roots);
}

#[test]
fn wrong_length_is_invalid_input() {
    let ctx = KernelContext::from_id("gaussian", 2).unwrap();
    let m = MomentVector::new(vec![1.0, 0.0, 1.0, 0.0]);
    assert!(matches!(invert(&m, &ctx), Err(EqmomError::InvalidInput(_))));
}

fn two_bump_context() -> KernelContext {
    // Two narrow bumps with weights 0.1 / 0.9: strongly skewed, m4 < 3 + 9/8 m3^2.
    let eps: f64 = 0.05;
    let norm = 1.0 / (eps * (2.0 * std::f64::consts::PI).sqrt());
    let g = move |x: f64| norm * (-0.5 * (x / eps).powi(2)).exp();
    let k = DensityKernel {
        density: move |x: f64| 0.1 * g(x) + 0.9 * g(x - 1.0),
        support: (-0.6, 1.6),
        breakpoints: vec![0.0, 1.0],
        even: false,
    };
    KernelContext::new(Arc::new(k), "two-bump", 6).unwrap()
}

#[test]
fn injectivity_failure_gives_two_roots() {
    let ctx = two_bump_context();
    let (m3, m4) = (ctx.m(3), ctx.m(4));
    assert!(m4 < 3.0 + 9.0 / 8.0 * m3 * m3, "m3={m3} m4={m4}");
    let w = NodeSet::new(vec![0.5, 0.5], vec![-0.05, 0.05], 1.0);
    let m = forward_map(&w, &ctx.moments().values);
    match invert(&m, &ctx) {
        Err(EqmomError::Ambiguous { roots }) => {
            // Perturbing the double root at sigma = 1 may split it, so count at least two.
            assert!(roots.len() >= 2, "{roots:?}");
            assert!(roots.iter().any(|s| (s - 1.0).abs() < 1e-8), "{roots:?}");
            assert!(roots.iter().any(|s| *s < 1.0 - 1e-3), "{roots:?}");
        }
        other => panic!("expected ambiguity, got {other:?}"),
    }
    assert_eq!(realizable(&m, &ctx).diagnosis, Diagnosis::Ambiguous);
}

#[test]
fn jacobian_determinant_symbolic_gaussian() {
    // Expanded by hand for m3 = 0, m4 = 3: det = 2 sigma w1 w2 (w1 + w2) (u1 - u2)^6.
    let w = NodeSet::new(vec![0.3, 1.7], vec![-0.4, 1.1], 0.9);
    let expect = 2.0 * 0.9 * 0.3 * 1.7 * 2.0 * 1.5f64.powi(6);
    assert!((jacobian_determinant_2node(&w, 0.0, 3.0) - expect).abs() < 1e-12 * expect);
}

#[test]
fn jacobian_determinant_closed_form() {
    let mut r = common::rng(3);
    for id in ["gaussian", "ppoly:3", "kappa:6", "uneven", "shgamma"] {
        let ctx = KernelContext::from_id(id, 2).unwrap();
        let m = ctx.moments().values.clone();
        for _ in 0..40 {
            let w = common::random_omega(&mut r, 2);
            let closed = jacobian_determinant_2node(&w, ctx.m(3), ctx.m(4));
            let fd = common::fd_jacobian(&w, &m, 1e-5).determinant();
            assert!((fd - closed).abs() < 1e-6 * closed.abs(), "{id}: {fd} vs {closed} for {w:?}");
        }
    }
}

#[test]
fn qualifying_root_reproduces_width() {
    let ctx = KernelContext::from_id("gaussian", 2).unwrap();
    let w = NodeSet::new(vec![0.4, 1.1], vec![-1.2, 0.9], 0.7);
    let r = invert(&forward_map(&w, &ctx.moments().values), &ctx).unwrap();
    let q: Vec<_> = r.sigma_roots.iter().filter(|s| s.class == RootClass::Qualifying).collect();
    assert_eq!(q.len(), 1);
    assert!((q[0].sigma - 0.7).abs() < 1e-10);
    assert!(r.residual < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inversion_inverts_forward_map(
        w1 in 0.1f64..3.0, w2 in 0.1f64..3.0,
        u1 in -3.0f64..3.0, gap in 0.3f64..3.0,
        sigma in 0.2f64..2.0,
    ) {
        let ctx = KernelContext::from_id("gaussian", 2).unwrap();
        let w = NodeSet::new(vec![w1, w2], vec![u1, u1 + gap], sigma);
        let r = invert(&forward_map(&w, &ctx.moments().values), &ctx).unwrap();
        prop_assert!(common::max_rel(&r.w.to_flat(), &w.to_flat()) < 1e-7);
    }

    #[test]
    fn scaling_covariance(
        c in 0.2f64..5.0, shift in -2.0f64..2.0, seed in 0u64..1000,
    ) {
        // Inverting rho-scaled, Galilean-shifted moments shifts the nodes and scales the weights.
        let ctx = KernelContext::from_id("kappa:6", 2).unwrap();
        let mut r = common::rng(seed);
        let w = common::random_omega(&mut r, 2);
        let moved = NodeSet::new(w.w.iter().map(|v| c * v).collect(), w.u.iter().map(|v| v + shift).collect(), w.sigma);
        let a = invert(&forward_map(&w, &ctx.moments().values), &ctx).unwrap();
        let b = invert(&forward_map(&moved, &ctx.moments().values), &ctx).unwrap();
        prop_assert!((a.w.sigma - b.w.sigma).abs() < 1e-8);
        for i in 0..2 {
            prop_assert!((c * a.w.w[i] - b.w.w[i]).abs() < 1e-8 * c.max(1.0));
            prop_assert!((a.w.u[i] + shift - b.w.u[i]).abs() < 1e-8);
        }
    }
}
