//! Kernel-parametrized extended quadrature method of moments (EQMOM) for the
//! one-dimensional BGK equation: moment inversion, closure and hyperbolicity,
//! structural stability of the two-node system, and a finite-volume solver.

// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closure;
pub mod error;
pub mod inversion;
pub mod kernel;
pub mod moments;
pub mod poly;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod stability;

pub use closure::{ClosureCoeffs, GPoly, HyperbolicityReport, Spectrum};
pub use error::{EqmomError, Result};
pub use inversion::{Diagnosis, InversionResult, RealizabilityReport};
pub use kernel::{BCoefficients, Kernel, KernelClassification, KernelContext, KernelSpec, MomentSequence, Verdict};
pub use moments::{AuxMoments, MomentVector, NodeSet};
pub use poly::Poly;
pub use solver::{GridState, Primitive, ReferenceKind, SimConfig, Simulation};
pub use stability::{EquilibriumData, SourceJacobian, StabilityReport, SymmetrizerCertificate};
