//! Sparsity-penalized least squares with maximally non-convex penalties that
//! keep the total cost convex.
//!
//! The toolkit covers: parametric penalty functions and their scalar
//! threshold (prox) rules, linear operators (dense and recursive difference
//! systems), diagonal bounds on the Gram matrix certified by a semidefinite
//! criterion, MM-based solvers with optimality checks, the iterative
//! re-constrained sparse solver, and a reproducible sparse deconvolution
//! benchmark.

mod banded;
pub mod bench;
pub mod bound;
pub mod error;
pub mod imsc;
pub mod io;
pub mod operators;
pub mod penalty;
pub mod rng;
pub mod solvers;

pub use error::MscError;
pub use penalty::{PenaltyKind, PenaltySpec, ThresholdProps};
