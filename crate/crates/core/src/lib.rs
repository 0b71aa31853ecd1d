//! Majorized ADMM for linearly constrained convex programs whose smooth
//! objective couples the two primal blocks.
//!
//! The problem family is
//!
//! ```text
//! minimize    p(u) + q(v) + phi(u, v)
//! subject to  A* u + B* v = c,
//! ```
//!
//! where `p`, `q` are closed proper convex (possibly nonsmooth) and `phi` is
//! smooth convex with a Lipschitz gradient described by a curvature envelope
//! `Q <= W <= Q + H` with block-diagonal gap `H = Diag(D1, D2)`.
//!
//! The crate provides:
//!
//! - [`linop`]: matrix-free self-adjoint operator algebra with dense
//!   materialization for desk-scale spectral checks,
//! - [`model`]: problem representation and a proximal-operator toolbox,
//! - [`solver`]: the majorized ADMM iteration with exact subproblem backends,
//! - [`diagnostics`]: KKT residual bounds, Lyapunov sequences, descent
//!   certificates, ergodic averages and complexity constants,
//! - [`conditions`]: eigenvalue verification of every convergence hypothesis,
//! - [`instances`]: reproducible instance generators.

pub mod conditions;
pub mod diagnostics;
mod error;
pub mod instances;
pub mod linop;
pub mod model;
pub mod solver;

pub(crate) mod sampling;

pub use error::{Error, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for materialized operators and instance data.
pub type Matrix = nalgebra::DMatrix<f64>;

pub use linop::{BlockCurvature, LinearMap, SelfAdjointOp};
pub use model::{CoupledProblem, ProxTerm, SmoothCoupling};
pub use solver::{IterateState, ReferenceTriple, RunHistory, Solution, SolverConfig};
