//! Statevector emulation of explicit finite-difference advection embedded in
//! Hamiltonian evolution with ancilla postselection.
//!
//! The pipeline is: build a [`grid::Grid2D`] and fields, assemble the
//! marching operator with [`operator::assemble_advection`], wrap it in a
//! [`embedding::HermitianEmbedding`], then march with
//! [`timestepper::run`]. [`analysis`] holds the closed-form error and
//! probability bounds and the exact channel solution.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cavity;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod krylov;
pub mod noise;
pub mod operator;
pub mod timestepper;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use embedding::{Backend, HermitianEmbedding, StepResult};
pub use error::{Error, Result};
pub use grid::{Axis, Boundary, Grid2D, ScalarField, Statevector, VelocityField};
pub use operator::{SparseOperator, Stencil, StencilFamily, StencilSpec};
pub use timestepper::{RunLog, RunOptions, StepMode, StepOutcome};
