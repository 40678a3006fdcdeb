//! Constructive homotopies between linear operators inside their strata.
//!
//! The toolkit builds explicit continuous families `λ ↦ T(λ)` connecting two
//! operators without leaving the set they live in (the stratum of a fixed
//! rank, a Fredholm stratum of fixed kernel/cokernel dimensions, or the
//! equivalence class carved out by a chain of kernel/range hops), then
//! certifies the result numerically by sampling.
//!
//! The moving parts:
//!
//! * [`linalg`]: dense kernels, rank decisions, column/null spaces,
//!   restricted inverses.
//! * [`subspace`]: subspace arithmetic, common complements of
//!   equal-dimensional pairs, graph operators, oblique projectors.
//! * [`path`]: segment families (affine pencils, plane rotations) and the
//!   constructors, from range/kernel alignment to the invertible-factor
//!   homotopy, sign flips, and a deliberately degenerate reversal pencil
//!   kept as a regression fixture.
//! * [`connect`]: the end-to-end connectors and equivalence chains.
//! * [`geometry`]: stratum tangent spaces and the dimension formula
//!   `(m + n − k)·k`, verified by explicit nullity.
//! * [`certify`]: sampled certificates for declared path invariants.
//! * [`sample`] / [`io`]: seeded instance generators and file formats.
//!
//! Everything numerical is generic over the scalar (see [`scalar::Real`]);
//! the aliases below fix `f64`, which is what the command-line tools and the
//! acceptance suite use.

pub mod certify;
pub mod connect;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod path;
pub mod sample;
pub mod scalar;
pub mod subspace;
pub mod thresholds;

pub use error::{Error, Result};
pub use scalar::Real;

/// Dense real matrix, the ambient object for every operator.
pub type Matrix<T> = nalgebra::DMatrix<T>;

pub type Matrix64 = Matrix<f64>;
pub type Subspace64 = subspace::Subspace<f64>;
pub type Decomposition64 = subspace::Decomposition<f64>;
pub type GraphOperator64 = subspace::GraphOperator<f64>;
pub type ObliqueProjector64 = subspace::ObliqueProjector<f64>;
pub type PathSegment64 = path::PathSegment<f64>;
pub type OperatorPath64 = path::OperatorPath<f64>;
pub type EquivalenceChain64 = connect::EquivalenceChain<f64>;
