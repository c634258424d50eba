//! Solver for power-transformed affine systems on the strictly positive cone.
//!
//! The equation of interest is
//!
//! ```text
//!     x = (A xˢ)^{1/s} + b        (powers taken componentwise)
//! ```
//!
//! where A is an irreducible nonnegative n x n matrix, b is strictly
//! positive, and s is a nonzero exponent. A unique strictly positive solution
//! exists exactly when r(A)^s < 1, with r(A) the spectral radius, and in that
//! case the transformed iteration converges to it from every strictly
//! positive start. This crate implements the spectral test, the iteration,
//! sub/supersolution brackets that trap the fixed point, randomized probes of
//! the structural properties the convergence argument leans on, and builders
//! for several recursive-utility and growth models that reduce to this
//! equation.
//!
//! Modules:
//!
//! - [`linalg`]: validated nonnegative matrices and vectors, Perron root and
//!   eigenvectors with a two-sided certificate, Gelfand norm estimates.
//! - [`system`]: the system type, the fixed-point map in both coordinate
//!   systems, and the solvability certificate.
//! - [`solver`]: bracketing and the damped-free fixed-point iteration with a
//!   full convergence report.
//! - [`probes`]: seeded numerical witnesses for order preservation, shape,
//!   and nonexistence.
//! - [`apps`]: model builders that assemble concrete economies into systems.

pub mod apps;
pub mod linalg;
pub mod probes;
pub mod solver;
pub mod system;

pub use apps::{AppError, AppSolution, MarkovChain};
pub use linalg::{
    gelfand_estimate, perron, perron_default, LinalgError, NonnegMatrix, NonnegVector, PerronData,
    PositiveVector,
};
pub use probes::{
    probe_cone_lattice, probe_fixed_point_inequality, probe_nonexistence, probe_order_preserving,
    probe_shape, ProbeReport, ProbeWitness,
};
pub use solver::{Bracket, SolveOptions, SolveReport, Start};
pub use system::{DomainError, PowerAffineSystem, SolvabilityCertificate, SystemError, Verdict};
