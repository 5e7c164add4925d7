//! Constructive verification of the sharp plank theorem for real Hilbert
//! spaces.
//!
//! Given unit vectors `v_1, ..., v_n`, there is a vector `v` of norm `sqrt(n)`
//! with `|<v_k, v>| >= sqrt(n) sin(pi / 2n)` for every `k`. The crate builds
//! that witness from an inverse eigenvector `w` of the Gram matrix
//! (`H w = w^{-1}`), checks the bounds on `w` and on the conjugated matrix
//! `M = diag(w) H diag(w)`, and exposes the trigonometric-polynomial machinery
//! behind the bound as executable checks.
//!
//! Modules:
//!
//! - [`geom`]: unit-vector sets, Gram matrices, sign patterns, zones.
//! - [`inverse_eigen`]: per-quadrant Newton solver, enumeration, dual construction.
//! - [`witness`]: witness vectors, the conjugated matrix and its bounds.
//! - [`trigpoly`]: slice polynomials, Bernstein checks, `sin^2 * psi` division,
//!   root counting and the alpha-slice contradiction certificate.
//! - [`oracle`]: brute-force references used to cross-check the solvers.
//! - [`io`], [`cli`]: file formats and the `plank` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod geom;
pub mod inverse_eigen;
pub mod io;
mod linalg;
pub mod oracle;
pub mod trigpoly;
pub mod witness;

pub use config::{Config, Tolerances};
pub use error::{PlankError, Result};
pub use geom::{extremal_configuration, gram, GramMatrix, SignPattern, UnitVectorSet, Zone};
pub use inverse_eigen::InverseEigenSolution;
pub use witness::{ConjugatedMatrix, WitnessResult};
