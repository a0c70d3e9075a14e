//! Mild solutions of semilinear heat problems with nonlocal initial
//! conditions, on a discrete space-time grid.
//!
//! The pieces, bottom up: [`lattice`] (grid functions, trajectories, the
//! positive cone), [`semigroup`] (the Dirichlet heat semigroup, spectral and
//! dense), [`mild`] (the solution operator `T = H + G`), [`problem`]
//! (concrete instances and hypothesis checks), [`eigensolver`] (positive
//! eigenpairs on the sphere `|y|_C = rho`) and [`config`] / [`commands`]
//! behind the CLI.

pub mod commands;
pub mod config;
pub mod eigensolver;
pub mod error;
pub mod expr;
pub mod lattice;
pub mod mild;
pub mod output;
pub mod problem;
pub mod semigroup;

pub use config::{load_config, ConfigDocument};
pub use eigensolver::{
    solve, sweep, verify_certificate, EigenpairCertificate, InitialGuess, SolverConfig, SweepEntry,
};
pub use error::{Error, Result};
pub use expr::{Expression, Var};
pub use lattice::{norm_c, norm_sup, ConeStatus, ConeTolerance, GridFunction, Trajectory};
pub use mild::{MildConfig, Quadrature, Rule};
pub use problem::{Grid, HypothesisReport, NonlocalOperator, Nonlinearity, ProblemInstance};
pub use semigroup::{SemigroupHandle, SemigroupKind};
