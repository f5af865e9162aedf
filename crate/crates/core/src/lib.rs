//! Mid-point discrete calculus on uniform time scales and the variational
//! integrators it induces.
//!
//! The pieces, bottom-up:
//!
//! - [`time_grid`]: the uniform grid `T`, its half-step companion `T_half`
//!   and the subsets and shifts used by the calculus.
//! - [`calculus`]: grid functions, differences, averages and λ-integrals.
//! - [`lagrangian`]: the mid-point action, its Euler-Lagrange residual and the
//!   implicit two-step integrator.
//! - [`hamiltonian`]: discrete momentum, the Hamiltonian from the Legendre
//!   transform and the one-step mid-point Hamiltonian integrator.
//! - [`solver`]: the dense Newton / fixed-point root finder behind every
//!   implicit step.
//! - [`problems`]: built-in mechanical systems.
//! - [`converge`], [`verify`], [`cli`]: convergence studies, the randomized
//!   identity checks and the command-line front end.

pub mod calculus;
pub mod cli;
pub mod converge;
pub mod driver;
pub mod error;
pub mod hamiltonian;
pub mod lagrangian;
pub mod problems;
pub mod record;
pub mod solver;
pub mod time_grid;
pub mod verify;

pub use calculus::GridFunction;
pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianModel, PhasePoint};
pub use lagrangian::LagrangianModel;
pub use problems::MechanicalProblem;
pub use record::{Scheme, TrajectoryRecord};
pub use solver::SolverConfig;
pub use time_grid::{NodeKind, NodeSet, TimeGrid};
