//! Adaptive Newton-Galerkin solver for semilinear singularly perturbed
//! problems `−εΔu = f(u)` with P1 finite elements on intervals and
//! triangulations.

pub mod driver;
pub mod error;
pub mod estimator;
pub mod fespace;
pub mod linsolve;
pub mod mesh;
pub mod newton;
pub mod problems;
pub mod quadrature;

pub use driver::{adaptive_solve, Action, IterationRecord, RunConfig, SolveOutcome, TerminationReason};
pub use error::{Error, Result};
pub use estimator::IndicatorSet;
pub use fespace::FeFunction;
pub use mesh::Mesh;
pub use newton::{StepRule, StepSizeStrategy};
pub use problems::{Domain, ExactSolution, InitialGuess, Problem, SpikeTrain};
