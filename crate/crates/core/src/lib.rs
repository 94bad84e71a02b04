//! Block stochastic gradient optimization.
//!
//! The central method updates the blocks of a partitioned variable
//! sequentially within each iteration, all from one shared mini batch, so
//! every block's sampled gradient reflects the blocks already updated this
//! iteration. Baselines (plain stochastic gradient, random block selection,
//! deterministic cyclic block gradient descent), four benchmark problems,
//! and an analysis layer that turns the worst-case convergence bounds into
//! computable quantities round out the crate.

pub mod analysis;
pub mod block;
mod error;
mod linalg;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod seed;
pub mod solvers;
pub mod verify;

pub use block::{BlockPartition, BlockPoint};
pub use error::{Error, Result};
pub use problem::{ConstraintSet, ObjectiveValue, Regularizer, StochasticProblem};
pub use solvers::{
    BatchSchedule, Budget, Method, RunTrace, SolverConfig, StepsizeKind, StepsizeSchedule,
    TraceRecord, UpdateOrder,
};
