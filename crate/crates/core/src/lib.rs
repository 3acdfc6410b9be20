//! Restarted primal-dual hybrid gradient (rPDHG) on random standard-form
//! linear programs.
//!
//! The crate generates LP instances `min cᵀx s.t. Ax = b, x ≥ 0` whose unique
//! optimum is known by construction, solves them with rPDHG, splits the
//! iteration count into a basis-identification stage and a local-convergence
//! stage, computes the condition measures that govern both stages, and runs
//! seeded batch experiments over instance families.
//!
//! Module map:
//! - [`linalg`]: dense kernels (products, extreme singular values, LU, CG presolve)
//! - [`instance`]: random instance families, certification, JSON/MPS files
//! - [`solver`]: one PDHG step, normalized duality gap, restarted driver
//! - [`metrics`]: stage decomposition and condition report
//! - [`probes`]: Monte-Carlo tail probes and a brute-force vertex oracle
//! - [`parallel`]: order-preserving scoped worker pool
//! - [`harness`]: experiment presets, batch runner, statistics, CSV output

pub mod error;
pub mod harness;
pub mod instance;
pub mod linalg;
pub mod metrics;
pub mod parallel;
pub mod probes;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentResult, Preset};
pub use instance::{LpInstance, MatrixDistribution, MatrixKind, SolutionDistribution};
pub use linalg::DenseMatrix;
pub use metrics::{ConditionReport, StageDecomposition};
pub use solver::{RunRecord, SolverConfig, StepSizes};
