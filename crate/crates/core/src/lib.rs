//! Benchmarking continuous and integer evolutionary optimizers on
//! plateau-discretized versions of continuous test functions.
//!
//! The pieces fit together as follows: [`problems`] provides seeded test
//! function instances, [`discretizer`] wraps an instance with a plateau size
//! and a metered evaluation budget, the [`optimizers`] consume that budget
//! and yield a [`RunRecord`], and [`metrics`] turns sets of records into
//! success rates, ERT values and ECDF curves. [`harness`] drives whole
//! experiments from a config file.

pub mod discretizer;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod optimizers;
pub mod problems;
pub mod record;
pub mod seed;

pub use discretizer::{DiscretizedProblem, Improvement, PlateauSize};
pub use error::{Error, Result};
pub use problems::{make_instance, Domain, FunctionId, ProblemInstance};
pub use record::{Algorithm, RunRecord};

/// A run counts as solved once `f - f_opt` drops below this value.
pub const TARGET_PRECISION: f64 = 1e-8;
