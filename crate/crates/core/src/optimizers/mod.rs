//! Optimizers that consume the budget of a [`DiscretizedProblem`].
//!
//! [`classic`] holds the self-adaptive (mu, lambda)-ES, the integer EA and
//! the (mu + lambda) GA; [`cma`] holds CMA-ES and its margin variant.
//!
//! [`DiscretizedProblem`]: crate::discretizer::DiscretizedProblem

pub mod classic;
pub mod cma;

use std::cmp::Ordering;

pub use classic::{es_run, ga_run, intea_run, max_entropy_sample, sample_with_parameter};
pub use cma::{cma_run, default_margin, escape_probabilities, margin_correction, CmaEs, CmaState, MarginState};

/// Ascending fitness order; `+inf` sorts last.
pub(crate) fn by_fitness(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}
