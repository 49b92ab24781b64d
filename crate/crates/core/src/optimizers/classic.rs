//! Classical evolutionary algorithms with `mu = 4`, `lambda = 28`.
//!
//! * (mu, lambda)-ES on the continuous view, one self-adaptive step size per
//!   individual.
//! * int-EA on the integer view: the same skeleton with a two-sided
//!   geometric (maximum entropy) mutation whose spread is the self-adaptive
//!   deviation `m`.
//! * (mu + lambda) GA on the integer view with uniform crossover and uniform
//!   resampling of each coordinate with probability `1 / n`.
//!
//! Out-of-box offspring are not repaired; they evaluate to `+inf`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::by_fitness;
use crate::discretizer::DiscretizedProblem;
use crate::error::{Error, Result};
use crate::record::{Algorithm, RunRecord};
use crate::seed::rng_from_seed;

pub const MU: usize = 4;
pub const LAMBDA: usize = 28;

/// Lower floor for `sigma` and `m`.
pub const STRATEGY_FLOOR: f64 = 1e-10;

/// Lognormal learning rate `1 / sqrt(2n)`.
pub fn learning_rate(n: usize) -> f64 {
    1.0 / (2.0 * n as f64).sqrt()
}

/// `s * exp(tau * draw)`, floored at [`STRATEGY_FLOOR`].
pub fn lognormal_update(s: f64, tau: f64, draw: f64) -> f64 {
    (s * (tau * draw).exp()).max(STRATEGY_FLOOR)
}

/// Coordinate-wise pick from either parent with probability 1/2.
pub fn discrete_recombination<T: Copy, R: Rng + ?Sized>(a: &[T], b: &[T], rng: &mut R) -> Vec<T> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousIndividual {
    pub x: Vec<f64>,
    pub sigma: f64,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegerIndividual {
    pub z: Vec<i64>,
    /// Mutation deviation (int-EA only; unused by the GA).
    pub m: f64,
    pub fitness: f64,
}

/// Success probability `p` of the geometric variables for deviation `m`.
pub fn max_entropy_parameter(m: f64) -> f64 {
    1.0 - m / ((1.0 + m * m).sqrt() + 1.0)
}

/// Number of failures before the first success, `P(G = g) = p (1 - p)^g`.
fn geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> i64 {
    if p >= 1.0 {
        return 0;
    }
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    (u.ln() / (-p).ln_1p()).floor() as i64
}

/// Draws `G1 - G2` for two independent geometric variables with the
/// parameter given by [`max_entropy_parameter`]`(m)`. The result has law
/// `P(k) = p / (2 - p) * (1 - p)^|k|`.
pub fn max_entropy_sample<R: Rng + ?Sized>(m: f64, rng: &mut R) -> Result<i64> {
    if !(m > 0.0) {
        return Err(Error::InvalidDeviation(m));
    }
    Ok(sample_with_parameter(max_entropy_parameter(m), rng))
}

/// Two-sided geometric draw for an explicit `p` in `(0, 1]`.
pub fn sample_with_parameter<R: Rng + ?Sized>(p: f64, rng: &mut R) -> i64 {
    geometric(p, rng) - geometric(p, rng)
}

fn check_budget(dp: &DiscretizedProblem) -> Result<()> {
    if dp.budget() < LAMBDA as u64 {
        return Err(Error::BudgetTooSmall {
            budget: dp.budget(),
            lambda: LAMBDA,
        });
    }
    Ok(())
}

fn initial_strategy<R: Rng + ?Sized>(dp: &DiscretizedProblem, rng: &mut R) -> f64 {
    let upper = dp.instance().domain().width().sqrt();
    rng.random_range(0.0..upper).max(STRATEGY_FLOOR)
}

fn random_integer_vector<R: Rng + ?Sized>(lo: &[i64], hi: &[i64], rng: &mut R) -> Vec<i64> {
    lo.iter().zip(hi).map(|(&a, &b)| rng.random_range(a..=b)).collect()
}

/// Self-adaptive (4, 28)-ES on the continuous view.
pub fn es_run(mut dp: DiscretizedProblem, seed: u64) -> Result<RunRecord> {
    check_budget(&dp)?;
    let mut rng = rng_from_seed(seed);
    let n = dp.dim();
    let tau = learning_rate(n);
    let (lb, ub) = (dp.instance().domain().lb(), dp.instance().domain().ub());

    let mut parents = Vec::with_capacity(MU);
    for _ in 0..MU {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(lb..=ub)).collect();
        let sigma = initial_strategy(&dp, &mut rng);
        let fitness = dp.eval_continuous(&x)?;
        parents.push(ContinuousIndividual { x, sigma, fitness });
    }

    while !dp.solved() && dp.remaining() >= LAMBDA as u64 {
        let mut offspring = Vec::with_capacity(LAMBDA);
        for _ in 0..LAMBDA {
            let a = &parents[rng.random_range(0..MU)];
            let b = &parents[rng.random_range(0..MU)];
            let mut x = discrete_recombination(&a.x, &b.x, &mut rng);
            let sigma = lognormal_update(0.5 * (a.sigma + b.sigma), tau, rng.sample(StandardNormal));
            for xi in x.iter_mut() {
                *xi += sigma * rng.sample::<f64, _>(StandardNormal);
            }
            let fitness = dp.eval_continuous(&x)?;
            offspring.push(ContinuousIndividual { x, sigma, fitness });
        }
        offspring.sort_by(|p, q| by_fitness(p.fitness, q.fitness));
        offspring.truncate(MU);
        parents = offspring;
    }
    Ok(RunRecord::from_problem(Algorithm::Es, seed, dp))
}

/// int-EA: the ES skeleton on the integer view with maximum entropy mutation
/// of per-coordinate deviation `m / n`.
pub fn intea_run(mut dp: DiscretizedProblem, seed: u64) -> Result<RunRecord> {
    let (lo, hi) = dp.integer_bounds()?;
    check_budget(&dp)?;
    let mut rng = rng_from_seed(seed);
    let n = dp.dim();
    let tau = learning_rate(n);

    let mut parents = Vec::with_capacity(MU);
    for _ in 0..MU {
        let z = random_integer_vector(&lo, &hi, &mut rng);
        let m = initial_strategy(&dp, &mut rng);
        let fitness = dp.eval_integer(&z)?;
        parents.push(IntegerIndividual { z, m, fitness });
    }

    while !dp.solved() && dp.remaining() >= LAMBDA as u64 {
        let mut offspring = Vec::with_capacity(LAMBDA);
        for _ in 0..LAMBDA {
            let a = &parents[rng.random_range(0..MU)];
            let b = &parents[rng.random_range(0..MU)];
            let mut z = discrete_recombination(&a.z, &b.z, &mut rng);
            let m = lognormal_update(0.5 * (a.m + b.m), tau, rng.sample(StandardNormal));
            let p = max_entropy_parameter(m / n as f64);
            for zi in z.iter_mut() {
                *zi = zi.saturating_add(sample_with_parameter(p, &mut rng));
            }
            let fitness = dp.eval_integer(&z)?;
            offspring.push(IntegerIndividual { z, m, fitness });
        }
        offspring.sort_by(|p, q| by_fitness(p.fitness, q.fitness));
        offspring.truncate(MU);
        parents = offspring;
    }
    Ok(RunRecord::from_problem(Algorithm::IntEa, seed, dp))
}

/// (4 + 28) GA on the integer view.
pub fn ga_run(mut dp: DiscretizedProblem, seed: u64) -> Result<RunRecord> {
    let (lo, hi) = dp.integer_bounds()?;
    check_budget(&dp)?;
    let mut rng = rng_from_seed(seed);
    let n = dp.dim();
    let p_mut = 1.0 / n as f64;

    let mut population = Vec::with_capacity(MU + LAMBDA);
    for _ in 0..MU {
        let z = random_integer_vector(&lo, &hi, &mut rng);
        let fitness = dp.eval_integer(&z)?;
        population.push(IntegerIndividual { z, m: 0.0, fitness });
    }

    while !dp.solved() && dp.remaining() >= LAMBDA as u64 {
        for _ in 0..LAMBDA {
            let a = &population[rng.random_range(0..MU)];
            let b = &population[rng.random_range(0..MU)];
            let mut z = discrete_recombination(&a.z, &b.z, &mut rng);
            for (i, zi) in z.iter_mut().enumerate() {
                if rng.random_bool(p_mut) {
                    *zi = rng.random_range(lo[i]..=hi[i]);
                }
            }
            let fitness = dp.eval_integer(&z)?;
            population.push(IntegerIndividual { z, m: 0.0, fitness });
        }
        // Parents come first, so on ties the stable sort keeps them.
        population.sort_by(|p, q| by_fitness(p.fitness, q.fitness));
        population.truncate(MU);
    }
    Ok(RunRecord::from_problem(Algorithm::Ga, seed, dp))
}
