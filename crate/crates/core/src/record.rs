use std::fmt;
use std::str::FromStr;

use crate::discretizer::{DiscretizedProblem, Improvement, PlateauSize};
use crate::error::{Error, Result};
use crate::TARGET_PRECISION;

/// Optimizers the harness can schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Es,
    IntEa,
    Ga,
    CmaEs,
    /// CMA-ES with margin `alpha = 1 / (lambda n)`.
    CmaEsWm1,
    /// CMA-ES with margin `alpha = 2 / (lambda n)`.
    CmaEsWm2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Es,
        Algorithm::IntEa,
        Algorithm::Ga,
        Algorithm::CmaEs,
        Algorithm::CmaEsWm1,
        Algorithm::CmaEsWm2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Es => "es",
            Algorithm::IntEa => "intea",
            Algorithm::Ga => "ga",
            Algorithm::CmaEs => "cmaes",
            Algorithm::CmaEsWm1 => "cmaeswm1",
            Algorithm::CmaEsWm2 => "cmaeswm2",
        }
    }

    /// Algorithms that search the integer view and need a plateau size.
    pub fn needs_grid(self) -> bool {
        matches!(self, Algorithm::IntEa | Algorithm::Ga)
    }

    /// Margin multiplier `k` in `alpha = k / (lambda n)`.
    pub fn margin_factor(self) -> Option<f64> {
        match self {
            Algorithm::CmaEsWm1 => Some(1.0),
            Algorithm::CmaEsWm2 => Some(2.0),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid("algorithms", format!("unknown algorithm `{s}`")))
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub fid: u32,
    pub n: usize,
    pub instance_id: u64,
    pub rho: PlateauSize,
    pub seed: u64,
    pub budget: u64,
    /// Evaluations actually consumed.
    pub evaluations: u64,
    pub trajectory: Vec<Improvement>,
    pub final_delta: f64,
    /// First evaluation with `delta < 1e-8`.
    pub hit_1e8_at: Option<u64>,
    /// The run aborted (panic or numerical failure) and counts as unsuccessful.
    pub failed: bool,
}

impl RunRecord {
    /// Closes a finished run over `dp`.
    pub fn from_problem(algorithm: Algorithm, seed: u64, dp: DiscretizedProblem) -> Self {
        let inst = dp.instance();
        let (fid, n, instance_id) = (inst.fid(), inst.dim(), inst.instance_id());
        let (rho, budget, evaluations) = (dp.rho(), dp.budget(), dp.evaluations());
        let trajectory = dp.into_trajectory();
        Self::from_parts(algorithm, fid, n, instance_id, rho, seed, budget, evaluations, trajectory)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        algorithm: Algorithm,
        fid: u32,
        n: usize,
        instance_id: u64,
        rho: PlateauSize,
        seed: u64,
        budget: u64,
        evaluations: u64,
        trajectory: Vec<Improvement>,
    ) -> Self {
        let final_delta = trajectory.last().map_or(f64::INFINITY, |e| e.delta);
        let hit_1e8_at = trajectory
            .iter()
            .find(|e| e.delta < TARGET_PRECISION)
            .map(|e| e.eval);
        Self {
            algorithm,
            fid,
            n,
            instance_id,
            rho,
            seed,
            budget,
            evaluations,
            trajectory,
            final_delta,
            hit_1e8_at,
            failed: false,
        }
    }

    /// Placeholder for a run that aborted: no improvements, full budget charged.
    pub fn failed(
        algorithm: Algorithm,
        fid: u32,
        n: usize,
        instance_id: u64,
        rho: PlateauSize,
        seed: u64,
        budget: u64,
    ) -> Self {
        let mut rec = Self::from_parts(algorithm, fid, n, instance_id, rho, seed, budget, budget, Vec::new());
        rec.failed = true;
        rec
    }

    /// Best-so-far delta after `b` evaluations (`+inf` before the first
    /// finite evaluation).
    pub fn best_delta_at(&self, b: u64) -> f64 {
        let idx = self.trajectory.partition_point(|e| e.eval <= b);
        if idx == 0 {
            f64::INFINITY
        } else {
            self.trajectory[idx - 1].delta
        }
    }
}
