//! Fixed-target and fixed-budget performance measures over [`RunRecord`]s.
//!
//! All measures are computed from the improvement trajectory alone. A target
//! `phi` is hit at the first evaluation whose `delta` is strictly below
//! `phi`; the ECDF counts a target as reached once `phi >= delta_best`.

use crate::error::{Error, Result};
use crate::record::RunRecord;

/// Strictly decreasing list of positive targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    targets: Vec<f64>,
}

impl TargetSet {
    pub fn new(targets: Vec<f64>) -> Result<Self> {
        let ok = targets.iter().all(|&t| t > 0.0 && t.is_finite())
            && targets.windows(2).all(|w| w[0] > w[1])
            && !targets.is_empty();
        if !ok {
            return Err(Error::invalid("targets", "targets must be positive and strictly decreasing"));
        }
        Ok(Self { targets })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Number of targets reached by a best-so-far value.
    pub fn reached(&self, best_delta: f64) -> usize {
        // Descending order: reached targets form a prefix.
        self.targets.partition_point(|&phi| phi >= best_delta)
    }
}

/// 51 log-spaced targets `10^(2 - 0.2 k)`, `k = 0..=50`.
pub fn default_targets() -> TargetSet {
    let targets = (0..=50)
        .map(|k: i32| {
            let tenths = 10 - k; // exponent = tenths / 5
            if tenths % 5 == 0 {
                10f64.powi(tenths / 5)
            } else {
                10f64.powf(f64::from(tenths) / 5.0)
            }
        })
        .collect();
    TargetSet { targets }
}

/// First evaluation with `delta < phi`, or `None` if never.
pub fn hitting_time(record: &RunRecord, phi: f64) -> Option<u64> {
    record.trajectory.iter().find(|e| e.delta < phi).map(|e| e.eval)
}

fn non_empty(records: &[RunRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::EmptyGroup)
    } else {
        Ok(())
    }
}

/// Fraction of records hitting `phi` within `budget` evaluations.
pub fn success_rate(records: &[RunRecord], phi: f64, budget: u64) -> Result<f64> {
    non_empty(records)?;
    let hits = records
        .iter()
        .filter(|r| hitting_time(r, phi).is_some_and(|t| t <= budget))
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// `sum_i min(t_i, B_i) / #{t_i < inf}` where `B_i` is `budget` capped by
/// the evaluations record `i` actually consumed, and hits after `B_i` count
/// as misses. `+inf` without any hit.
pub fn ert(records: &[RunRecord], phi: f64, budget: u64) -> Result<f64> {
    non_empty(records)?;
    let mut spent = 0u64;
    let mut hits = 0u64;
    for r in records {
        let cap = budget.min(r.evaluations);
        match hitting_time(r, phi).filter(|&t| t <= cap) {
            Some(t) => {
                spent += t;
                hits += 1;
            }
            None => spent += cap,
        }
    }
    Ok(if hits == 0 {
        f64::INFINITY
    } else {
        spent as f64 / hits as f64
    })
}

/// Mean fraction of targets reached at each budget; one value per entry of
/// `budgets`.
pub fn ecdf(records: &[RunRecord], targets: &TargetSet, budgets: &[u64]) -> Result<Vec<(u64, f64)>> {
    non_empty(records)?;
    let total = (targets.len() * records.len()) as f64;
    Ok(budgets
        .iter()
        .map(|&b| {
            let reached: usize = records.iter().map(|r| targets.reached(r.best_delta_at(b))).sum();
            (b, reached as f64 / total)
        })
        .collect())
}

/// `count` log-spaced integer budgets from `low` to `high` (deduplicated,
/// ascending, both ends included).
pub fn log_budgets(low: u64, high: u64, count: usize) -> Vec<u64> {
    let (low, high) = (low.max(1), high.max(low.max(1)));
    if count < 2 || low == high {
        return vec![high];
    }
    let (a, b) = ((low as f64).ln(), (high as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            if i + 1 == count {
                high
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64
            }
        })
        .collect();
    out.dedup();
    out
}
