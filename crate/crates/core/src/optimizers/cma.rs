//! (mu_W, lambda)-CMA-ES with cumulative step-size adaptation, and the margin
//! extension for discretized variables.
//!
//! Candidates are drawn as `x = m + sigma * A * B * D * z` with `z ~ N(0, I)`,
//! where `A` is the diagonal margin matrix (identity without margin). The
//! distribution update sees the unscaled step `y = B D z`; `A` only changes
//! where candidates are evaluated. After every update the margin correction
//! adjusts `m` and `A` coordinate-wise so that leaving the plateau of the mean
//! keeps probability at least `alpha` on each side.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use super::by_fitness;
use crate::discretizer::{plateau_index, DiscretizedProblem};
use crate::error::{Error, Result};
use crate::record::{Algorithm, RunRecord};
use crate::seed::{rng_from_seed, BenchRng};

/// Marginal scales below this are treated as collapsed.
const DEGENERATE_SCALE: f64 = 1e-300;
/// Margin-corrected tail probabilities are kept inside `[EPS, 0.5 - EPS]`.
const TAIL_EPS: f64 = 1e-10;
/// Ulp steps allowed when placing an edge-plateau mean.
const MAX_NUDGES: usize = 64;

/// Strategy parameters with the usual defaults for dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    pub n: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    /// `E||N(0, I)||`.
    pub chi_n: f64,
}

impl CmaParams {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        let lambda = 4 + (3.0 * nf.ln()).floor() as usize;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            n,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// Default margin `1 / (lambda n)`.
pub fn default_margin(n: usize) -> f64 {
    1.0 / (CmaParams::new(n).lambda as f64 * n as f64)
}

/// Distribution state. `cov = B diag(D)^2 B^T` is cached in `b`, `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub b: DMatrix<f64>,
    pub d: DVector<f64>,
    pub generation: u64,
}

impl CmaState {
    pub fn new(mean: DVector<f64>, sigma: f64) -> Self {
        let n = mean.len();
        Self {
            mean,
            sigma,
            cov: DMatrix::identity(n, n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            b: DMatrix::identity(n, n),
            d: DVector::from_element(n, 1.0),
            generation: 0,
        }
    }

    /// Recomputes the eigen cache from `cov`. Returns `false` if the matrix
    /// is no longer finite.
    fn refresh_eigen(&mut self) -> bool {
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;
        if self.cov.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let eig = SymmetricEigen::new(self.cov.clone());
        debug_assert!(eig.eigenvalues.iter().all(|&v| v > 0.0), "covariance lost definiteness");
        self.d = eig.eigenvalues.map(|v| v.max(f64::MIN_POSITIVE).sqrt());
        self.b = eig.eigenvectors;
        true
    }

    /// Standard deviation of coordinate `k` under `N(m, sigma^2 C)`.
    pub fn marginal_std(&self, k: usize) -> f64 {
        self.sigma * self.cov[(k, k)].sqrt()
    }
}

/// Diagonal of the margin matrix `A` and the margin level.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginState {
    pub a: DVector<f64>,
    pub alpha: f64,
}

impl MarginState {
    pub fn new(n: usize, alpha: f64) -> Self {
        Self {
            a: DVector::from_element(n, 1.0),
            alpha,
        }
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Probabilities that coordinate `k` of a candidate lands below / above the
/// plateau containing the mean, under `N(m, sigma^2 A C A)`. Outer plateaus
/// have one side that is out of the box; that side reports `0`.
pub fn escape_probabilities(
    state: &CmaState,
    margin: &MarginState,
    dp: &DiscretizedProblem,
    k: usize,
) -> Result<(f64, f64)> {
    let rho = dp.rho().value().ok_or(Error::MarginRequiresDiscretization)?;
    let (lo, hi) = dp.plateau_span()?;
    let scale = margin.a[k] * state.marginal_std(k);
    let m = state.mean[k];
    let idx = plateau_index(m, rho).clamp(lo, hi);
    let normal = std_normal();
    let below = if idx > lo {
        normal.cdf((idx as f64 * rho - m) / scale)
    } else {
        0.0
    };
    let above = if idx < hi {
        normal.sf(((idx + 1) as f64 * rho - m) / scale)
    } else {
        0.0
    };
    Ok((below, above))
}

/// Lower-bounds the marginal probability of leaving the mean's plateau.
///
/// Per coordinate, with `s = sigma * A_kk * sqrt(C_kk)`:
///
/// * mean on an outermost plateau: if crossing its single inner edge has
///   probability below `alpha`, the mean is moved toward that edge until
///   the probability reaches `alpha`;
/// * otherwise both tail masses are lifted to at least `alpha`, the excess
///   is taken from the three masses in proportion to their surplus over
///   `alpha`, and `m_k` and `A_kk` are solved from the two target tails.
///
/// `alpha = 0` is the identity. `sigma` and `C` are never modified.
pub fn margin_correction(state: &mut CmaState, margin: &mut MarginState, dp: &DiscretizedProblem) -> Result<()> {
    let alpha = margin.alpha;
    if alpha == 0.0 {
        return Ok(());
    }
    let rho = dp.rho().value().ok_or(Error::MarginRequiresDiscretization)?;
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidMargin(alpha));
    }
    let (lo, hi) = dp.plateau_span()?;
    if lo == hi {
        return Ok(());
    }
    let normal = std_normal();
    let quantile = |p: f64| normal.inverse_cdf(1.0 - p);

    for k in 0..state.mean.len() {
        let c_std = state.cov[(k, k)].sqrt();
        let scale = state.sigma * margin.a[k] * c_std;
        if !(scale >= DEGENERATE_SCALE) || !scale.is_finite() {
            return Err(Error::DegenerateMarginal { coordinate: k, scale });
        }
        let m = state.mean[k];
        let idx = plateau_index(m, rho).clamp(lo, hi);

        if idx == lo || idx == hi {
            // Single inner edge; the other side is the box boundary.
            let (edge, inward) = if idx == lo {
                ((lo + 1) as f64 * rho, 1.0)
            } else {
                (hi as f64 * rho, -1.0)
            };
            let cross = normal.sf(inward * (edge - m) / scale);
            if cross < alpha {
                let mut m = edge - inward * scale * quantile(alpha);
                // Rounding of `m` matters when `scale` is tiny next to `|edge|`.
                for _ in 0..MAX_NUDGES {
                    if normal.sf(inward * (edge - m) / scale) >= alpha {
                        break;
                    }
                    m = if inward > 0.0 { m.next_up() } else { m.next_down() };
                }
                state.mean[k] = m;
            }
            continue;
        }

        let low_edge = idx as f64 * rho;
        let up_edge = (idx + 1) as f64 * rho;
        let below = normal.cdf((low_edge - m) / scale);
        let above = normal.sf((up_edge - m) / scale);
        if below >= alpha && above >= alpha {
            continue;
        }
        let inside = (1.0 - below - above).max(0.0);
        let below_c = below.max(alpha);
        let above_c = above.max(alpha);
        let total = below_c + inside + above_c;
        let excess = total - 1.0;
        let surplus = total - 3.0 * alpha;
        let target_below = (below_c - excess * (below_c - alpha) / surplus).clamp(TAIL_EPS, 0.5 - TAIL_EPS);
        let target_above = (above_c - excess * (above_c - alpha) / surplus).clamp(TAIL_EPS, 0.5 - TAIL_EPS);

        let q_low = quantile(target_below);
        let q_up = quantile(target_above);
        margin.a[k] = (up_edge - low_edge) / ((q_low + q_up) * state.sigma * c_std);
        state.mean[k] = (low_edge * q_up + up_edge * q_low) / (q_low + q_up);
    }
    Ok(())
}

/// One CMA-ES optimizer bound to a problem's dimension and box.
#[derive(Debug, Clone)]
pub struct CmaEs {
    params: CmaParams,
    state: CmaState,
    margin: Option<MarginState>,
    rng: BenchRng,
}

impl CmaEs {
    /// Fresh optimizer: uniform random mean in the box, `sigma = 0.3 (ub - lb)`.
    pub fn new(dp: &DiscretizedProblem, alpha: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.5).contains(&alpha) {
            return Err(Error::InvalidMargin(alpha));
        }
        if alpha > 0.0 && dp.rho().is_none() {
            return Err(Error::MarginRequiresDiscretization);
        }
        let n = dp.dim();
        let params = CmaParams::new(n);
        if dp.budget() < params.lambda as u64 {
            return Err(Error::BudgetTooSmall {
                budget: dp.budget(),
                lambda: params.lambda,
            });
        }
        let mut rng = rng_from_seed(seed);
        let dom = *dp.instance().domain();
        let mean = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(dom.lb()..=dom.ub())));
        let state = CmaState::new(mean, 0.3 * dom.width());
        let margin = (alpha > 0.0).then(|| MarginState::new(n, alpha));
        Ok(Self {
            params,
            state,
            margin,
            rng,
        })
    }

    pub fn params(&self) -> &CmaParams {
        &self.params
    }

    pub fn state(&self) -> &CmaState {
        &self.state
    }

    pub fn margin(&self) -> Option<&MarginState> {
        self.margin.as_ref()
    }

    /// Largest marginal standard deviation of the sampling distribution.
    pub fn max_marginal_std(&self) -> f64 {
        (0..self.params.n)
            .map(|k| {
                let a = self.margin.as_ref().map_or(1.0, |m| m.a[k]);
                a * self.state.marginal_std(k)
            })
            .fold(0.0, f64::max)
    }

    /// Runs one generation. Returns `false` without evaluating anything when
    /// fewer than `lambda` evaluations remain or the target is already hit,
    /// and `false` after the generation if the state became non-finite.
    pub fn step(&mut self, dp: &mut DiscretizedProblem) -> Result<bool> {
        let p = &self.params;
        let (n, lambda) = (p.n, p.lambda);
        if dp.solved() || dp.remaining() < lambda as u64 {
            return Ok(false);
        }

        let st = &self.state;
        let mut steps: Vec<DVector<f64>> = Vec::with_capacity(lambda);
        let mut fitness: Vec<f64> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::from_iterator(n, (0..n).map(|_| self.rng.sample::<f64, _>(StandardNormal)));
            let y = &st.b * z.component_mul(&st.d);
            let x: Vec<f64> = (0..n)
                .map(|k| {
                    let a = self.margin.as_ref().map_or(1.0, |m| m.a[k]);
                    st.mean[k] + st.sigma * a * y[k]
                })
                .collect();
            fitness.push(dp.eval_continuous(&x)?);
            steps.push(y);
        }

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&i, &j| by_fitness(fitness[i], fitness[j]));

        // Infeasible candidates rank last, so the feasible part of the
        // selection is a prefix. Re-weight over that prefix.
        let selected: Vec<usize> = order[..p.mu]
            .iter()
            .copied()
            .take_while(|&i| fitness[i].is_finite())
            .collect();
        if selected.is_empty() {
            self.state.generation += 1;
            return Ok(true);
        }
        let wsum: f64 = p.weights[..selected.len()].iter().sum();
        let weights: Vec<f64> = p.weights[..selected.len()].iter().map(|w| w / wsum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let mut y_w = DVector::zeros(n);
        for (&i, &w) in selected.iter().zip(&weights) {
            y_w.axpy(w, &steps[i], 1.0);
        }

        let st = &mut self.state;
        st.mean.axpy(st.sigma, &y_w, 1.0);

        // C^{-1/2} y_w = B D^{-1} B^T y_w
        let inv_sqrt_y = &st.b * (st.b.tr_mul(&y_w)).component_div(&st.d);
        st.p_sigma = &st.p_sigma * (1.0 - p.c_sigma) + inv_sqrt_y * (p.c_sigma * (2.0 - p.c_sigma) * mu_eff).sqrt();
        let ps_norm = st.p_sigma.norm();
        let decay = 1.0 - (1.0 - p.c_sigma).powf(2.0 * (st.generation + 1) as f64);
        let h_sigma = ps_norm / decay.sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        st.p_c = &st.p_c * (1.0 - p.c_c) + &y_w * (h * (p.c_c * (2.0 - p.c_c) * mu_eff).sqrt());
        let delta_h = (1.0 - h) * p.c_c * (2.0 - p.c_c);

        let mut rank_mu = DMatrix::zeros(n, n);
        for (&i, &w) in selected.iter().zip(&weights) {
            rank_mu.ger(w, &steps[i], &steps[i], 1.0);
        }
        let rank_one = &st.p_c * st.p_c.transpose();
        st.cov = &st.cov * (1.0 - p.c_1 - p.c_mu + p.c_1 * delta_h) + rank_one * p.c_1 + rank_mu * p.c_mu;
        st.sigma *= ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        st.generation += 1;

        if !st.sigma.is_finite() || !st.refresh_eigen() {
            return Ok(false);
        }

        if let Some(margin) = self.margin.as_mut() {
            margin_correction(&mut self.state, margin, dp)?;
            #[cfg(debug_assertions)]
            for k in 0..n {
                let (below, above) = escape_probabilities(&self.state, margin, dp, k)?;
                debug_assert!(below + above >= margin.alpha - 1e-9, "margin violated at {k}");
            }
        }
        Ok(true)
    }
}

/// Runs CMA-ES (margin `alpha`, `0` for the canonical algorithm) until the
/// budget is spent or `delta < 1e-8`.
pub fn cma_run(mut dp: DiscretizedProblem, seed: u64, alpha: f64) -> Result<RunRecord> {
    let mut es = CmaEs::new(&dp, alpha, seed)?;
    while es.step(&mut dp)? {}
    let label = if alpha > 0.0 { Algorithm::CmaEsWm1 } else { Algorithm::CmaEs };
    Ok(RunRecord::from_problem(label, seed, dp))
}
