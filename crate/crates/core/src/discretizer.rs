//! Plateau-size discretization of a continuous problem.
//!
//! A point `x` is snapped to the left edge of its plateau, translated so that
//! the optimum `x*` is a grid point, and clamped back into the box:
//!
//! ```text
//! T_rho(x)   = x - (x mod rho)              (floored modulo)
//! T_x*(x_r)  = clamp(x_r + (x* mod rho))
//! f_rho(x)   = f(T_x*(T_rho(x)))            continuous view
//! f_rho(z)   = f(T_x*(z * rho))             integer view
//! ```
//!
//! With `k = floor(x / rho)` and `k* = floor(x* / rho)` the translated point is
//! `x* + (k - k*) * rho`, which is how it is computed here. The two forms are
//! equal in exact arithmetic; the offset form keeps the optimum bit-exact and
//! makes every point of a plateau map to the same floating-point value.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::TARGET_PRECISION;

/// `x / rho` closer than this to an integer counts as lying on the edge.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// Optional plateau size; `None` leaves the problem continuous.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlateauSize(Option<f64>);

impl PlateauSize {
    pub const NONE: PlateauSize = PlateauSize(None);

    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidPlateauSize(rho));
        }
        Ok(PlateauSize(Some(rho)))
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    pub fn is_none(self) -> bool {
        self.0.is_none()
    }

    /// `{None, 0.001, 0.01, 0.1, 0.5, 1.0, 2.0}`.
    pub fn experiment_set() -> [PlateauSize; 7] {
        [
            PlateauSize(None),
            PlateauSize(Some(0.001)),
            PlateauSize(Some(0.01)),
            PlateauSize(Some(0.1)),
            PlateauSize(Some(0.5)),
            PlateauSize(Some(1.0)),
            PlateauSize(Some(2.0)),
        ]
    }

    /// Stable 64-bit key for seeding (`0` for `None`).
    pub fn key(self) -> u64 {
        self.0.map_or(0, f64::to_bits)
    }
}

impl fmt::Display for PlateauSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("None"),
            // `1.0` rather than `1`
            Some(rho) => write!(f, "{rho:?}"),
        }
    }
}

impl FromStr for PlateauSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") || s.is_empty() {
            return Ok(PlateauSize::NONE);
        }
        let rho: f64 = s.parse().map_err(|_| Error::InvalidPlateauSize(f64::NAN))?;
        PlateauSize::new(rho)
    }
}

/// Index of the plateau containing `x`: `floor(x / rho)`, except that values
/// within [`EDGE_TOLERANCE`] of an edge are placed on that edge.
pub fn plateau_index(x: f64, rho: f64) -> i64 {
    let q = x / rho;
    let r = q.round();
    if (q - r).abs() < EDGE_TOLERANCE {
        r as i64
    } else {
        q.floor() as i64
    }
}

fn ceil_index(x: f64, rho: f64) -> i64 {
    let q = x / rho;
    let r = q.round();
    if (q - r).abs() < EDGE_TOLERANCE {
        r as i64
    } else {
        q.ceil() as i64
    }
}

/// Snaps every coordinate to the left edge of its plateau.
pub fn snap_to_plateau(x: &[f64], rho: f64) -> Result<Vec<f64>> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidPlateauSize(rho));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(i));
    }
    Ok(x.iter().map(|&xi| plateau_index(xi, rho) as f64 * rho).collect())
}

/// One improvement of the best-so-far value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    /// 1-based evaluation index.
    pub eval: u64,
    /// `f - f_opt` of the improving evaluation.
    pub delta: f64,
}

/// One sample of a landscape grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePoint {
    pub x: Vec<f64>,
    pub f: f64,
}

/// A problem instance seen through a plateau size, with a metered budget.
///
/// Both evaluation views share one counter and one improvement trajectory, so
/// every optimizer is charged identically. Out-of-box proposals evaluate to
/// `+inf` and still cost one evaluation.
#[derive(Debug, Clone)]
pub struct DiscretizedProblem {
    inst: Arc<ProblemInstance>,
    rho: PlateauSize,
    translation: Vec<f64>,
    opt_index: Vec<i64>,
    budget: u64,
    evals: u64,
    best_delta: f64,
    trajectory: Vec<Improvement>,
}

impl DiscretizedProblem {
    pub fn new(inst: Arc<ProblemInstance>, rho: PlateauSize, budget: u64) -> Result<Self> {
        let n = inst.dim();
        let (translation, opt_index) = match rho.value() {
            None => (vec![0.0; n], Vec::new()),
            Some(r) => {
                if r > inst.domain().width() {
                    return Err(Error::InvalidPlateauSize(r));
                }
                let idx: Vec<i64> = inst.x_opt().iter().map(|&v| plateau_index(v, r)).collect();
                let t = inst
                    .x_opt()
                    .iter()
                    .zip(&idx)
                    .map(|(&v, &k)| (v - k as f64 * r).max(0.0))
                    .collect();
                (t, idx)
            }
        };
        Ok(Self {
            inst,
            rho,
            translation,
            opt_index,
            budget,
            evals: 0,
            best_delta: f64::INFINITY,
            trajectory: Vec::new(),
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.inst
    }

    pub fn shared_instance(&self) -> Arc<ProblemInstance> {
        Arc::clone(&self.inst)
    }

    pub fn dim(&self) -> usize {
        self.inst.dim()
    }

    pub fn rho(&self) -> PlateauSize {
        self.rho
    }

    /// Per-coordinate translation `x* mod rho` (all zero when continuous).
    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn evaluations(&self) -> u64 {
        self.evals
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.evals
    }

    pub fn best_delta(&self) -> f64 {
        self.best_delta
    }

    /// Best-so-far is below the `1e-8` success threshold.
    pub fn solved(&self) -> bool {
        self.best_delta < TARGET_PRECISION
    }

    pub fn trajectory(&self) -> &[Improvement] {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> Vec<Improvement> {
        self.trajectory
    }

    fn translate_index(&self, i: usize, k: i64, rho: f64) -> f64 {
        let dom = self.inst.domain();
        let y = self.inst.x_opt()[i] + (k - self.opt_index[i]) as f64 * rho;
        y.clamp(dom.lb(), dom.ub())
    }

    /// Translates snapped coordinates so the optimum lies on the grid, then
    /// clamps into the box. Identity (apart from the clamp) when continuous.
    pub fn shift_and_clamp(&self, x_rho: &[f64]) -> Vec<f64> {
        let dom = self.inst.domain();
        match self.rho.value() {
            None => x_rho.iter().map(|v| v.clamp(dom.lb(), dom.ub())).collect(),
            Some(rho) => x_rho
                .iter()
                .enumerate()
                .map(|(i, &v)| self.translate_index(i, (v / rho).round() as i64, rho))
                .collect(),
        }
    }

    /// The point at which `f` is evaluated for a continuous proposal, or
    /// `None` when the proposal lies outside the box.
    pub fn image_of(&self, x: &[f64]) -> Option<Vec<f64>> {
        if !self.inst.domain().contains(x) {
            return None;
        }
        Some(match self.rho.value() {
            None => x.to_vec(),
            Some(rho) => x
                .iter()
                .enumerate()
                .map(|(i, &v)| self.translate_index(i, plateau_index(v, rho), rho))
                .collect(),
        })
    }

    /// `f_rho(x)` without touching the counters.
    pub fn value_continuous(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        Ok(self.image_of(x).map_or(f64::INFINITY, |y| self.inst.value(&y)))
    }

    /// `f_rho(z)` without touching the counters.
    pub fn value_integer(&self, z: &[i64]) -> Result<f64> {
        let rho = self.rho.value().ok_or(Error::NotDiscretized)?;
        self.check_len(z.len())?;
        let (lo, hi) = self.integer_range(rho);
        if z.iter().any(|&zi| zi < lo || zi > hi) {
            return Ok(f64::INFINITY);
        }
        let y: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(i, &zi)| self.translate_index(i, zi, rho))
            .collect();
        Ok(self.inst.value(&y))
    }

    /// Counted continuous evaluation.
    pub fn eval_continuous(&mut self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        self.check_budget()?;
        let f = self.value_continuous(x)?;
        self.record(f);
        Ok(f)
    }

    /// Counted integer evaluation. `z` outside [`Self::integer_bounds`]
    /// evaluates to `+inf`.
    pub fn eval_integer(&mut self, z: &[i64]) -> Result<f64> {
        if self.rho.is_none() {
            return Err(Error::NotDiscretized);
        }
        self.check_len(z.len())?;
        self.check_budget()?;
        let f = self.value_integer(z)?;
        self.record(f);
        Ok(f)
    }

    fn integer_range(&self, rho: f64) -> (i64, i64) {
        let dom = self.inst.domain();
        (ceil_index(dom.lb(), rho), plateau_index(dom.ub(), rho))
    }

    /// `(ceil(lb / rho), floor(ub / rho))` for every coordinate.
    pub fn integer_bounds(&self) -> Result<(Vec<i64>, Vec<i64>)> {
        let rho = self.rho.value().ok_or(Error::NotDiscretized)?;
        let (lo, hi) = self.integer_range(rho);
        let n = self.dim();
        Ok((vec![lo; n], vec![hi; n]))
    }

    /// Lowest and highest plateau index any in-box continuous point falls
    /// into. Wider than [`Self::integer_bounds`] when `lb` is not a multiple
    /// of `rho`.
    pub fn plateau_span(&self) -> Result<(i64, i64)> {
        let rho = self.rho.value().ok_or(Error::NotDiscretized)?;
        let dom = self.inst.domain();
        Ok((plateau_index(dom.lb(), rho), plateau_index(dom.ub(), rho)))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    fn check_budget(&self) -> Result<()> {
        if self.evals >= self.budget {
            return Err(Error::BudgetExhausted(self.budget));
        }
        Ok(())
    }

    fn record(&mut self, f: f64) {
        self.evals += 1;
        let delta = f - self.inst.f_opt();
        if delta < self.best_delta {
            self.best_delta = delta;
            self.trajectory.push(Improvement {
                eval: self.evals,
                delta,
            });
        }
    }

    /// Uniform grid over `[lb, ub]^n` (`n` in {1, 2}) evaluated through the
    /// continuous view. Counters are left untouched.
    pub fn landscape_grid(&self, points_per_axis: usize) -> Result<Vec<LandscapePoint>> {
        let n = self.dim();
        if n > 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidDimension(points_per_axis));
        }
        let dom = self.inst.domain();
        let step = dom.width() / (points_per_axis - 1) as f64;
        let axis: Vec<f64> = (0..points_per_axis)
            .map(|i| {
                if i + 1 == points_per_axis {
                    dom.ub()
                } else {
                    dom.lb() + i as f64 * step
                }
            })
            .collect();
        let coords: Vec<Vec<f64>> = if n == 1 {
            axis.iter().map(|&a| vec![a]).collect()
        } else {
            axis.iter()
                .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
                .collect()
        };
        coords
            .into_iter()
            .map(|x| {
                let f = self.value_continuous(&x)?;
                Ok(LandscapePoint { x, f })
            })
            .collect()
    }
}

/// Writes a landscape grid as CSV with header `x1[,x2],f`.
pub fn write_landscape_csv<W: Write>(points: &[LandscapePoint], mut out: W) -> std::io::Result<()> {
    let n = points.first().map_or(1, |p| p.x.len());
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.push("f".into());
    writeln!(out, "{}", header.join(","))?;
    for p in points {
        for x in &p.x {
            write!(out, "{x},")?;
        }
        writeln!(out, "{}", p.f)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_instance, make_landscape_instance, Domain, FunctionId};

    fn sphere(x_opt: Vec<f64>) -> Arc<ProblemInstance> {
        let dom = Domain::standard(x_opt.len()).unwrap();
        Arc::new(ProblemInstance::new(FunctionId::Sphere, dom, 0, x_opt, 0.0, None).unwrap())
    }

    fn rho(v: f64) -> PlateauSize {
        PlateauSize::new(v).unwrap()
    }

    #[test]
    fn snap_examples() {
        assert_eq!(snap_to_plateau(&[1.3], 0.5).unwrap(), vec![1.0]);
        assert_eq!(snap_to_plateau(&[-1.3], 0.5).unwrap(), vec![-1.5]);
        assert_eq!(snap_to_plateau(&[2.0], 0.5).unwrap(), vec![2.0]);
        assert!(matches!(snap_to_plateau(&[1.0], 0.0), Err(Error::InvalidPlateauSize(_))));
        assert!(matches!(snap_to_plateau(&[1.0], -0.5), Err(Error::InvalidPlateauSize(_))));
    }

    #[test]
    fn boundary_optimum_can_fall_off_the_integer_grid() {
        // x* = -5 lies on plateau -3 at rho 2, left of ceil(-5 / 2) = -2.
        let dp = DiscretizedProblem::new(sphere(vec![-5.0]), rho(2.0), 1).unwrap();
        assert_eq!(dp.value_continuous(&[-4.5]).unwrap(), 0.0);
        assert_eq!(dp.value_integer(&[-3]).unwrap(), f64::INFINITY);
        assert_eq!(dp.value_integer(&[-2]).unwrap(), 4.0);
    }

    #[test]
    fn snap_tolerates_binary_jitter() {
        // 0.3 / 0.1 = 2.9999999999999996 in binary floating point.
        assert_eq!(plateau_index(0.3, 0.1), 3);
        assert_eq!(plateau_index(-0.3, 0.1), -3);
        assert_eq!(plateau_index(0.35, 0.1), 3);
    }

    #[test]
    fn shift_examples() {
        let dp = DiscretizedProblem::new(sphere(vec![0.2]), rho(0.5), 10).unwrap();
        assert!((dp.translation()[0] - 0.2).abs() < 1e-15);
        assert!((dp.shift_and_clamp(&[1.0])[0] - 1.2).abs() < 1e-15);

        let dp = DiscretizedProblem::new(sphere(vec![1.7]), rho(2.0), 10).unwrap();
        assert_eq!(dp.shift_and_clamp(&[4.0]), vec![5.0]);

        let x_opt = vec![-0.1, 3.3];
        let dp = DiscretizedProblem::new(sphere(x_opt.clone()), rho(0.1), 10).unwrap();
        let snapped = snap_to_plateau(&x_opt, 0.1).unwrap();
        assert_eq!(dp.shift_and_clamp(&snapped), x_opt);
    }

    #[test]
    fn translation_in_unit_plateau() {
        for fid in [1, 2, 5, 8, 9] {
            let inst = Arc::new(make_instance(fid, 5, 1).unwrap());
            for r in PlateauSize::experiment_set() {
                let dp = DiscretizedProblem::new(inst.clone(), r, 1).unwrap();
                let bound = r.value().unwrap_or(f64::MIN_POSITIVE);
                assert!(dp.translation().iter().all(|&t| (0.0..bound).contains(&t)) || r.is_none());
            }
        }
    }

    #[test]
    fn continuous_examples() {
        let mut dp = DiscretizedProblem::new(sphere(vec![0.0]), rho(2.0), 10).unwrap();
        assert_eq!(dp.eval_continuous(&[0.9]).unwrap(), 0.0);
        assert_eq!(dp.eval_continuous(&[5.1]).unwrap(), f64::INFINITY);
        assert_eq!(dp.eval_continuous(&[f64::NAN]).unwrap(), f64::INFINITY);
        assert_eq!(dp.evaluations(), 3);

        let inst = Arc::new(make_instance(8, 3, 0).unwrap());
        let mut dp = DiscretizedProblem::new(inst.clone(), PlateauSize::NONE, 10).unwrap();
        let x = [0.3, -1.2, 2.5];
        assert_eq!(dp.eval_continuous(&x).unwrap(), inst.evaluate_raw(&x).unwrap());
        assert!(matches!(
            dp.eval_continuous(&[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let mut dp = DiscretizedProblem::new(sphere(vec![0.0]), rho(0.5), 2).unwrap();
        dp.eval_continuous(&[1.0]).unwrap();
        dp.eval_integer(&[3]).unwrap();
        assert!(matches!(dp.eval_continuous(&[1.0]), Err(Error::BudgetExhausted(2))));
        assert!(matches!(dp.eval_integer(&[1]), Err(Error::BudgetExhausted(2))));
        assert_eq!(dp.evaluations(), 2);
    }

    #[test]
    fn integer_examples() {
        let mut dp = DiscretizedProblem::new(sphere(vec![0.2]), rho(0.5), 100).unwrap();
        let x = [1.3];
        let z = [(snap_to_plateau(&x, 0.5).unwrap()[0] / 0.5).round() as i64];
        assert_eq!(dp.eval_integer(&z).unwrap(), dp.eval_continuous(&x).unwrap());

        let at_lb = dp.eval_integer(&[-10]).unwrap();
        let expected = dp.instance().evaluate_raw(&dp.shift_and_clamp(&[-5.0])).unwrap();
        assert_eq!(at_lb, expected);
        assert_eq!(dp.eval_integer(&[11]).unwrap(), f64::INFINITY);

        let mut cont = DiscretizedProblem::new(sphere(vec![0.2]), PlateauSize::NONE, 10).unwrap();
        assert!(matches!(cont.eval_integer(&[1]), Err(Error::NotDiscretized)));
        assert!(matches!(cont.integer_bounds(), Err(Error::NotDiscretized)));
    }

    #[test]
    fn integer_bounds_examples() {
        for (r, lo, hi) in [(0.5, -10, 10), (2.0, -2, 2), (1.0, -5, 5), (0.1, -50, 50), (0.001, -5000, 5000)] {
            let dp = DiscretizedProblem::new(sphere(vec![0.0]), rho(r), 1).unwrap();
            assert_eq!(dp.integer_bounds().unwrap(), (vec![lo], vec![hi]), "rho = {r}");
        }
        let dp = DiscretizedProblem::new(sphere(vec![0.0]), rho(2.0), 1).unwrap();
        assert_eq!(dp.plateau_span().unwrap(), (-3, 2));
    }

    #[test]
    fn trajectory_is_strictly_improving() {
        let mut dp = DiscretizedProblem::new(sphere(vec![0.0, 0.0]), PlateauSize::NONE, 100).unwrap();
        for x in [[3.0, 3.0], [9.0, 0.0], [1.0, 1.0], [1.0, 1.0], [2.0, 0.0], [0.5, 0.0]] {
            dp.eval_continuous(&x).unwrap();
        }
        let t = dp.trajectory();
        assert_eq!(
            t,
            &[
                Improvement { eval: 1, delta: 18.0 },
                Improvement { eval: 3, delta: 2.0 },
                Improvement { eval: 6, delta: 0.25 }
            ]
        );
        assert_eq!(dp.best_delta(), 0.25);
    }

    #[test]
    fn rho_larger_than_domain_rejected() {
        assert!(DiscretizedProblem::new(sphere(vec![0.0]), rho(10.5), 1).is_err());
        assert!("0".parse::<PlateauSize>().is_err());
        assert_eq!("None".parse::<PlateauSize>().unwrap(), PlateauSize::NONE);
        assert_eq!(PlateauSize::new(1.0).unwrap().to_string(), "1.0");
        assert_eq!(PlateauSize::new(0.001).unwrap().to_string(), "0.001");
        assert_eq!("0.5".parse::<PlateauSize>().unwrap(), rho(0.5));
    }

    #[test]
    fn landscape_1d_sphere_plateaus() {
        let inst = Arc::new(make_landscape_instance(1, 1, 0).unwrap());
        let dp = DiscretizedProblem::new(inst.clone(), rho(2.0), 0).unwrap();
        let grid = dp.landscape_grid(101).unwrap();
        assert_eq!(grid.len(), 101);
        let mut values: Vec<f64> = grid.iter().map(|p| p.f).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        assert!(values.len() <= 7, "{} distinct levels", values.len());
        assert_eq!(dp.evaluations(), 0);

        let cont = DiscretizedProblem::new(inst, PlateauSize::NONE, 0).unwrap();
        let grid = cont.landscape_grid(101).unwrap();
        for w in grid.windows(3) {
            // Second difference of a parabola on a uniform grid is positive.
            assert!(w[0].f + w[2].f - 2.0 * w[1].f > 0.0);
        }
    }

    #[test]
    fn landscape_2d_matches_pointwise() {
        let inst = Arc::new(make_instance(8, 2, 0).unwrap());
        let dp = DiscretizedProblem::new(inst.clone(), rho(0.5), 0).unwrap();
        let grid = dp.landscape_grid(41).unwrap();
        assert_eq!(grid.len(), 41 * 41);
        for p in &grid {
            // Independent recomputation via snap, translate and clamp.
            let snapped = snap_to_plateau(&p.x, 0.5).unwrap();
            let y: Vec<f64> = snapped
                .iter()
                .zip(dp.translation())
                .map(|(s, t)| (s + t).clamp(-5.0, 5.0))
                .collect();
            let expected = inst.evaluate_raw(&y).unwrap();
            assert!((p.f - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
        let mut buf = Vec::new();
        write_landscape_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2,f\n"));
        assert_eq!(text.lines().count(), 41 * 41 + 1);

        let big = DiscretizedProblem::new(Arc::new(make_instance(1, 3, 0).unwrap()), rho(0.5), 0).unwrap();
        assert!(matches!(big.landscape_grid(5), Err(Error::UnsupportedDimension(3))));
    }
}
