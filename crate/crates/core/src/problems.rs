//! Unimodal continuous test functions with seeded instances.
//!
//! Five functions are provided: Sphere (F1), Ellipsoid (F2), Linear Slope (F5),
//! Rosenbrock (F8) and rotated Rosenbrock (F9). An instance fixes the optimum
//! location `x_opt`, the optimal value `f_opt` and, for F9, an orthogonal
//! rotation. Instances are a pure function of `(fid, n, instance_id)`.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed::{hash_words, rng_from_seed};

pub const SUPPORTED_FUNCTIONS: [u32; 5] = [1, 2, 5, 8, 9];

/// Default lower bound of every coordinate.
pub const DEFAULT_LB: f64 = -5.0;
/// Default upper bound of every coordinate.
pub const DEFAULT_UB: f64 = 5.0;

/// Interior optima are drawn from `[-OPT_RANGE, OPT_RANGE]^n`.
const OPT_RANGE: f64 = 4.0;
const FOPT_RANGE: f64 = 100.0;

/// Hypercube search domain `[lb, ub]^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    n: usize,
    lb: f64,
    ub: f64,
}

impl Domain {
    pub fn new(n: usize, lb: f64, ub: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if !(lb.is_finite() && ub.is_finite() && lb < ub) {
            return Err(Error::InvalidDomain { lb, ub });
        }
        Ok(Self { n, lb, ub })
    }

    /// `[-5, 5]^n`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, DEFAULT_LB, DEFAULT_UB)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lb(&self) -> f64 {
        self.lb
    }

    pub fn ub(&self) -> f64 {
        self.ub
    }

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    /// True when every coordinate lies in `[lb, ub]`. NaN is never contained.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&xi| self.lb <= xi && xi <= self.ub)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionId {
    Sphere,
    Ellipsoid,
    LinearSlope,
    Rosenbrock,
    RotatedRosenbrock,
}

impl FunctionId {
    pub fn id(self) -> u32 {
        match self {
            FunctionId::Sphere => 1,
            FunctionId::Ellipsoid => 2,
            FunctionId::LinearSlope => 5,
            FunctionId::Rosenbrock => 8,
            FunctionId::RotatedRosenbrock => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionId::Sphere => "sphere",
            FunctionId::Ellipsoid => "ellipsoid",
            FunctionId::LinearSlope => "linear_slope",
            FunctionId::Rosenbrock => "rosenbrock",
            FunctionId::RotatedRosenbrock => "rotated_rosenbrock",
        }
    }

    /// Smallest dimension the formula is defined for.
    fn min_dim(self) -> usize {
        match self {
            FunctionId::Rosenbrock | FunctionId::RotatedRosenbrock => 2,
            _ => 1,
        }
    }
}

impl TryFrom<u32> for FunctionId {
    type Error = Error;

    fn try_from(fid: u32) -> Result<Self> {
        match fid {
            1 => Ok(FunctionId::Sphere),
            2 => Ok(FunctionId::Ellipsoid),
            5 => Ok(FunctionId::LinearSlope),
            8 => Ok(FunctionId::Rosenbrock),
            9 => Ok(FunctionId::RotatedRosenbrock),
            other => Err(Error::UnsupportedFunction(other)),
        }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.id())
    }
}

/// A test function at a fixed dimension with a known optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    function: FunctionId,
    domain: Domain,
    instance_id: u64,
    x_opt: Vec<f64>,
    f_opt: f64,
    rotation: Option<DMatrix<f64>>,
    // Per-coordinate conditioning (F2) or slopes (F5); empty otherwise.
    coefficients: Vec<f64>,
}

/// Builds the seeded instance `(fid, n, instance_id)` on `[-5, 5]^n`.
///
/// Requires `n >= 2`. Use [`make_landscape_instance`] for one-dimensional
/// plots of the separable functions.
pub fn make_instance(fid: u32, n: usize, instance_id: u64) -> Result<ProblemInstance> {
    let function = FunctionId::try_from(fid)?;
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    seeded_instance(function, n, instance_id)
}

/// Like [`make_instance`] but also admits `n = 1` for F1, F2 and F5.
pub fn make_landscape_instance(fid: u32, n: usize, instance_id: u64) -> Result<ProblemInstance> {
    let function = FunctionId::try_from(fid)?;
    if n < function.min_dim() {
        return Err(Error::InvalidDimension(n));
    }
    seeded_instance(function, n, instance_id)
}

fn seeded_instance(function: FunctionId, n: usize, instance_id: u64) -> Result<ProblemInstance> {
    let seed = hash_words(&[u64::from(function.id()), n as u64, instance_id]);
    let mut rng = rng_from_seed(seed);
    let domain = Domain::standard(n)?;

    let x_opt: Vec<f64> = match function {
        FunctionId::LinearSlope => (0..n)
            .map(|_| if rng.random_bool(0.5) { domain.ub() } else { domain.lb() })
            .collect(),
        _ => (0..n).map(|_| rng.random_range(-OPT_RANGE..OPT_RANGE)).collect(),
    };
    let f_opt = rng.random_range(-FOPT_RANGE..FOPT_RANGE);
    let rotation = match function {
        FunctionId::RotatedRosenbrock => Some(random_rotation(n, &mut rng)),
        _ => None,
    };
    ProblemInstance::new(function, domain, instance_id, x_opt, f_opt, rotation)
}

/// Orthonormalizes a standard-normal matrix by modified Gram-Schmidt, with a
/// second orthogonalization pass to keep `R^T R = I` to ~1e-15.
fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let mut m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let mut degenerate = false;
        for j in 0..n {
            for _pass in 0..2 {
                for k in 0..j {
                    let proj = m.column(j).dot(&m.column(k));
                    let ck = m.column(k).clone_owned();
                    m.column_mut(j).axpy(-proj, &ck, 1.0);
                }
            }
            let norm = m.column(j).norm();
            if norm < 1e-8 {
                degenerate = true;
                break;
            }
            m.column_mut(j).unscale_mut(norm);
        }
        if !degenerate {
            return m;
        }
    }
}

impl ProblemInstance {
    /// Builds an instance with an explicit optimum. `rotation` must be given
    /// exactly for F9 and must be an orthogonal `n x n` matrix.
    pub fn new(
        function: FunctionId,
        domain: Domain,
        instance_id: u64,
        x_opt: Vec<f64>,
        f_opt: f64,
        rotation: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = domain.dim();
        if n < function.min_dim() {
            return Err(Error::InvalidDimension(n));
        }
        if x_opt.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x_opt.len(),
            });
        }
        if let Some(i) = x_opt.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(i));
        }
        match (&rotation, function) {
            (Some(r), FunctionId::RotatedRosenbrock) => {
                if r.nrows() != n || r.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: r.nrows(),
                    });
                }
            }
            (None, FunctionId::RotatedRosenbrock) | (Some(_), _) => {
                return Err(Error::InvalidDimension(n));
            }
            (None, _) => {}
        }

        let exponent = |i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let coefficients = match function {
            FunctionId::Ellipsoid => (0..n).map(|i| 10f64.powf(6.0 * exponent(i))).collect(),
            FunctionId::LinearSlope => (0..n)
                .map(|i| x_opt[i].signum() * 10f64.powf(exponent(i)))
                .collect(),
            _ => Vec::new(),
        };

        Ok(Self {
            function,
            domain,
            instance_id,
            x_opt,
            f_opt,
            rotation,
            coefficients,
        })
    }

    pub fn function(&self) -> FunctionId {
        self.function
    }

    pub fn fid(&self) -> u32 {
        self.function.id()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn instance_id(&self) -> u64 {
        self.instance_id
    }

    pub fn x_opt(&self) -> &[f64] {
        &self.x_opt
    }

    pub fn f_opt(&self) -> f64 {
        self.f_opt
    }

    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }

    /// Stored optimum `(x_opt, f_opt)`.
    pub fn optimum(&self) -> (&[f64], f64) {
        (&self.x_opt, self.f_opt)
    }

    /// Raw objective value including the `f_opt` offset. No bound check.
    pub fn evaluate_raw(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(i));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation; callers guarantee length and finiteness.
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let xo = &self.x_opt;
        let raw = match self.function {
            FunctionId::Sphere => x.iter().zip(xo).map(|(a, b)| (a - b) * (a - b)).sum(),
            FunctionId::Ellipsoid => x
                .iter()
                .zip(xo)
                .zip(&self.coefficients)
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum(),
            FunctionId::LinearSlope => x
                .iter()
                .zip(xo)
                .zip(&self.coefficients)
                .map(|((&xi, &oi), &s)| {
                    let zi = if xi * oi < oi * oi { xi } else { oi };
                    5.0 * s.abs() - s * zi
                })
                .sum(),
            FunctionId::Rosenbrock => {
                let scale = rosenbrock_scale(n);
                let z: Vec<f64> = x.iter().zip(xo).map(|(a, b)| scale * (a - b) + 1.0).collect();
                rosenbrock(&z)
            }
            FunctionId::RotatedRosenbrock => {
                let scale = rosenbrock_scale(n);
                let r = self.rotation.as_ref().expect("F9 instances carry a rotation");
                let d: Vec<f64> = x.iter().zip(xo).map(|(a, b)| a - b).collect();
                let z: Vec<f64> = (0..n)
                    .map(|i| {
                        let dot: f64 = (0..n).map(|j| r[(i, j)] * d[j]).sum();
                        scale * dot + 1.0
                    })
                    .collect();
                rosenbrock(&z)
            }
        };
        raw + self.f_opt
    }
}

fn rosenbrock_scale(n: usize) -> f64 {
    ((n as f64).sqrt() / 8.0).max(1.0)
}

fn rosenbrock(z: &[f64]) -> f64 {
    z.windows(2)
        .map(|w| {
            let a = w[0] * w[0] - w[1];
            let b = w[0] - 1.0;
            100.0 * a * a + b * b
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_instances() -> impl Iterator<Item = ProblemInstance> {
        SUPPORTED_FUNCTIONS.into_iter().flat_map(|fid| {
            [2usize, 5, 10].into_iter().flat_map(move |n| {
                (0..5).map(move |i| make_instance(fid, n, i).unwrap())
            })
        })
    }

    #[test]
    fn instances_are_deterministic() {
        let a = make_instance(1, 2, 0).unwrap();
        let b = make_instance(1, 2, 0).unwrap();
        assert_eq!(a, b);
        let a9 = make_instance(9, 5, 3).unwrap();
        let b9 = make_instance(9, 5, 3).unwrap();
        assert_eq!(a9, b9);
    }

    #[test]
    fn instance_ids_differ() {
        let a = make_instance(1, 5, 0).unwrap();
        let b = make_instance(1, 5, 1).unwrap();
        assert_ne!(a.x_opt(), b.x_opt());
    }

    #[test]
    fn rotation_is_orthogonal() {
        let inst = make_instance(9, 5, 3).unwrap();
        let r = inst.rotation().unwrap();
        let rtr = r.transpose() * r;
        let err = (rtr - DMatrix::<f64>::identity(5, 5)).abs().max();
        assert!(err < 1e-10, "R^T R deviates from I by {err}");
        for n in [2, 10, 20] {
            let r = make_instance(9, n, 0).unwrap().rotation().unwrap().clone();
            let err = (r.transpose() * &r - DMatrix::<f64>::identity(n, n)).abs().max();
            assert!(err < 1e-10);
        }
        assert!(make_instance(8, 5, 0).unwrap().rotation().is_none());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(make_instance(3, 5, 0), Err(Error::UnsupportedFunction(3))));
        assert!(matches!(make_instance(1, 1, 0), Err(Error::InvalidDimension(1))));
        let inst = make_instance(1, 3, 0).unwrap();
        assert!(matches!(
            inst.evaluate_raw(&[0.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(
            inst.evaluate_raw(&[0.0, f64::NAN, 0.0]),
            Err(Error::NonFiniteInput(1))
        ));
        assert!(matches!(make_landscape_instance(8, 1, 0), Err(Error::InvalidDimension(1))));
        assert!(make_landscape_instance(1, 1, 0).is_ok());
    }

    #[test]
    fn sphere_sum_of_squares() {
        let dom = Domain::standard(2).unwrap();
        let inst = ProblemInstance::new(FunctionId::Sphere, dom, 0, vec![0.0, 0.0], 0.0, None).unwrap();
        assert_eq!(inst.evaluate_raw(&[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn optimum_value_is_exact() {
        for inst in all_instances() {
            let (x, f) = inst.optimum();
            assert_eq!(inst.evaluate_raw(x).unwrap(), f, "{} n={}", inst.function(), inst.dim());
        }
    }

    #[test]
    fn interior_optima_inside_margin() {
        for inst in all_instances() {
            let dom = inst.domain();
            if inst.function() == FunctionId::LinearSlope {
                assert!(inst.x_opt().iter().all(|v| v.abs() == 5.0));
                continue;
            }
            assert!(inst
                .x_opt()
                .iter()
                .all(|&v| v > dom.lb() + 0.01 && v < dom.ub() - 0.01));
        }
    }

    #[test]
    fn perturbed_optimum_is_worse() {
        for inst in all_instances().filter(|i| i.function() != FunctionId::LinearSlope) {
            for k in 0..inst.dim() {
                let mut x = inst.x_opt().to_vec();
                x[k] += 0.1;
                assert!(inst.evaluate_raw(&x).unwrap() > inst.f_opt());
            }
        }
    }

    #[test]
    fn global_minimality_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for inst in all_instances() {
            let n = inst.dim();
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..=5.0)).collect();
                assert!(inst.evaluate_raw(&x).unwrap() >= inst.f_opt());
            }
        }
    }

    #[test]
    fn rotated_rosenbrock_rotation_consistency() {
        let inst = make_instance(9, 5, 2).unwrap();
        let r = inst.rotation().unwrap();
        let rrt = r * r.transpose();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..=5.0)).collect();
            let d = nalgebra::DVector::from_iterator(5, x.iter().zip(inst.x_opt()).map(|(a, b)| a - b));
            let moved = &rrt * d;
            let y: Vec<f64> = (0..5).map(|i| inst.x_opt()[i] + moved[i]).collect();
            let fx = inst.evaluate_raw(&x).unwrap() - inst.f_opt();
            let fy = inst.evaluate_raw(&y).unwrap() - inst.f_opt();
            assert!((fx - fy).abs() <= 1e-8 * fx.abs().max(1.0));
        }
    }

    #[test]
    fn evaluation_is_pure() {
        let inst = make_instance(2, 10, 4).unwrap();
        let x = vec![0.3; 10];
        let a = inst.evaluate_raw(&x).unwrap();
        let b = inst.evaluate_raw(&x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
