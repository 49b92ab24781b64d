use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::discretizer::PlateauSize;
use crate::error::{Error, Result};
use crate::problems::{Domain, FunctionId};
use crate::record::Algorithm;

/// Evaluation budget per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetRule {
    /// `min(10000 n, 100000)`.
    Scaled,
    Fixed(u64),
}

impl BudgetRule {
    pub fn budget(self, n: usize) -> u64 {
        match self {
            BudgetRule::Scaled => (10_000 * n as u64).min(100_000),
            BudgetRule::Fixed(b) => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub fids: Vec<u32>,
    pub dims: Vec<usize>,
    pub instances: Vec<u64>,
    pub rhos: Vec<PlateauSize>,
    pub algorithms: Vec<Algorithm>,
    pub runs_per_instance: u64,
    pub budget_rule: BudgetRule,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses all logical cores.
    pub workers: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawRho {
    Value(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawBudget {
    Fixed(u64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    fids: Vec<u32>,
    dims: Vec<usize>,
    instances: Option<Vec<u64>>,
    rhos: Option<Vec<RawRho>>,
    algorithms: Vec<String>,
    runs_per_instance: Option<u64>,
    budget_rule: Option<RawBudget>,
    base_seed: Option<u64>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
}

fn parse_rho(raw: RawRho) -> Result<PlateauSize> {
    let rho = match raw {
        RawRho::Value(v) => PlateauSize::new(v),
        RawRho::Text(s) => s.parse(),
    };
    rho.map_err(|e| Error::invalid("rhos", e.to_string()))
}

fn parse_budget(raw: RawBudget) -> Result<BudgetRule> {
    match raw {
        RawBudget::Fixed(b) => Ok(BudgetRule::Fixed(b)),
        RawBudget::Text(s) if s.trim().eq_ignore_ascii_case("paper") => Ok(BudgetRule::Scaled),
        RawBudget::Text(s) => s
            .trim()
            .parse()
            .map(BudgetRule::Fixed)
            .map_err(|_| Error::invalid("budget_rule", format!("expected `paper` or an integer, got `{s}`"))),
    }
}

impl ExperimentConfig {
    /// Config with every optional field at its default.
    pub fn new(fids: Vec<u32>, dims: Vec<usize>, algorithms: Vec<Algorithm>) -> Self {
        Self {
            fids,
            dims,
            instances: (0..5).collect(),
            rhos: PlateauSize::experiment_set().to_vec(),
            algorithms,
            runs_per_instance: 20,
            budget_rule: BudgetRule::Scaled,
            base_seed: 0,
            output_dir: PathBuf::from("results"),
            workers: None,
        }
    }

    /// Parses a TOML document. Relative `output_dir` values are kept as
    /// written.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigSyntax(e.message().to_string()))?;
        let algorithms = raw
            .algorithms
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Algorithm>>>()?;
        let mut cfg = Self::new(raw.fids, raw.dims, algorithms);
        if let Some(instances) = raw.instances {
            cfg.instances = instances;
        }
        if let Some(rhos) = raw.rhos {
            cfg.rhos = rhos.into_iter().map(parse_rho).collect::<Result<_>>()?;
        }
        if let Some(runs) = raw.runs_per_instance {
            cfg.runs_per_instance = runs;
        }
        if let Some(rule) = raw.budget_rule {
            cfg.budget_rule = parse_budget(rule)?;
        }
        if let Some(seed) = raw.base_seed {
            cfg.base_seed = seed;
        }
        if let Some(dir) = raw.output_dir {
            cfg.output_dir = dir;
        }
        cfg.workers = raw.workers;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = [
            ("fids", self.fids.is_empty()),
            ("dims", self.dims.is_empty()),
            ("instances", self.instances.is_empty()),
            ("rhos", self.rhos.is_empty()),
            ("algorithms", self.algorithms.is_empty()),
        ];
        if let Some((key, _)) = nonempty.iter().find(|(_, empty)| *empty) {
            return Err(Error::invalid(key, "list must not be empty"));
        }
        for &fid in &self.fids {
            FunctionId::try_from(fid).map_err(|e| Error::invalid("fids", e.to_string()))?;
        }
        for &n in &self.dims {
            if n < 2 {
                return Err(Error::invalid("dims", format!("dimension {n} is below 2")));
            }
        }
        let width = Domain::standard(2)?.width();
        for rho in &self.rhos {
            if rho.value().is_some_and(|r| r > width) {
                return Err(Error::invalid("rhos", format!("plateau size {rho} exceeds the domain width {width}")));
            }
        }
        if self.runs_per_instance == 0 {
            return Err(Error::invalid("runs_per_instance", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        for &n in &self.dims {
            let b = self.budget_rule.budget(n);
            if b == 0 {
                return Err(Error::invalid("budget_rule", "budget must be positive"));
            }
        }
        let has_grid = self.rhos.iter().any(|r| !r.is_none());
        if let Some(alg) = self.algorithms.iter().find(|a| a.needs_grid()) {
            if !has_grid {
                return Err(Error::invalid("rhos", format!("{alg} needs at least one plateau size other than None")));
            }
        }
        Ok(())
    }

    /// Plateau sizes scheduled for `alg`; integer-view algorithms skip `None`.
    pub fn rhos_for(&self, alg: Algorithm) -> impl Iterator<Item = PlateauSize> + '_ {
        self.rhos.iter().copied().filter(move |r| !(alg.needs_grid() && r.is_none()))
    }
}

/// Reads and validates a TOML config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_toml(&text)
}
