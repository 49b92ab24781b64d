use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use super::runner::{trajectory_path, MANIFEST_FILE};
use crate::discretizer::{Improvement, PlateauSize};
use crate::error::{Error, Result};
use crate::metrics::{default_targets, ecdf, ert, log_budgets, success_rate};
use crate::record::{Algorithm, RunRecord};
use crate::TARGET_PRECISION;

pub const SUCCESS_FILE: &str = "success.csv";
pub const ERT_FILE: &str = "ert.csv";
pub const ECDF_FILE: &str = "ecdf.csv";

/// Smallest budget of the ECDF grid.
pub const ECDF_MIN_BUDGET: u64 = 10;
pub const ECDF_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Success,
    Ert,
    Ecdf,
    All,
}

impl Metric {
    fn includes(self, other: Metric) -> bool {
        self == Metric::All || self == other
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Success => "success",
            Metric::Ert => "ert",
            Metric::Ecdf => "ecdf",
            Metric::All => "all",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "success" => Ok(Metric::Success),
            "ert" => Ok(Metric::Ert),
            "ecdf" => Ok(Metric::Ecdf),
            "all" => Ok(Metric::All),
            _ => Err(Error::invalid("metric", format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryOptions {
    /// Target for success rates and ERT.
    pub target: f64,
    /// Budget cross-cuts; empty means each group's run budget. For the ECDF
    /// the largest entry becomes the end of the budget grid.
    pub budgets: Vec<u64>,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            target: TARGET_PRECISION,
            budgets: Vec::new(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    algorithm: String,
    fid: u32,
    dim: usize,
    instance: u64,
    rho: String,
    run: u64,
    seed: u64,
    budget: u64,
    evaluations: u64,
    status: String,
}

#[derive(Debug, Deserialize)]
struct TrajectoryRow {
    algorithm: String,
    fid: u32,
    dim: usize,
    instance: u64,
    rho: String,
    run: u64,
    eval: u64,
    delta: f64,
}

type RunKey = (String, u32, usize, u64, String, u64);

/// Runs of one (algorithm, function, dimension, plateau size) group.
#[derive(Debug, Clone)]
pub struct Group {
    pub algorithm: Algorithm,
    pub fid: u32,
    pub n: usize,
    pub rho: PlateauSize,
    pub records: Vec<RunRecord>,
}

impl Group {
    /// Largest run budget in the group.
    pub fn budget(&self) -> u64 {
        self.records.iter().map(|r| r.budget).max().unwrap_or(0)
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

/// Rebuilds run records from a results directory, grouped in manifest order.
pub fn load_groups(dir: &Path) -> Result<Vec<Group>> {
    let manifest = dir.join(MANIFEST_FILE);
    let mut rows = Vec::new();
    for row in reader(&manifest)?.deserialize() {
        let row: ManifestRow = row.map_err(|e| Error::csv(&manifest, e))?;
        rows.push(row);
    }

    let mut trajectories: HashMap<RunKey, Vec<Improvement>> = HashMap::new();
    let mut files: Vec<PathBuf> = Vec::new();
    for row in &rows {
        let alg: Algorithm = row.algorithm.parse()?;
        let rho: PlateauSize = row.rho.parse()?;
        let path = dir.join(trajectory_path(alg, row.fid, row.dim, rho));
        if !files.contains(&path) {
            files.push(path);
        }
    }
    for path in &files {
        for ev in reader(path)?.deserialize() {
            let ev: TrajectoryRow = ev.map_err(|e| Error::csv(path, e))?;
            let key = (ev.algorithm, ev.fid, ev.dim, ev.instance, ev.rho, ev.run);
            trajectories.entry(key).or_default().push(Improvement {
                eval: ev.eval,
                delta: ev.delta,
            });
        }
    }

    let mut groups: Vec<Group> = Vec::new();
    for row in rows {
        let algorithm: Algorithm = row.algorithm.parse()?;
        let rho: PlateauSize = row.rho.parse()?;
        let key = (row.algorithm, row.fid, row.dim, row.instance, row.rho, row.run);
        let trajectory = trajectories.remove(&key).unwrap_or_default();
        let mut rec = RunRecord::from_parts(
            algorithm,
            row.fid,
            row.dim,
            row.instance,
            rho,
            row.seed,
            row.budget,
            row.evaluations,
            trajectory,
        );
        rec.failed = row.status == "failed";
        match groups
            .iter_mut()
            .find(|g| g.algorithm == algorithm && g.fid == row.fid && g.n == row.dim && g.rho == rho)
        {
            Some(g) => g.records.push(rec),
            None => groups.push(Group {
                algorithm,
                fid: row.fid,
                n: row.dim,
                rho,
                records: vec![rec],
            }),
        }
    }
    Ok(groups)
}

fn format_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

fn group_keys(g: &Group) -> [String; 4] {
    [g.algorithm.to_string(), g.fid.to_string(), g.n.to_string(), g.rho.to_string()]
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the requested metric files into `dir` and returns their paths.
pub fn summarize(dir: &Path, metric: Metric, opts: &SummaryOptions) -> Result<Vec<PathBuf>> {
    let groups = load_groups(dir)?;
    let budgets_of = |g: &Group| {
        if opts.budgets.is_empty() {
            vec![g.budget()]
        } else {
            opts.budgets.clone()
        }
    };
    let mut written = Vec::new();

    if metric.includes(Metric::Success) {
        let mut rows = Vec::new();
        for g in &groups {
            for b in budgets_of(g) {
                let mut row = group_keys(g).to_vec();
                row.push(b.to_string());
                row.push(format_value(success_rate(&g.records, opts.target, b)?));
                rows.push(row);
            }
        }
        let path = dir.join(SUCCESS_FILE);
        write_rows(&path, &["algorithm", "fid", "n", "rho", "budget", "rate"], rows)?;
        written.push(path);
    }

    if metric.includes(Metric::Ert) {
        let mut rows = Vec::new();
        for g in &groups {
            for b in budgets_of(g) {
                let mut row = group_keys(g).to_vec();
                row.push(b.to_string());
                row.push(format!("{:e}", opts.target));
                row.push(format_value(ert(&g.records, opts.target, b)?));
                rows.push(row);
            }
        }
        let path = dir.join(ERT_FILE);
        write_rows(&path, &["algorithm", "fid", "n", "rho", "budget", "target", "ert"], rows)?;
        written.push(path);
    }

    if metric.includes(Metric::Ecdf) {
        let targets = default_targets();
        let mut rows = Vec::new();
        for g in &groups {
            let high = opts.budgets.iter().copied().max().unwrap_or_else(|| g.budget());
            let grid = log_budgets(ECDF_MIN_BUDGET, high, ECDF_POINTS);
            for (b, fraction) in ecdf(&g.records, &targets, &grid)? {
                let mut row = group_keys(g).to_vec();
                row.push(b.to_string());
                row.push(format_value(fraction));
                rows.push(row);
            }
        }
        let path = dir.join(ECDF_FILE);
        write_rows(&path, &["algorithm", "fid", "n", "rho", "budget", "fraction"], rows)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names() {
        for m in [Metric::Success, Metric::Ert, Metric::Ecdf, Metric::All] {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert!("median".parse::<Metric>().is_err());
    }

    #[test]
    fn missing_manifest_is_io_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = summarize(tmp.path(), Metric::All, &SummaryOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(f64::INFINITY), "inf");
        assert_eq!(format_value(650.0), "650");
        assert_eq!(format_value(0.95), "0.95");
    }
}
