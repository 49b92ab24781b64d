use std::fs::{self, File};
use std::io::BufWriter;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::discretizer::{DiscretizedProblem, PlateauSize};
use crate::error::{Error, Result};
use crate::optimizers::{cma_run, default_margin, es_run, ga_run, intea_run};
use crate::problems::{make_instance, ProblemInstance};
use crate::record::{Algorithm, RunRecord};
use crate::seed::{hash_str, hash_words};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const TRAJECTORY_DIR: &str = "trajectories";

pub const TRAJECTORY_HEADER: [&str; 9] = ["algorithm", "fid", "dim", "instance", "rho", "run", "seed", "eval", "delta"];
pub const MANIFEST_HEADER: [&str; 12] = [
    "algorithm",
    "fid",
    "dim",
    "instance",
    "rho",
    "run",
    "seed",
    "budget",
    "evaluations",
    "final_delta",
    "hit_1e8_at",
    "status",
];

/// One cell of the experiment cross-product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub algorithm: Algorithm,
    pub fid: u32,
    pub dim: usize,
    pub instance: u64,
    pub rho: PlateauSize,
    pub run: u64,
    pub seed: u64,
    pub budget: u64,
}

/// Seed of one run; depends on nothing but the run's own keys.
pub fn run_seed(base_seed: u64, alg: Algorithm, fid: u32, dim: usize, instance: u64, rho: PlateauSize, run: u64) -> u64 {
    hash_words(&[
        base_seed,
        hash_str(alg.name()),
        u64::from(fid),
        dim as u64,
        instance,
        rho.key(),
        run,
    ])
}

/// Full cross-product, ordered by algorithm, function, dimension, plateau
/// size, instance and run. Rows of one trajectory file are contiguous.
pub fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &algorithm in &cfg.algorithms {
        for &fid in &cfg.fids {
            for &dim in &cfg.dims {
                for rho in cfg.rhos_for(algorithm) {
                    for &instance in &cfg.instances {
                        for run in 0..cfg.runs_per_instance {
                            out.push(Job {
                                algorithm,
                                fid,
                                dim,
                                instance,
                                rho,
                                run,
                                seed: run_seed(cfg.base_seed, algorithm, fid, dim, instance, rho, run),
                                budget: cfg.budget_rule.budget(dim),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Runs `job` on a prepared problem instance. Margin variants on a
/// continuous problem have nothing to correct and run with `alpha = 0`.
pub fn execute(job: &Job, inst: Arc<ProblemInstance>) -> Result<RunRecord> {
    let dp = DiscretizedProblem::new(inst, job.rho, job.budget)?;
    let mut rec = match job.algorithm {
        Algorithm::Es => es_run(dp, job.seed)?,
        Algorithm::IntEa => intea_run(dp, job.seed)?,
        Algorithm::Ga => ga_run(dp, job.seed)?,
        Algorithm::CmaEs => cma_run(dp, job.seed, 0.0)?,
        Algorithm::CmaEsWm1 | Algorithm::CmaEsWm2 => {
            let factor = job.algorithm.margin_factor().unwrap_or(1.0);
            let alpha = if job.rho.is_none() { 0.0 } else { factor * default_margin(job.dim) };
            cma_run(dp, job.seed, alpha)?
        }
    };
    rec.algorithm = job.algorithm;
    rec.instance_id = job.instance;
    Ok(rec)
}

/// Like [`execute`], but panics and errors yield a failed record.
pub fn execute_isolated(job: &Job, inst: Arc<ProblemInstance>) -> RunRecord {
    match panic::catch_unwind(AssertUnwindSafe(|| execute(job, inst))) {
        Ok(Ok(rec)) => rec,
        Ok(Err(_)) | Err(_) => RunRecord::failed(
            job.algorithm,
            job.fid,
            job.dim,
            job.instance,
            job.rho,
            job.seed,
            job.budget,
        ),
    }
}

/// Executes every job, in parallel, returning records in job order.
pub fn run_jobs(jobs: &[Job], workers: Option<usize>) -> Result<Vec<RunRecord>> {
    let mut cache: Vec<((u32, usize, u64), Arc<ProblemInstance>)> = Vec::new();
    for job in jobs {
        let key = (job.fid, job.dim, job.instance);
        if !cache.iter().any(|(k, _)| *k == key) {
            cache.push((key, Arc::new(make_instance(job.fid, job.dim, job.instance)?)));
        }
    }
    let instance_of = |job: &Job| {
        let key = (job.fid, job.dim, job.instance);
        cache.iter().find(|(k, _)| *k == key).map(|(_, inst)| Arc::clone(inst))
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|job| match instance_of(job) {
                Some(inst) => execute_isolated(job, inst),
                None => unreachable!("instance cache covers every job"),
            })
            .collect()
    }))
}

/// Output files of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub manifest: PathBuf,
    pub trajectories: Vec<PathBuf>,
}

impl ExperimentOutput {
    pub fn failed_runs(&self) -> usize {
        self.records.iter().filter(|r| r.failed).count()
    }
}

/// Trajectory file of one (algorithm, function, dimension, plateau size)
/// group, relative to the output directory.
pub fn trajectory_path(alg: Algorithm, fid: u32, dim: usize, rho: PlateauSize) -> PathBuf {
    Path::new(TRAJECTORY_DIR).join(format!("{alg}_f{fid}_d{dim}_rho{rho}.csv"))
}

pub(crate) fn format_delta(delta: f64) -> String {
    if delta.is_infinite() {
        "inf".to_string()
    } else {
        format!("{delta:e}")
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one CSV per group plus the manifest. `jobs` and `records` are
/// parallel slices.
pub fn write_outputs(dir: &Path, jobs: &[Job], records: &[RunRecord]) -> Result<(PathBuf, Vec<PathBuf>)> {
    let traj_dir = dir.join(TRAJECTORY_DIR);
    fs::create_dir_all(&traj_dir).map_err(|e| Error::io(&traj_dir, e))?;

    let mut files = Vec::new();
    let mut start = 0;
    while start < jobs.len() {
        let head = jobs[start];
        let same = |j: &Job| j.algorithm == head.algorithm && j.fid == head.fid && j.dim == head.dim && j.rho == head.rho;
        let end = start + jobs[start..].iter().take_while(|j| same(j)).count();
        let path = dir.join(trajectory_path(head.algorithm, head.fid, head.dim, head.rho));
        let mut w = csv_writer(&path)?;
        w.write_record(TRAJECTORY_HEADER).map_err(|e| Error::csv(&path, e))?;
        for (job, rec) in jobs[start..end].iter().zip(&records[start..end]) {
            for ev in &rec.trajectory {
                w.write_record([
                    job.algorithm.to_string(),
                    job.fid.to_string(),
                    job.dim.to_string(),
                    job.instance.to_string(),
                    job.rho.to_string(),
                    job.run.to_string(),
                    job.seed.to_string(),
                    ev.eval.to_string(),
                    format_delta(ev.delta),
                ])
                .map_err(|e| Error::csv(&path, e))?;
            }
        }
        finish(w, &path)?;
        files.push(path);
        start = end;
    }

    let manifest = dir.join(MANIFEST_FILE);
    let mut w = csv_writer(&manifest)?;
    w.write_record(MANIFEST_HEADER).map_err(|e| Error::csv(&manifest, e))?;
    for (job, rec) in jobs.iter().zip(records) {
        w.write_record([
            job.algorithm.to_string(),
            job.fid.to_string(),
            job.dim.to_string(),
            job.instance.to_string(),
            job.rho.to_string(),
            job.run.to_string(),
            job.seed.to_string(),
            job.budget.to_string(),
            rec.evaluations.to_string(),
            format_delta(rec.final_delta),
            rec.hit_1e8_at.map(|t| t.to_string()).unwrap_or_default(),
            if rec.failed { "failed" } else { "ok" }.to_string(),
        ])
        .map_err(|e| Error::csv(&manifest, e))?;
    }
    finish(w, &manifest)?;
    Ok((manifest, files))
}

/// Runs the full cross-product of `cfg` and writes its outputs under
/// `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let jobs = jobs(cfg);
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let records = run_jobs(&jobs, cfg.workers)?;
    let (manifest, trajectories) = write_outputs(&cfg.output_dir, &jobs, &records)?;
    Ok(ExperimentOutput {
        records,
        manifest,
        trajectories,
    })
}
