use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use rhobench::discretizer::write_landscape_csv;
use rhobench::harness::{load_config, run_experiment, summarize, Metric, SummaryOptions};
use rhobench::metrics::default_targets;
use rhobench::problems::make_landscape_instance;
use rhobench::{DiscretizedProblem, Error, PlateauSize, TARGET_PRECISION};

const SEED_ENV: &str = "RHOBENCH_SEED";

#[derive(Debug, Parser)]
#[command(name = "rhobench", version, about = "Benchmark optimizers on plateau-discretized test functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every cell of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: all logical cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compute success rates, ERT or ECDF curves from a results directory.
    Summarize {
        #[arg(long)]
        dir: PathBuf,
        /// success, ert, ecdf or all
        #[arg(long)]
        metric: String,
        /// Budget cross-cut; repeat for several.
        #[arg(long = "budget")]
        budgets: Vec<u64>,
        #[arg(long, default_value_t = TARGET_PRECISION)]
        target: f64,
    },
    /// Export a 1-D or 2-D landscape grid as CSV.
    Landscape {
        #[arg(long)]
        fid: u32,
        #[arg(long)]
        dim: usize,
        /// Plateau size or `None`.
        #[arg(long)]
        rho: String,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        instance: u64,
    },
    /// Print the default target values.
    Targets,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Csv { .. } => 3,
        Error::ConfigSyntax(_)
        | Error::ConfigInvalid { .. }
        | Error::UnsupportedFunction(_)
        | Error::InvalidDimension(_)
        | Error::InvalidPlateauSize(_)
        | Error::UnsupportedDimension(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> rhobench::Result<()> {
    match cli.command {
        Command::Run { config, workers } => {
            let mut cfg = load_config(&config)?;
            if let Ok(seed) = std::env::var(SEED_ENV) {
                cfg.base_seed = seed
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(SEED_ENV, format!("`{seed}` is not an unsigned integer")))?;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let out = run_experiment(&cfg)?;
            println!(
                "{} runs ({} failed), {} trajectory files, manifest {}",
                out.records.len(),
                out.failed_runs(),
                out.trajectories.len(),
                out.manifest.display()
            );
        }
        Command::Summarize {
            dir,
            metric,
            budgets,
            target,
        } => {
            let metric: Metric = metric.parse()?;
            if !(target > 0.0 && target.is_finite()) {
                return Err(Error::invalid("target", "must be positive"));
            }
            let opts = SummaryOptions { target, budgets };
            for path in summarize(&dir, metric, &opts)? {
                println!("{}", path.display());
            }
        }
        Command::Landscape {
            fid,
            dim,
            rho,
            points,
            out,
            instance,
        } => {
            if points < 2 {
                return Err(Error::invalid("points", "need at least 2 points per axis"));
            }
            if !(1..=2).contains(&dim) {
                return Err(Error::UnsupportedDimension(dim));
            }
            let rho: PlateauSize = rho.parse()?;
            let inst = Arc::new(make_landscape_instance(fid, dim, instance)?);
            let dp = DiscretizedProblem::new(inst, rho, 1)?;
            let grid = dp.landscape_grid(points)?;
            let file = File::create(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let mut w = BufWriter::new(file);
            write_landscape_csv(&grid, &mut w)
                .and_then(|()| w.flush())
                .map_err(|e| Error::Io { path: out, source: e })?;
        }
        Command::Targets => {
            let mut stdout = std::io::stdout().lock();
            for t in default_targets().as_slice() {
                // Closed pipe: stop quietly.
                if writeln!(stdout, "{t:e}").is_err() {
                    break;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
