use std::fs;
use std::path::Path;

use rhobench::harness::{
    jobs, load_config, load_groups, run_experiment, run_jobs, summarize, BudgetRule, ExperimentConfig, Job, Metric,
    SummaryOptions,
};
use rhobench::metrics::{default_targets, ecdf, ert, log_budgets, success_rate};
use rhobench::{Algorithm, Error, PlateauSize};

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    let out = dir.join("out");
    fs::write(&path, format!("{body}\noutput_dir = {:?}\n", out.to_str().unwrap())).unwrap();
    path
}

const SMALL: &str = r#"
fids = [1, 2]
dims = [2, 3]
instances = [0, 1]
rhos = ["None", 0.01, 1.0]
algorithms = ["es", "intea", "ga", "cmaes", "cmaeswm1", "cmaeswm2"]
runs_per_instance = 2
budget_rule = 3000
base_seed = 5
"#;

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("trajectories")] {
        for entry in fs::read_dir(&sub).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                files.push((path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn config_file_round_trip_and_manifest_size() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(write_config(tmp.path(), SMALL)).unwrap();
    let out = run_experiment(&cfg).unwrap();
    // 4 continuous-capable algorithms see 3 rhos, 2 integer ones see 2.
    let expected = (4 * 3 + 2 * 2) * 2 * 2 * 2 * 2;
    assert_eq!(out.records.len(), expected);
    let manifest = fs::read_to_string(&out.manifest).unwrap();
    assert_eq!(manifest.lines().count(), expected + 1);
    assert_eq!(
        manifest.lines().next().unwrap(),
        "algorithm,fid,dim,instance,rho,run,seed,budget,evaluations,final_delta,hit_1e8_at,status"
    );
    assert_eq!(out.trajectories.len(), (4 * 3 + 2 * 2) * 2 * 2);
    let header = fs::read_to_string(&out.trajectories[0]).unwrap();
    assert_eq!(header.lines().next().unwrap(), "algorithm,fid,dim,instance,rho,run,seed,eval,delta");
    assert_eq!(out.failed_runs(), 0);
}

#[test]
fn reruns_are_byte_identical_for_any_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg_a = load_config(write_config(a.path(), SMALL)).unwrap();
    let mut cfg_b = load_config(write_config(b.path(), SMALL)).unwrap();
    cfg_a.workers = Some(1);
    cfg_b.workers = Some(4);
    run_experiment(&cfg_a).unwrap();
    run_experiment(&cfg_b).unwrap();
    let first = snapshot(&cfg_a.output_dir);
    assert_eq!(first, snapshot(&cfg_b.output_dir));
    // Same directory again overwrites with identical content.
    run_experiment(&cfg_a).unwrap();
    assert_eq!(first, snapshot(&cfg_a.output_dir));
}

#[test]
fn one_cell_reruns_in_isolation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(write_config(tmp.path(), SMALL)).unwrap();
    let all = jobs(&cfg);
    let records = run_jobs(&all, Some(2)).unwrap();
    let pick = 37;
    let alone = run_jobs(&all[pick..=pick], Some(1)).unwrap();
    assert_eq!(alone[0], records[pick]);
}

#[test]
fn failing_run_does_not_disturb_others() {
    let good = Job {
        algorithm: Algorithm::Es,
        fid: 1,
        dim: 2,
        instance: 0,
        rho: PlateauSize::new(0.5).unwrap(),
        run: 0,
        seed: 3,
        budget: 2000,
    };
    // GA on a continuous problem fails inside the run.
    let bad = Job {
        algorithm: Algorithm::Ga,
        rho: PlateauSize::NONE,
        ..good
    };
    let mixed = run_jobs(&[good, bad, good], Some(2)).unwrap();
    let clean = run_jobs(&[good], Some(1)).unwrap();
    assert!(!mixed[0].failed && mixed[1].failed && !mixed[2].failed);
    assert_eq!(mixed[0], clean[0]);
    assert_eq!(mixed[2], clean[0]);
    assert_eq!(mixed[1].evaluations, 2000);
}

#[test]
fn summaries_match_in_memory_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(write_config(tmp.path(), SMALL)).unwrap();
    let out = run_experiment(&cfg).unwrap();
    let opts = SummaryOptions {
        target: 1e-8,
        budgets: vec![500, 3000],
    };
    let files = summarize(&cfg.output_dir, Metric::All, &opts).unwrap();
    assert_eq!(files.len(), 3);

    let groups = load_groups(&cfg.output_dir).unwrap();
    let group_count = (4 * 3 + 2 * 2) * 2 * 2;
    assert_eq!(groups.len(), group_count);
    // Reloaded records carry the same trajectories as the in-memory ones.
    let reloaded: Vec<_> = groups.iter().flat_map(|g| g.records.iter().cloned()).collect();
    assert_eq!(reloaded, out.records);

    let success = fs::read_to_string(cfg.output_dir.join("success.csv")).unwrap();
    let mut lines = success.lines();
    assert_eq!(lines.next(), Some("algorithm,fid,n,rho,budget,rate"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), group_count * 2);
    for (i, g) in groups.iter().enumerate() {
        for (j, b) in [500u64, 3000].into_iter().enumerate() {
            let row = &rows[2 * i + j];
            assert_eq!(row[0], g.algorithm.to_string());
            assert_eq!(row[4], b.to_string());
            let want = success_rate(&g.records, 1e-8, b).unwrap();
            assert_eq!(row[5].parse::<f64>().unwrap(), want);
        }
    }

    let ert_text = fs::read_to_string(cfg.output_dir.join("ert.csv")).unwrap();
    for (line, g) in ert_text.lines().skip(1).step_by(2).zip(&groups) {
        let cell = line.rsplit(',').next().unwrap();
        let want = ert(&g.records, 1e-8, 500).unwrap();
        if want.is_infinite() {
            assert_eq!(cell, "inf");
        } else {
            assert_eq!(cell.parse::<f64>().unwrap(), want);
        }
    }

    let ecdf_text = fs::read_to_string(cfg.output_dir.join("ecdf.csv")).unwrap();
    assert_eq!(ecdf_text.lines().next(), Some("algorithm,fid,n,rho,budget,fraction"));
    // Rounded log-spaced budgets collide near the low end and are merged.
    let grid = log_budgets(10, 3000, 100);
    assert_eq!(ecdf_text.lines().count(), 1 + group_count * grid.len());
    let end = ecdf(&groups[0].records, &default_targets(), &[3000]).unwrap()[0].1;
    assert!(ecdf_text.lines().nth(grid.len()).unwrap().ends_with(&format!(",3000,{end}")));
}

#[test]
fn ert_cell_without_hits_is_inf() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(vec![1], vec![5], vec![Algorithm::Ga]);
    cfg.instances = vec![0];
    cfg.rhos = vec![PlateauSize::new(0.001).unwrap()];
    cfg.runs_per_instance = 2;
    cfg.budget_rule = BudgetRule::Fixed(300);
    cfg.output_dir = tmp.path().join("out");
    run_experiment(&cfg).unwrap();
    summarize(&cfg.output_dir, Metric::Ert, &SummaryOptions::default()).unwrap();
    let text = fs::read_to_string(cfg.output_dir.join("ert.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("ga,1,5,0.001,300,1e-8,inf"));
}

#[test]
fn ecdf_of_one_solved_run_ends_at_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(vec![1], vec![2], vec![Algorithm::CmaEs]);
    cfg.instances = vec![0];
    cfg.rhos = vec![PlateauSize::NONE];
    cfg.runs_per_instance = 1;
    cfg.budget_rule = BudgetRule::Fixed(5000);
    cfg.output_dir = tmp.path().join("out");
    let out = run_experiment(&cfg).unwrap();
    assert!(out.records[0].hit_1e8_at.is_some());
    summarize(&cfg.output_dir, Metric::Ecdf, &SummaryOptions::default()).unwrap();
    let text = fs::read_to_string(cfg.output_dir.join("ecdf.csv")).unwrap();
    let last = text.lines().last().unwrap();
    assert_eq!(last, "cmaes,1,2,None,5000,1");
    let fractions: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn full_scale_cell_has_one_hundred_runs() {
    let mut cfg = ExperimentConfig::new(vec![1], vec![5], vec![Algorithm::CmaEs]);
    cfg.rhos = vec![PlateauSize::NONE];
    let all = jobs(&cfg);
    assert_eq!(all.len(), 100);
    assert!(all.iter().all(|j| j.budget == 50_000));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let mut cfg = ExperimentConfig::new(vec![1], vec![2], vec![Algorithm::Es]);
    cfg.instances = vec![0];
    cfg.rhos = vec![PlateauSize::NONE];
    cfg.runs_per_instance = 1;
    cfg.budget_rule = BudgetRule::Fixed(100);
    cfg.output_dir = blocker.join("out");
    assert!(matches!(run_experiment(&cfg), Err(Error::Io { .. })));
}
