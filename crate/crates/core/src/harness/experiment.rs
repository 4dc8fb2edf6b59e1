//! Batch runs over instances × configurations × seeds.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;

use super::log::SolveLog;
use super::report::{write_report, Report};
use crate::error::{Error, Result};
use crate::instance::{load_instance, NetworkInstance};
use crate::master::{solve, solve_compact, RunConfig, DEFAULT_COMPACT_CAP};
use crate::selection::parse_config_id;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub seeds: Vec<u64>,
    pub time_limit: Option<Duration>,
    pub gap_tolerance: f64,
    pub learning_rate: f64,
    pub regularization: f64,
    /// Use the compact optimum as primal cap on instances small enough for
    /// it; otherwise the default cap applies.
    pub compact_primal_cap: bool,
    /// Runs executed concurrently.
    pub jobs: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        let base = RunConfig::from_id("Standard").expect("valid id");
        ExperimentOptions {
            seeds: vec![0],
            time_limit: None,
            gap_tolerance: base.gap_tolerance,
            learning_rate: base.learning_rate,
            regularization: base.regularization,
            compact_primal_cap: false,
            jobs: 1,
        }
    }
}

/// A run that ended in an error instead of a log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub instance: String,
    pub config: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub report: Option<Report>,
    pub failures: Vec<RunFailure>,
    pub log_dir: PathBuf,
}

type RunOutcome = std::result::Result<(String, SolveLog), RunFailure>;

/// File name of a run's log.
pub fn log_name(instance: &str, config: &str, seed: u64) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || ".-_".contains(c) { c } else { '_' })
            .collect()
    };
    format!("{}__{}__s{seed}.jsonl", clean(instance), clean(config))
}

/// Solves every (instance, config, seed) combination with fresh state,
/// writes the logs to `out/logs` and the report tables to `out`.
pub fn run_instances(
    instances: &[NetworkInstance],
    configs: &[String],
    options: &ExperimentOptions,
    out: &Path,
) -> Result<ExperimentReport> {
    let parsed = configs
        .iter()
        .map(|c| parse_config_id(c))
        .collect::<Result<Vec<_>>>()?;
    let log_dir = out.join("logs");
    fs::create_dir_all(&log_dir)?;

    let caps: Vec<Option<f64>> = instances
        .iter()
        .map(|inst| {
            if !options.compact_primal_cap {
                return None;
            }
            solve_compact(inst, options.time_limit, DEFAULT_COMPACT_CAP)
                .ok()
                .and_then(|c| c.objective)
        })
        .collect();

    let mut jobs = Vec::new();
    for (i, _) in instances.iter().enumerate() {
        for (c, _) in parsed.iter().enumerate() {
            for &seed in &options.seeds {
                jobs.push((i, c, seed));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, RunOutcome)>> = Mutex::new(Vec::new());
    let worker = || loop {
        let k = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(i, c, seed)) = jobs.get(k) else {
            break;
        };
        let inst = &instances[i];
        let mut config = RunConfig::new(parsed[c].clone());
        config.seed = seed;
        config.time_limit = options.time_limit;
        config.gap_tolerance = options.gap_tolerance;
        config.learning_rate = options.learning_rate;
        config.regularization = options.regularization;
        config.primal_cap = caps[i];
        let name = log_name(&inst.name, &configs[c], seed);
        let outcome = solve(inst, &config)
            .and_then(|r| {
                r.log.save(&log_dir.join(&name))?;
                Ok((name, r.log))
            })
            .map_err(|e| RunFailure {
                instance: inst.name.clone(),
                config: configs[c].clone(),
                seed,
                error: e.to_string(),
            });
        if let Err(f) = &outcome {
            log::warn!("{} / {} / seed {}: {}", f.instance, f.config, f.seed, f.error);
        }
        results.lock().expect("no worker panicked").push((k, outcome));
    };
    std::thread::scope(|s| {
        for _ in 0..options.jobs.max(1) {
            s.spawn(worker);
        }
    });

    let mut results = results.into_inner().expect("no worker panicked");
    results.sort_by_key(|(k, _)| *k);
    let mut logs = Vec::new();
    let mut failures = Vec::new();
    for (_, r) in results {
        match r {
            Ok(l) => logs.push(l),
            Err(f) => failures.push(f),
        }
    }
    let mut w = csv::Writer::from_path(out.join("failures.csv"))?;
    w.write_record(["instance", "config", "seed", "error"])?;
    for f in &failures {
        w.serialize(f)?;
    }
    w.flush()?;

    let report = if logs.is_empty() {
        None
    } else {
        Some(write_report(&logs, out)?)
    };
    Ok(ExperimentReport {
        report,
        failures,
        log_dir,
    })
}

/// [`run_instances`] over instance files. All files and identifiers are
/// checked before anything runs.
pub fn run_experiment(
    paths: &[PathBuf],
    configs: &[String],
    options: &ExperimentOptions,
    out: &Path,
) -> Result<ExperimentReport> {
    if paths.is_empty() || configs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let instances = paths
        .iter()
        .map(|p| load_instance(p))
        .collect::<Result<Vec<_>>>()?;
    run_instances(&instances, configs, options, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{random_instance, to_native_string, RandomParams};

    #[test]
    fn two_configs_one_instance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.json");
        fs::write(&path, to_native_string(&random_instance(&RandomParams::default(), 2))).unwrap();
        let configs = vec!["Standard".to_string(), "ML-0.5P-20S-5R".to_string()];
        let out = dir.path().join("out");
        let r = run_experiment(std::slice::from_ref(&path), &configs, &ExperimentOptions::default(), &out).unwrap();
        assert!(r.failures.is_empty());
        let report = r.report.unwrap();
        assert_eq!(report.runs.len(), 2);
        assert_eq!(crate::harness::report::log_files(&r.log_dir).unwrap().len(), 2);
        assert_eq!(report.runs[0].objective, report.runs[1].objective);

        // same seeds, same counts
        let again = run_experiment(&[path], &configs, &ExperimentOptions { jobs: 2, ..Default::default() }, &dir.path().join("again")).unwrap();
        for (a, b) in report.runs.iter().zip(&again.report.unwrap().runs) {
            assert_eq!((a.objective, a.cuts, a.solves, a.rounds), (b.objective, b.cuts, b.solves, b.rounds));
        }
    }

    #[test]
    fn bad_config_aborts_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let inst = random_instance(&RandomParams::default(), 1);
        let err = run_instances(&[inst], &["ML-0.5X".into()], &ExperimentOptions::default(), dir.path());
        assert!(matches!(err, Err(Error::Grammar { .. })));
    }

    #[test]
    fn accepts_table_identifiers() {
        assert!(parse_config_id("ML-0.5T-5C-20S-5R").is_ok());
        assert_eq!(log_name("a/b", "ML-0.5P", 3), "a_b__ML-0.5P__s3.jsonl");
    }
}
