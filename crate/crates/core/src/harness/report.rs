//! CSV reports over a set of solve logs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::log::SolveLog;
use super::metrics::{
    classify_solves, confusion, counts_match, hit_quality, iteration_trace, oracle_bound, pd_integral,
    performance_profile, replay, shifted_geom_mean, Breakdown, MlMetrics, ProfilePoint,
};
use crate::error::{Error, Result};
use crate::master::SolveStatus;

/// Shift used for every geometric mean in the reports.
pub const GEOMETRIC_SHIFT: f64 = 10.0;

/// Everything the reports say about one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub log: String,
    pub instance: String,
    pub config: String,
    pub seed: u64,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: f64,
    pub gap: Option<f64>,
    pub wall_time: f64,
    /// Wall time when solved, otherwise the limit plus the gap in percent.
    pub penalized_time: f64,
    pub pd_integral: f64,
    pub oracle_time: f64,
    pub all_time: f64,
    pub hit_quality: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub rounds: u64,
    pub cuts: u64,
    pub solves: u64,
    pub unrequired_solves: u64,
    pub replay_consistent: bool,
    #[serde(skip)]
    pub breakdown: Breakdown,
    #[serde(skip)]
    pub tp_fp_fn_tn: [u64; 4],
}

impl RunRow {
    pub fn solved(&self) -> bool {
        self.status != SolveStatus::TimeLimit
    }

    pub fn unrequired_fraction(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.unrequired_solves as f64 / self.solves as f64
        }
    }
}

/// Builds the report row of one log.
pub fn run_row(name: &str, log: &SolveLog) -> Result<RunRow> {
    let header = log
        .header()
        .ok_or_else(|| Error::MalformedLog(format!("{name}: missing header")))?;
    let summary = log
        .summary()
        .ok_or_else(|| Error::MalformedLog(format!("{name}: missing final summary")))?;
    log.check_timestamps()?;
    let breakdown = classify_solves(log)?;
    let oracle = oracle_bound(log)?;
    let c = confusion(log);
    let ml = MlMetrics::from_confusion(&c);
    let penalized_time = match summary.status {
        SolveStatus::TimeLimit => {
            header.time_limit.unwrap_or(summary.wall_time) + 100.0 * summary.gap.unwrap_or(1.0)
        }
        _ => summary.wall_time,
    };
    Ok(RunRow {
        log: name.to_string(),
        instance: header.instance.clone(),
        config: header.config.clone(),
        seed: header.seed,
        status: summary.status,
        objective: summary.objective,
        bound: summary.bound,
        gap: summary.gap,
        wall_time: summary.wall_time,
        penalized_time,
        pd_integral: pd_integral(log),
        oracle_time: oracle.oracle,
        all_time: oracle.all,
        hit_quality: hit_quality(log)?,
        accuracy: ml.accuracy,
        precision: ml.precision,
        recall: ml.recall,
        f1: ml.f1,
        rounds: summary.rounds,
        cuts: summary.cuts_added,
        solves: breakdown.total_solves,
        unrequired_solves: breakdown.unrequired_count,
        replay_consistent: counts_match(&replay(log)?, summary),
        breakdown,
        tp_fp_fn_tn: [c.tp, c.fp, c.fn_, c.tn],
    })
}

/// Per-configuration aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub config: String,
    pub runs: usize,
    pub solved: usize,
    pub geo_mean_time: f64,
    pub geo_mean_pd_integral: f64,
    pub mean_hit_quality: f64,
    pub unrequired_fraction: f64,
    pub oracle_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub runs: Vec<RunRow>,
    pub configs: Vec<ConfigSummary>,
    pub profile: Vec<ProfilePoint>,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RuntimeRow<'a> {
    instance: &'a str,
    config: &'a str,
    seed: u64,
    status: SolveStatus,
    objective: Option<f64>,
    bound: f64,
    gap: Option<f64>,
    wall_time: f64,
    penalized_time: f64,
}

#[derive(Serialize)]
struct KeyedValue<'a> {
    instance: &'a str,
    config: &'a str,
    seed: u64,
    value: f64,
}

#[derive(Serialize)]
struct BreakdownRow<'a> {
    instance: &'a str,
    config: &'a str,
    seed: u64,
    master_time: f64,
    cut_time: f64,
    cut_count: u64,
    feasibility_time: f64,
    feasibility_count: u64,
    unrequired_time: f64,
    unrequired_count: u64,
    other_time: f64,
    wall_time: f64,
    total_solves: u64,
}

#[derive(Serialize)]
struct OracleRow<'a> {
    instance: &'a str,
    config: &'a str,
    seed: u64,
    oracle_time: f64,
    all_time: f64,
}

#[derive(Serialize)]
struct MlRow<'a> {
    instance: &'a str,
    config: &'a str,
    seed: u64,
    tp: u64,
    fp: u64,
    r#fn: u64,
    tn: u64,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

#[derive(Serialize)]
struct TraceRow<'a> {
    instance: &'a str,
    config: &'a str,
    seed: u64,
    iteration: u64,
    examined: usize,
    cuts: usize,
    solve_time: f64,
}

fn aggregate(config: &str, rows: &[&RunRow]) -> Result<ConfigSummary> {
    let times: Vec<f64> = rows.iter().map(|r| r.penalized_time).collect();
    let integrals: Vec<f64> = rows.iter().map(|r| r.pd_integral.max(0.0)).collect();
    let solves: u64 = rows.iter().map(|r| r.solves).sum();
    let unrequired: u64 = rows.iter().map(|r| r.unrequired_solves).sum();
    let oracle: f64 = rows.iter().map(|r| r.oracle_time).sum();
    let all: f64 = rows.iter().map(|r| r.all_time).sum();
    Ok(ConfigSummary {
        config: config.to_string(),
        runs: rows.len(),
        solved: rows.iter().filter(|r| r.solved()).count(),
        geo_mean_time: shifted_geom_mean(&times, GEOMETRIC_SHIFT)?,
        geo_mean_pd_integral: shifted_geom_mean(&integrals, GEOMETRIC_SHIFT)?,
        mean_hit_quality: rows.iter().map(|r| r.hit_quality).sum::<f64>() / rows.len() as f64,
        unrequired_fraction: if solves == 0 { 0.0 } else { unrequired as f64 / solves as f64 },
        oracle_fraction: if all > 0.0 { oracle / all } else { 0.0 },
    })
}

/// Writes every report table for `logs` (name, log) into `out`.
pub fn write_report(logs: &[(String, SolveLog)], out: &Path) -> Result<Report> {
    fs::create_dir_all(out)?;
    let mut runs = Vec::with_capacity(logs.len());
    let mut traces = Vec::new();
    for (name, log) in logs {
        let row = run_row(name, log)?;
        for t in iteration_trace(log)? {
            traces.push((row.instance.clone(), row.config.clone(), row.seed, t));
        }
        runs.push(row);
    }

    write_csv(
        &out.join("runtimes.csv"),
        runs.iter().map(|r| RuntimeRow {
            instance: &r.instance,
            config: &r.config,
            seed: r.seed,
            status: r.status,
            objective: r.objective,
            bound: r.bound,
            gap: r.gap,
            wall_time: r.wall_time,
            penalized_time: r.penalized_time,
        }),
    )?;
    let keyed = |f: fn(&RunRow) -> f64| {
        runs.iter()
            .map(move |r| KeyedValue {
                instance: &r.instance,
                config: &r.config,
                seed: r.seed,
                value: f(r),
            })
            .collect::<Vec<_>>()
    };
    write_csv(&out.join("pd_integral.csv"), keyed(|r| r.pd_integral))?;
    write_csv(&out.join("hit_quality.csv"), keyed(|r| r.hit_quality))?;
    write_csv(
        &out.join("breakdown.csv"),
        runs.iter().map(|r| {
            let b = &r.breakdown;
            BreakdownRow {
                instance: &r.instance,
                config: &r.config,
                seed: r.seed,
                master_time: b.master_time,
                cut_time: b.cut_time,
                cut_count: b.cut_count,
                feasibility_time: b.feasibility_time,
                feasibility_count: b.feasibility_count,
                unrequired_time: b.unrequired_time,
                unrequired_count: b.unrequired_count,
                other_time: b.other_time,
                wall_time: b.wall_time,
                total_solves: b.total_solves,
            }
        }),
    )?;
    write_csv(
        &out.join("oracle.csv"),
        runs.iter().map(|r| OracleRow {
            instance: &r.instance,
            config: &r.config,
            seed: r.seed,
            oracle_time: r.oracle_time,
            all_time: r.all_time,
        }),
    )?;
    write_csv(
        &out.join("ml_metrics.csv"),
        runs.iter().map(|r| MlRow {
            instance: &r.instance,
            config: &r.config,
            seed: r.seed,
            tp: r.tp_fp_fn_tn[0],
            fp: r.tp_fp_fn_tn[1],
            r#fn: r.tp_fp_fn_tn[2],
            tn: r.tp_fp_fn_tn[3],
            accuracy: r.accuracy,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        }),
    )?;
    write_csv(
        &out.join("trace.csv"),
        traces.iter().map(|(i, c, s, t)| TraceRow {
            instance: i,
            config: c,
            seed: *s,
            iteration: t.iteration,
            examined: t.examined,
            cuts: t.cuts,
            solve_time: t.solve_time,
        }),
    )?;

    // paired columns: one row per (instance, seed), one column per config
    let configs: Vec<String> = {
        let mut c: Vec<String> = runs.iter().map(|r| r.config.clone()).collect();
        c.sort();
        c.dedup();
        c
    };
    let mut cells: BTreeMap<(String, u64), BTreeMap<String, &RunRow>> = BTreeMap::new();
    for r in &runs {
        cells
            .entry((r.instance.clone(), r.seed))
            .or_default()
            .insert(r.config.clone(), r);
    }
    {
        let mut w = csv::Writer::from_path(out.join("paired.csv"))?;
        let mut head = vec!["instance".to_string(), "seed".to_string()];
        head.extend(configs.iter().cloned());
        w.write_record(&head)?;
        for ((inst, seed), by_config) in &cells {
            let mut rec = vec![inst.clone(), seed.to_string()];
            rec.extend(
                configs
                    .iter()
                    .map(|c| by_config.get(c).map_or(String::new(), |r| r.penalized_time.to_string())),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
    }

    let methods: Vec<(String, Vec<Option<f64>>)> = configs
        .iter()
        .map(|c| {
            let times = cells
                .values()
                .map(|by| by.get(c).filter(|r| r.solved()).map(|r| r.wall_time))
                .collect();
            (c.clone(), times)
        })
        .collect();
    let profile = performance_profile(&methods);
    write_csv(&out.join("profile.csv"), &profile)?;

    let mut summaries = Vec::new();
    for c in &configs {
        let rows: Vec<&RunRow> = runs.iter().filter(|r| &r.config == c).collect();
        summaries.push(aggregate(c, &rows)?);
    }
    write_csv(&out.join("summary.csv"), &summaries)?;
    write_csv(&out.join("runs.csv"), &runs)?;

    Ok(Report {
        runs,
        configs: summaries,
        profile,
    })
}

/// Log files (`*.jsonl`) of a directory, sorted by name.
pub fn log_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads every log of `logs_dir` and writes the report into `out`.
pub fn report_dir(logs_dir: &Path, out: &Path) -> Result<Report> {
    let mut logs = Vec::new();
    for path in log_files(logs_dir)? {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        logs.push((name, SolveLog::load(&path)?));
    }
    if logs.is_empty() {
        return Err(Error::EmptyInput);
    }
    write_report(&logs, out)
}
