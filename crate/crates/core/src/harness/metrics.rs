//! Metrics computed from solve logs.
//!
//! Every function here is a pure function of a [`SolveLog`].

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::log::{LogEvent, RunSummary, SolveLog};
use crate::error::{Error, Result};
use crate::master::relative_gap;
use crate::scoring::Confusion;

/// One subproblem solve as seen in a log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveEntry {
    pub iteration: u64,
    pub scenario: usize,
    pub duration: f64,
    pub cut: bool,
    pub probability: f64,
}

/// Subproblem solves grouped by iteration, in log order.
///
/// Fails when a cut is logged without a cut-yielding solve of the same
/// scenario earlier in its iteration.
pub fn iterations(log: &SolveLog) -> Result<BTreeMap<u64, Vec<SolveEntry>>> {
    let mut by_iter: BTreeMap<u64, Vec<SolveEntry>> = BTreeMap::new();
    for e in &log.events {
        match e {
            LogEvent::Subproblem {
                iteration,
                scenario,
                duration,
                cut,
                probability,
                ..
            } => by_iter.entry(*iteration).or_default().push(SolveEntry {
                iteration: *iteration,
                scenario: *scenario,
                duration: *duration,
                cut: *cut,
                probability: *probability,
            }),
            LogEvent::CutAdded { iteration, cut, .. } => {
                let ok = by_iter
                    .get(iteration)
                    .is_some_and(|solves| solves.iter().any(|s| s.cut && s.scenario == cut.scenario));
                if !ok {
                    return Err(Error::MalformedLog(format!(
                        "cut for scenario {} in iteration {iteration} has no cut-yielding solve",
                        cut.scenario
                    )));
                }
            }
            _ => {}
        }
    }
    Ok(by_iter)
}

/// Time and count split of a run's subproblem solves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub master_time: f64,
    pub cut_time: f64,
    pub cut_count: u64,
    pub feasibility_time: f64,
    pub feasibility_count: u64,
    pub unrequired_time: f64,
    pub unrequired_count: u64,
    /// Wall time not spent in master or subproblem solves.
    pub other_time: f64,
    pub wall_time: f64,
    pub total_solves: u64,
}

fn wall_time(log: &SolveLog) -> f64 {
    log.summary()
        .map(|s| s.wall_time)
        .or_else(|| log.events.iter().rev().find_map(LogEvent::time))
        .unwrap_or(0.0)
}

/// Splits solves into cut-generating ones, feasibility-proving ones (in
/// iterations without any cut) and unrequired ones (cut-free solves in
/// iterations where some other solve found a cut).
pub fn classify_solves(log: &SolveLog) -> Result<Breakdown> {
    let mut b = Breakdown::default();
    for solves in iterations(log)?.values() {
        let any_cut = solves.iter().any(|s| s.cut);
        for s in solves {
            b.total_solves += 1;
            if s.cut {
                b.cut_count += 1;
                b.cut_time += s.duration;
            } else if any_cut {
                b.unrequired_count += 1;
                b.unrequired_time += s.duration;
            } else {
                b.feasibility_count += 1;
                b.feasibility_time += s.duration;
            }
        }
    }
    for e in &log.events {
        if let LogEvent::MasterSolve { duration, .. } = e {
            b.master_time += duration;
        }
    }
    b.wall_time = wall_time(log);
    b.other_time = (b.wall_time - b.master_time - b.cut_time - b.feasibility_time - b.unrequired_time).max(0.0);
    Ok(b)
}

/// Subproblem time of a perfect cut predictor next to the time actually
/// spent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleBound {
    /// Time of the cut-yielding solves only.
    pub oracle: f64,
    /// Time of all solves.
    pub all: f64,
}

pub fn oracle_bound(log: &SolveLog) -> Result<OracleBound> {
    let mut o = OracleBound::default();
    for solves in iterations(log)?.values() {
        for s in solves {
            o.all += s.duration;
            if s.cut {
                o.oracle += s.duration;
            }
        }
    }
    Ok(o)
}

/// `∫₀ᵀ (primal(t) - dual(t)) dt` for right-continuous step functions given
/// as `(time, value)` changes, starting from `primal0` and `dual0`.
pub fn step_integral(primal0: f64, primal: &[(f64, f64)], dual0: f64, dual: &[(f64, f64)], end: f64) -> f64 {
    let mut times: Vec<f64> = primal
        .iter()
        .chain(dual)
        .map(|&(t, _)| t)
        .filter(|&t| t < end)
        .collect();
    times.push(0.0);
    times.push(end);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let value_at = |start: f64, steps: &[(f64, f64)], t: f64| {
        steps
            .iter()
            .take_while(|&&(s, _)| s <= t)
            .last()
            .map_or(start, |&(_, v)| v)
    };
    times
        .windows(2)
        .map(|w| (value_at(primal0, primal, w[0]) - value_at(dual0, dual, w[0])) * (w[1] - w[0]))
        .sum()
}

/// Primal-dual integral of a run. The primal side starts at the header's
/// cap and the dual side at 0.
pub fn pd_integral(log: &SolveLog) -> f64 {
    let cap = log.header().map_or(0.0, |h| h.primal_cap);
    let mut primal = Vec::new();
    let mut dual = Vec::new();
    for e in &log.events {
        match e {
            LogEvent::Incumbent { time, value } => primal.push((*time, *value)),
            LogEvent::Bound { time, value } => dual.push((*time, *value)),
            _ => {}
        }
    }
    step_integral(cap, &primal, 0.0, &dual, wall_time(log))
}

/// `(∏(x + s))^(1/n) - s`, computed as `s·(exp(mean ln(1 + x/s)) - 1)`.
pub fn shifted_geom_mean(values: &[f64], shift: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = values.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::validation("values", format!("{bad} is not a finite non-negative number")));
    }
    if shift <= 0.0 {
        return Err(Error::validation("shift", format!("{shift} is not positive")));
    }
    let mean_log = values.iter().map(|x| (x / shift).ln_1p()).sum::<f64>() / values.len() as f64;
    Ok(shift * mean_log.exp_m1())
}

/// One point `(τ, ρ_m(τ))` of a performance profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub method: String,
    pub tau: f64,
    pub rho: f64,
}

/// Run times shorter than this count as this long when forming ratios.
pub const MIN_PROFILE_TIME: f64 = 1e-6;

/// Performance profile over `times[m][i]` (`None` = unsolved).
///
/// Instances no method solved are left out. Points are emitted for every
/// method at every finite ratio that occurs.
pub fn performance_profile(methods: &[(String, Vec<Option<f64>>)]) -> Vec<ProfilePoint> {
    let Some(count) = methods.first().map(|(_, t)| t.len()) else {
        return Vec::new();
    };
    let included: Vec<usize> = (0..count)
        .filter(|&i| methods.iter().any(|(_, t)| t.get(i).copied().flatten().is_some()))
        .collect();
    if included.is_empty() {
        return Vec::new();
    }
    let ratios: Vec<Vec<f64>> = methods
        .iter()
        .map(|(_, times)| {
            included
                .iter()
                .map(|&i| {
                    let best = methods
                        .iter()
                        .filter_map(|(_, t)| t.get(i).copied().flatten())
                        .map(|t| t.max(MIN_PROFILE_TIME))
                        .fold(f64::INFINITY, f64::min);
                    times
                        .get(i)
                        .copied()
                        .flatten()
                        .map_or(f64::INFINITY, |t| t.max(MIN_PROFILE_TIME) / best)
                })
                .collect()
        })
        .collect();
    let mut taus: Vec<f64> = ratios.iter().flatten().copied().filter(|r| r.is_finite()).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let n = included.len() as f64;
    let mut points = Vec::new();
    for ((name, _), r) in methods.iter().zip(&ratios) {
        for &tau in &taus {
            points.push(ProfilePoint {
                method: name.clone(),
                tau,
                rho: r.iter().filter(|&&x| x <= tau).count() as f64 / n,
            });
        }
    }
    points
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MlMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MlMetrics {
    /// Standard formulas; zero denominators give 0.
    pub fn from_confusion(c: &Confusion) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MlMetrics {
            accuracy: ratio(c.tp + c.tn, c.tp + c.fp + c.fn_ + c.tn),
            precision,
            recall,
            f1,
        }
    }
}

/// Confusion counts of the logged predictions at threshold 0.5.
pub fn confusion(log: &SolveLog) -> Confusion {
    let mut c = Confusion::default();
    for e in &log.events {
        if let LogEvent::Subproblem { probability, cut, .. } = e {
            c.record(*probability, *cut);
        }
    }
    c
}

pub fn ml_metrics(log: &SolveLog) -> MlMetrics {
    MlMetrics::from_confusion(&confusion(log))
}

/// Unweighted mean over iterations of cuts found per subproblem examined.
pub fn hit_quality(log: &SolveLog) -> Result<f64> {
    let its = iterations(log)?;
    let ratios: Vec<f64> = its
        .values()
        .filter(|s| !s.is_empty())
        .map(|s| s.iter().filter(|x| x.cut).count() as f64 / s.len() as f64)
        .collect();
    Ok(if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    })
}

/// Per-iteration cut yield, for plotting how it evolves over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: u64,
    pub examined: usize,
    pub cuts: usize,
    pub solve_time: f64,
}

pub fn iteration_trace(log: &SolveLog) -> Result<Vec<IterationTrace>> {
    Ok(iterations(log)?
        .into_iter()
        .map(|(iteration, s)| IterationTrace {
            iteration,
            examined: s.len(),
            cuts: s.iter().filter(|x| x.cut).count(),
            solve_time: s.iter().map(|x| x.duration).sum(),
        })
        .collect())
}

/// Recomputes a run summary from the event stream alone.
pub fn replay(log: &SolveLog) -> Result<RunSummary> {
    let stored = log
        .summary()
        .ok_or_else(|| Error::MalformedLog("log has no final summary".into()))?;
    let breakdown = classify_solves(log)?;
    let oracle = oracle_bound(log)?;
    let mut s = RunSummary {
        status: stored.status,
        objective: None,
        bound: 0.0,
        gap: None,
        wall_time: breakdown.wall_time,
        master_time: 0.0,
        subproblem_time: oracle.all,
        nodes: 0,
        master_solves: 0,
        rounds: 0,
        subproblem_solves: breakdown.total_solves,
        cut_solves: breakdown.cut_count,
        feasibility_solves: breakdown.feasibility_count,
        unrequired_solves: breakdown.unrequired_count,
        cuts_added: 0,
        duplicate_cuts: 0,
        oracle_time: oracle.oracle,
        hit_quality: hit_quality(log)?,
        confusion: confusion(log),
    };
    let mut nodes = HashSet::new();
    for e in &log.events {
        match e {
            LogEvent::MasterSolve { node, duration, .. } => {
                s.master_solves += 1;
                s.master_time += duration;
                nodes.insert(*node);
            }
            LogEvent::RoundEnd { duplicates, .. } => {
                s.rounds += 1;
                s.duplicate_cuts += *duplicates as u64;
            }
            LogEvent::CutAdded { .. } => s.cuts_added += 1,
            LogEvent::Incumbent { value, .. } => s.objective = Some(*value),
            LogEvent::Bound { value, .. } => s.bound = *value,
            _ => {}
        }
    }
    s.nodes = nodes.len() as u64;
    s.gap = s.objective.map(|v| relative_gap(v, s.bound));
    Ok(s)
}

/// Count fields of two summaries that must agree exactly.
pub fn counts_match(a: &RunSummary, b: &RunSummary) -> bool {
    (
        a.nodes,
        a.master_solves,
        a.rounds,
        a.subproblem_solves,
        a.cut_solves,
        a.feasibility_solves,
        a.unrequired_solves,
        a.cuts_added,
        a.duplicate_cuts,
        a.confusion,
    ) == (
        b.nodes,
        b.master_solves,
        b.rounds,
        b.subproblem_solves,
        b.cut_solves,
        b.feasibility_solves,
        b.unrequired_solves,
        b.cuts_added,
        b.duplicate_cuts,
        b.confusion,
    )
}
