//! Line-delimited JSON solve logs.
//!
//! A log is a header line, one line per event, and a final summary line.
//! Logs cut short by a crash lose at most their last, partial line.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master::SolveStatus;
use crate::scoring::{Confusion, LogisticModel};
use crate::selection::{RoundKind, RoundResult, StopReason};
use crate::subproblem::BendersCut;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub instance: String,
    pub config: String,
    pub seed: u64,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    pub gap_tolerance: f64,
    pub learning_rate: f64,
    pub regularization: f64,
    /// Primal value assumed before the first incumbent in integrals.
    pub primal_cap: f64,
    pub scenarios: usize,
}

/// Totals maintained while the solve runs; replay recomputes the same
/// quantities from the event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: f64,
    pub gap: Option<f64>,
    pub wall_time: f64,
    pub master_time: f64,
    pub subproblem_time: f64,
    /// Distinct branch-and-bound nodes with at least one LP solve.
    pub nodes: u64,
    pub master_solves: u64,
    pub rounds: u64,
    pub subproblem_solves: u64,
    pub cut_solves: u64,
    pub feasibility_solves: u64,
    pub unrequired_solves: u64,
    pub cuts_added: u64,
    pub duplicate_cuts: u64,
    pub oracle_time: f64,
    pub hit_quality: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Header(RunHeader),
    MasterSolve {
        time: f64,
        duration: f64,
        node: u64,
        /// LP value, absent when the node relaxation is infeasible.
        value: Option<f64>,
    },
    RoundStart {
        time: f64,
        iteration: u64,
        kind: RoundKind,
        /// Module counts of the integral candidate being checked.
        design: Vec<u32>,
    },
    Subproblem {
        time: f64,
        iteration: u64,
        scenario: usize,
        duration: f64,
        cut: bool,
        score: f64,
        probability: f64,
        violation: Option<f64>,
    },
    CutAdded {
        time: f64,
        iteration: u64,
        cut: BendersCut,
    },
    RoundEnd {
        time: f64,
        iteration: u64,
        examined: usize,
        cuts: usize,
        /// Cuts found again that the master already had.
        duplicates: usize,
        stop: StopReason,
    },
    Incumbent {
        time: f64,
        value: f64,
    },
    Bound {
        time: f64,
        value: f64,
    },
    Model {
        time: f64,
        iteration: u64,
        model: LogisticModel,
    },
    Final(RunSummary),
}

impl LogEvent {
    pub fn time(&self) -> Option<f64> {
        match self {
            LogEvent::Header(_) => None,
            LogEvent::Final(s) => Some(s.wall_time),
            LogEvent::MasterSolve { time, .. }
            | LogEvent::RoundStart { time, .. }
            | LogEvent::Subproblem { time, .. }
            | LogEvent::CutAdded { time, .. }
            | LogEvent::RoundEnd { time, .. }
            | LogEvent::Incumbent { time, .. }
            | LogEvent::Bound { time, .. }
            | LogEvent::Model { time, .. } => Some(*time),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveLog {
    pub events: Vec<LogEvent>,
}

impl SolveLog {
    pub fn header(&self) -> Option<&RunHeader> {
        self.events.iter().find_map(|e| match e {
            LogEvent::Header(h) => Some(h),
            _ => None,
        })
    }

    pub fn summary(&self) -> Option<&RunSummary> {
        self.events.iter().rev().find_map(|e| match e {
            LogEvent::Final(s) => Some(s),
            _ => None,
        })
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    /// Reads a log; a malformed last line is dropped as a partial write,
    /// anywhere else it is an error.
    pub fn read_from(input: impl BufRead) -> Result<SolveLog> {
        let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
        let last = lines.iter().rposition(|l| !l.trim().is_empty());
        let mut events = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(e) => events.push(e),
                Err(err) if Some(i) == last => {
                    log::warn!("dropping truncated final log line: {err}");
                }
                Err(err) => return Err(Error::MalformedLog(format!("line {}: {err}", i + 1))),
            }
        }
        Ok(SolveLog { events })
    }

    pub fn load(path: &Path) -> Result<SolveLog> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Checks that timestamps never decrease.
    pub fn check_timestamps(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for (i, t) in self.events.iter().filter_map(LogEvent::time).enumerate() {
            if t < prev {
                return Err(Error::MalformedLog(format!("timestamp {t} after {prev} at event {i}")));
            }
            prev = t;
        }
        Ok(())
    }
}

/// Builds a log during a solve and keeps the running summary.
pub(crate) struct Recorder {
    origin: Instant,
    pub(crate) log: SolveLog,
    pub(crate) summary: RunSummary,
    hit_sum: f64,
    hit_rounds: u64,
    last: f64,
    nodes: HashSet<u64>,
}

impl Recorder {
    pub(crate) fn new(header: RunHeader, origin: Instant) -> Self {
        Recorder {
            origin,
            log: SolveLog {
                events: vec![LogEvent::Header(header)],
            },
            summary: RunSummary {
                status: SolveStatus::TimeLimit,
                objective: None,
                bound: 0.0,
                gap: None,
                wall_time: 0.0,
                master_time: 0.0,
                subproblem_time: 0.0,
                nodes: 0,
                master_solves: 0,
                rounds: 0,
                subproblem_solves: 0,
                cut_solves: 0,
                feasibility_solves: 0,
                unrequired_solves: 0,
                cuts_added: 0,
                duplicate_cuts: 0,
                oracle_time: 0.0,
                hit_quality: 0.0,
                confusion: Confusion::default(),
            },
            hit_sum: 0.0,
            hit_rounds: 0,
            last: 0.0,
            nodes: HashSet::new(),
        }
    }

    /// Current timestamp, never below the previous one handed out.
    pub(crate) fn now(&mut self) -> f64 {
        self.last = self.last.max(self.origin.elapsed().as_secs_f64());
        self.last
    }

    pub(crate) fn master_solve(&mut self, node: u64, duration: f64, value: Option<f64>) {
        let time = self.now();
        self.summary.master_solves += 1;
        if self.nodes.insert(node) {
            self.summary.nodes += 1;
        }
        self.summary.master_time += duration;
        self.log.events.push(LogEvent::MasterSolve {
            time,
            duration,
            node,
            value,
        });
    }

    pub(crate) fn round_start(&mut self, iteration: u64, kind: RoundKind, design: &[u32]) {
        let time = self.now();
        self.log.events.push(LogEvent::RoundStart {
            time,
            iteration,
            kind,
            design: design.to_vec(),
        });
    }

    pub(crate) fn round(&mut self, round: &RoundResult, model: &LogisticModel) {
        for r in &round.records {
            self.last = self.last.max(r.at);
            let duration = r.solve_time.as_secs_f64();
            self.summary.subproblem_solves += 1;
            self.summary.subproblem_time += duration;
            self.summary.confusion.record(r.probability, r.cut);
            if r.cut {
                self.summary.cut_solves += 1;
                self.summary.oracle_time += duration;
            } else if round.cuts.is_empty() {
                self.summary.feasibility_solves += 1;
            } else {
                self.summary.unrequired_solves += 1;
            }
            self.log.events.push(LogEvent::Subproblem {
                time: self.last,
                iteration: round.iteration,
                scenario: r.scenario,
                duration,
                cut: r.cut,
                score: r.score,
                probability: r.probability,
                violation: r.violation,
            });
        }
        let time = self.now();
        for cut in &round.cuts {
            self.log.events.push(LogEvent::CutAdded {
                time,
                iteration: round.iteration,
                cut: cut.clone(),
            });
        }
        self.summary.rounds += 1;
        self.summary.cuts_added += round.cuts.len() as u64;
        self.summary.duplicate_cuts += round.duplicates as u64;
        if !round.records.is_empty() {
            self.hit_sum += round.cuts.len() as f64 / round.records.len() as f64;
            self.hit_rounds += 1;
            self.summary.hit_quality = self.hit_sum / self.hit_rounds as f64;
        }
        self.log.events.push(LogEvent::RoundEnd {
            time,
            iteration: round.iteration,
            examined: round.records.len(),
            cuts: round.cuts.len(),
            duplicates: round.duplicates,
            stop: round.stop,
        });
        if round.kind.is_full() {
            self.log.events.push(LogEvent::Model {
                time,
                iteration: round.iteration,
                model: model.clone(),
            });
        }
    }

    pub(crate) fn incumbent(&mut self, value: f64) {
        let time = self.now();
        self.summary.objective = Some(value);
        self.log.events.push(LogEvent::Incumbent { time, value });
    }

    pub(crate) fn bound(&mut self, value: f64) {
        let time = self.now();
        self.summary.bound = value;
        self.log.events.push(LogEvent::Bound { time, value });
    }

    pub(crate) fn finish(mut self, status: SolveStatus, gap: Option<f64>) -> (SolveLog, RunSummary) {
        self.summary.status = status;
        self.summary.gap = gap;
        self.summary.wall_time = self.now();
        self.log.events.push(LogEvent::Final(self.summary.clone()));
        (self.log, self.summary)
    }
}
