//! Branch-and-Benders-cut over the module variables, and the compact
//! all-scenario formulation used as a reference on small instances.
//!
//! Both solvers share one best-bound branch-and-bound engine. The Benders
//! master holds the module variables `y`, the base-case flows and every cut
//! found so far; at each LP-integral candidate a selection round checks the
//! scenarios, and the candidate only becomes incumbent after a round that
//! examined every scenario without finding a cut.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::log::{Recorder, RunHeader, SolveLog};
use crate::instance::{edge_betweenness, ModuleLayout, NetworkInstance};
use crate::lp::{solve_lp, Basis, LinearProgram, LpOutcome, LpSettings, Row, Variable};
use crate::scoring::{LogisticModel, MasterView};
use crate::selection::{classify_round, parse_config_id, Selector, StoppingConfig};
use crate::subproblem::{flow_column, BendersCut, ScenarioOutcome, ScenarioTemplate};

/// Distance from the nearest integer below which a value counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Default cap on `|S₀|·|D|·|A|` for [`solve_compact`].
pub const DEFAULT_COMPACT_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub selection: StoppingConfig,
    pub time_limit: Option<Duration>,
    pub gap_tolerance: f64,
    pub seed: u64,
    pub learning_rate: f64,
    pub regularization: f64,
    /// Primal value used before the first incumbent; see
    /// [`default_primal_cap`].
    pub primal_cap: Option<f64>,
    pub lp: LpSettings,
}

impl RunConfig {
    pub fn new(selection: StoppingConfig) -> Self {
        RunConfig {
            selection,
            time_limit: None,
            gap_tolerance: 1e-6,
            seed: 0,
            learning_rate: LogisticModel::DEFAULT_LEARNING_RATE,
            regularization: LogisticModel::DEFAULT_REGULARIZATION,
            primal_cap: None,
            lp: LpSettings::default(),
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Ok(Self::new(parse_config_id(id)?))
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Modules per flat index of the best verified design.
    pub design: Option<Vec<u32>>,
    pub objective: Option<f64>,
    pub bound: f64,
    pub gap: Option<f64>,
    /// Every cut added to the master, in order.
    pub cuts: Vec<BendersCut>,
    pub log: SolveLog,
}

/// Relative gap `(incumbent - bound) / max(1e-10, |incumbent|)`.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    (incumbent - bound) / incumbent.abs().max(1e-10)
}

/// Cost of installing, on every edge, enough of its largest module to carry
/// the total demand: an upper bound on the optimum.
pub fn default_primal_cap(instance: &NetworkInstance) -> f64 {
    let total: f64 = instance.demands.iter().map(|d| d.value).sum();
    instance
        .edges
        .iter()
        .filter(|e| !e.modules.is_empty())
        .map(|e| {
            let cap = e.modules.iter().map(|m| m.capacity).fold(0.0, f64::max);
            let cost = e.modules.iter().map(|m| m.cost).fold(0.0, f64::max);
            if cap > 0.0 {
                cost * (total / cap).ceil()
            } else {
                0.0
            }
        })
        .sum()
}

pub(crate) struct NodeInfo {
    pub id: u64,
}

pub(crate) enum Verdict {
    Accept,
    Cuts(Vec<Row>),
    /// The candidate is only integral within tolerance; branch to make it
    /// exact.
    Refine,
}

pub(crate) trait TreeDriver {
    fn candidate(&mut self, node: &NodeInfo, x: &[f64]) -> Result<Verdict>;
    fn master_solve(&mut self, _node: u64, _duration: f64, _value: Option<f64>) {}
    fn incumbent(&mut self, _value: f64) {}
    fn bound(&mut self, _value: f64) {}
}

struct Node {
    id: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed so the max-heap pops the smallest bound, then the oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

pub(crate) struct TreeOutcome {
    pub status: SolveStatus,
    pub incumbent: Option<(f64, Vec<f64>)>,
    pub bound: f64,
}

/// Index of the most fractional entry, lowest index on ties.
fn most_fractional(x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in x.iter().enumerate() {
        let dist = (v - v.round()).abs();
        if dist > tol && best.is_none_or(|(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

struct Tree<'a, D> {
    lp: &'a mut LinearProgram,
    integer: usize,
    settings: &'a LpSettings,
    deadline: Option<Instant>,
    gap_tol: f64,
    driver: &'a mut D,
    incumbent: Option<(f64, Vec<f64>)>,
    bound: f64,
    next_id: u64,
}

impl<D: TreeDriver> Tree<'_, D> {
    fn closed(&self, bound: f64) -> bool {
        self.incumbent
            .as_ref()
            .is_some_and(|(inc, _)| inc - bound <= self.gap_tol * (1.0 + bound.abs()))
    }

    fn raise_bound(&mut self, value: f64) {
        if value.is_finite() && value > self.bound {
            self.bound = value;
            self.driver.bound(value);
        }
    }

    fn check_deadline(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::TimeLimit),
            _ => Ok(()),
        }
    }

    fn child(&mut self, parent: &Node, j: usize, lower: f64, upper: f64) -> Node {
        self.next_id += 1;
        let mut lo = parent.lower.clone();
        let mut hi = parent.upper.clone();
        lo[j] = lower;
        hi[j] = upper;
        Node {
            id: self.next_id,
            lower: lo,
            upper: hi,
            bound: parent.bound,
            basis: parent.basis.clone(),
        }
    }

    fn run(&mut self, heap: &mut BinaryHeap<Node>) -> Result<()> {
        while let Some(mut node) = heap.pop() {
            self.check_deadline()?;
            if self.closed(node.bound) {
                heap.clear();
                break;
            }
            self.raise_bound(node.bound);
            for j in 0..self.integer {
                self.lp.variables[j].lower = node.lower[j];
                self.lp.variables[j].upper = node.upper[j];
            }
            loop {
                self.check_deadline()?;
                let warm = node.basis.as_ref().and_then(|b| b.extended_to(self.lp));
                let started = Instant::now();
                let solved = solve_lp(self.lp, warm.as_ref(), self.settings)?;
                let duration = started.elapsed().as_secs_f64();
                let sol = match solved.outcome {
                    LpOutcome::Infeasible(_) => {
                        self.driver.master_solve(node.id, duration, None);
                        break;
                    }
                    LpOutcome::Unbounded => {
                        return Err(Error::Numerical("master relaxation is unbounded".into()));
                    }
                    LpOutcome::Optimal(sol) => sol,
                };
                self.driver.master_solve(node.id, duration, Some(sol.objective));
                debug_assert!(
                    sol.objective >= node.bound - 1e-6 * (1.0 + node.bound.abs()),
                    "node LP value {} below its bound {}",
                    sol.objective,
                    node.bound
                );
                node.bound = node.bound.max(sol.objective);
                node.basis = Some(solved.basis);
                let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
                self.raise_bound(node.bound.min(open_min));
                if self.closed(node.bound) {
                    break;
                }
                let x = sol.primal;
                if let Some(j) = most_fractional(&x[..self.integer], INTEGRALITY_TOL) {
                    let left = self.child(&node, j, node.lower[j], x[j].floor());
                    let right = self.child(&node, j, x[j].ceil(), node.upper[j]);
                    heap.push(left);
                    heap.push(right);
                    break;
                }
                match self.driver.candidate(&NodeInfo { id: node.id }, &x)? {
                    Verdict::Accept => {
                        let value: f64 = self
                            .lp
                            .variables
                            .iter()
                            .zip(&x)
                            .enumerate()
                            .map(|(j, (v, &xj))| v.cost * if j < self.integer { xj.round() } else { xj })
                            .sum();
                        if self.incumbent.as_ref().is_none_or(|(inc, _)| value < *inc) {
                            self.incumbent = Some((value, x));
                            self.driver.incumbent(value);
                        }
                        break;
                    }
                    Verdict::Cuts(rows) => {
                        if rows.is_empty() {
                            return Err(Error::Numerical("candidate rejected without a cut".into()));
                        }
                        self.lp.inequalities.extend(rows);
                    }
                    Verdict::Refine => {
                        let Some(j) = most_fractional(&x[..self.integer], 0.0) else {
                            return Err(Error::Numerical(
                                "integral candidate violates a cut already in the master".into(),
                            ));
                        };
                        let (lo, hi) = if x[j] < x[j].round() {
                            (x[j].floor(), x[j].round())
                        } else {
                            (x[j].round(), x[j].ceil())
                        };
                        let left = self.child(&node, j, node.lower[j], lo);
                        let right = self.child(&node, j, hi, node.upper[j]);
                        heap.push(left);
                        heap.push(right);
                        break;
                    }
                }
            }
            if let Some(top) = heap.peek() {
                if self.closed(top.bound) {
                    heap.clear();
                }
            }
        }
        Ok(())
    }
}

/// Best-bound branch-and-bound over the first `integer` columns of `lp`.
/// Rows returned by the driver are appended to `lp` for good.
pub(crate) fn branch_and_bound<D: TreeDriver>(
    lp: &mut LinearProgram,
    integer: usize,
    settings: &LpSettings,
    deadline: Option<Instant>,
    gap_tol: f64,
    driver: &mut D,
) -> Result<TreeOutcome> {
    let root = Node {
        id: 0,
        lower: lp.variables[..integer].iter().map(|v| v.lower).collect(),
        upper: lp.variables[..integer].iter().map(|v| v.upper).collect(),
        bound: f64::NEG_INFINITY,
        basis: None,
    };
    let mut heap = BinaryHeap::from([root]);
    let mut tree = Tree {
        lp,
        integer,
        settings,
        deadline,
        gap_tol,
        driver,
        incumbent: None,
        bound: f64::NEG_INFINITY,
        next_id: 0,
    };
    match tree.run(&mut heap) {
        Ok(()) => {}
        Err(Error::TimeLimit) => {
            return Ok(TreeOutcome {
                status: SolveStatus::TimeLimit,
                incumbent: tree.incumbent,
                bound: tree.bound,
            });
        }
        Err(e) => return Err(e),
    }
    match tree.incumbent.take() {
        Some((value, x)) => {
            let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
            tree.raise_bound(open_min.min(value));
            let bound = tree.bound.min(value);
            Ok(TreeOutcome {
                status: SolveStatus::Optimal,
                incumbent: Some((value, x)),
                bound,
            })
        }
        None => Ok(TreeOutcome {
            status: SolveStatus::Infeasible,
            incumbent: None,
            bound: tree.bound,
        }),
    }
}

/// Master LP: module columns, then base-case flows; conservation rows and
/// one capacity row per edge.
fn master_lp(instance: &NetworkInstance, layout: &ModuleLayout) -> LinearProgram {
    let ny = layout.len();
    let arcs = instance.arc_count();
    let mut lp = LinearProgram::default();
    for (e, edge) in instance.edges.iter().enumerate() {
        for (m, module) in edge.modules.iter().enumerate() {
            debug_assert_eq!(layout.index(e, m), lp.variables.len());
            lp.variables.push(Variable::nonnegative(module.cost));
        }
    }
    add_flow_block(instance, layout, &mut lp, &[], ny);
    debug_assert_eq!(lp.variables.len(), ny + instance.demands.len() * arcs);
    lp
}

/// Appends flow columns for one failure set starting at column `offset`,
/// with conservation rows and capacity rows linking them to `y`.
fn add_flow_block(instance: &NetworkInstance, layout: &ModuleLayout, lp: &mut LinearProgram, failed: &[usize], offset: usize) {
    let arcs = instance.arc_count();
    for _ in &instance.demands {
        for a in 0..arcs {
            lp.variables.push(if failed.contains(&(a / 2)) {
                Variable::fixed_zero()
            } else {
                Variable::nonnegative(0.0)
            });
        }
    }
    for (d, dem) in instance.demands.iter().enumerate() {
        let mut rows = vec![Vec::new(); instance.nodes.len()];
        for a in 0..arcs {
            let (tail, head) = instance.arc_endpoints(a);
            let col = offset + flow_column(arcs, d, a);
            rows[tail].push((col, 1.0));
            rows[head].push((col, -1.0));
        }
        for (v, coeffs) in rows.into_iter().enumerate() {
            lp.equalities.push(Row::new(coeffs, dem.supply(v)));
        }
    }
    for (e, edge) in instance.edges.iter().enumerate() {
        if failed.contains(&e) || instance.demands.is_empty() {
            continue;
        }
        let mut coeffs: Vec<(usize, f64)> = (0..instance.demands.len())
            .flat_map(|d| [flow_column(arcs, d, 2 * e), flow_column(arcs, d, 2 * e + 1)])
            .map(|j| (offset + j, 1.0))
            .collect();
        for (m, module) in edge.modules.iter().enumerate() {
            coeffs.push((layout.index(e, m), -module.capacity));
        }
        lp.inequalities.push(Row::new(coeffs, edge.preinstalled));
    }
}

fn cut_row(cut: &BendersCut) -> Row {
    Row::new(cut.coeffs.iter().map(|&(k, c)| (k, -c)).collect(), -cut.rhs)
}

fn round_design(y: &[f64]) -> Vec<u32> {
    y.iter().map(|v| v.round().max(0.0) as u32).collect()
}

struct BendersDriver<'a> {
    instance: &'a NetworkInstance,
    layout: ModuleLayout,
    template: ScenarioTemplate<'a>,
    selector: Selector,
    betweenness: Vec<f64>,
    pool: Vec<BendersCut>,
    recorder: Recorder,
    iteration: u64,
    root_rounds: u32,
    deadline: Option<Instant>,
    lp_settings: LpSettings,
}

impl TreeDriver for BendersDriver<'_> {
    fn candidate(&mut self, node: &NodeInfo, x: &[f64]) -> Result<Verdict> {
        let ny = self.layout.len();
        let design = round_design(&x[..ny]);
        self.iteration += 1;
        let at_root = node.id == 0;
        let kind = classify_round(self.iteration, at_root.then_some(self.root_rounds), &self.selector.config);
        if at_root {
            self.root_rounds += 1;
        }
        self.recorder.round_start(self.iteration, kind, &design);
        let view = MasterView {
            instance: self.instance,
            layout: &self.layout,
            design: &design,
            base_flows: &x[ny..],
            betweenness: &self.betweenness,
        };
        let round = self
            .selector
            .run_round(&mut self.template, &view, self.iteration, kind, &self.pool, self.deadline)?;
        self.recorder.round(&round, &self.selector.model);
        if !round.cuts.is_empty() {
            let rows = round.cuts.iter().map(cut_row).collect();
            self.pool.extend(round.cuts);
            return Ok(Verdict::Cuts(rows));
        }
        if round.duplicates > 0 {
            return Ok(Verdict::Refine);
        }
        debug_assert!(round.examined_all(self.instance.scenarios.len()));
        debug_assert!(
            check_incumbent_feasible(self.instance, &design, &self.lp_settings)?,
            "accepted design fails a scenario"
        );
        Ok(Verdict::Accept)
    }

    fn master_solve(&mut self, node: u64, duration: f64, value: Option<f64>) {
        self.recorder.master_solve(node, duration, value);
    }

    fn incumbent(&mut self, value: f64) {
        self.recorder.incumbent(value);
    }

    fn bound(&mut self, value: f64) {
        self.recorder.bound(value);
    }
}

/// Solves `instance` by Branch-and-Benders-cut under `config`.
///
/// Hitting the wall-clock limit is not an error: the result then has status
/// [`SolveStatus::TimeLimit`] and carries the best verified design, if any.
pub fn solve(instance: &NetworkInstance, config: &RunConfig) -> Result<SolveResult> {
    instance.validate()?;
    let origin = Instant::now();
    let deadline = config.time_limit.map(|t| origin + t);
    let layout = instance.module_layout();
    let header = RunHeader {
        instance: instance.name.clone(),
        config: config.selection.to_string(),
        seed: config.seed,
        time_limit: config.time_limit.map(|t| t.as_secs_f64()),
        gap_tolerance: config.gap_tolerance,
        learning_rate: config.learning_rate,
        regularization: config.regularization,
        primal_cap: config.primal_cap.unwrap_or_else(|| default_primal_cap(instance)),
        scenarios: instance.scenarios.len(),
    };
    let mut selector = Selector::new(
        config.selection.clone(),
        LogisticModel::new(config.learning_rate, config.regularization),
        instance.scenarios.len(),
        config.seed,
    );
    selector.origin = origin;
    let mut driver = BendersDriver {
        instance,
        template: ScenarioTemplate::new(instance, config.lp),
        selector,
        betweenness: edge_betweenness(instance),
        pool: Vec::new(),
        recorder: Recorder::new(header, origin),
        iteration: 0,
        root_rounds: 0,
        deadline,
        lp_settings: config.lp,
        layout,
    };
    let mut lp = master_lp(instance, &driver.layout);
    let ny = driver.layout.len();
    let outcome = branch_and_bound(&mut lp, ny, &config.lp, deadline, config.gap_tolerance, &mut driver)?;
    if outcome.bound.is_finite() && outcome.bound > driver.recorder.summary.bound {
        driver.recorder.bound(outcome.bound);
    }
    let objective = outcome.incumbent.as_ref().map(|(v, _)| *v);
    let gap = objective.map(|v| relative_gap(v, outcome.bound));
    let (log, _) = driver.recorder.finish(outcome.status, gap);
    Ok(SolveResult {
        status: outcome.status,
        design: outcome.incumbent.map(|(_, x)| round_design(&x[..ny])),
        objective,
        bound: outcome.bound,
        gap,
        cuts: driver.pool,
        log,
    })
}

/// Whether the base case and every scenario of `instance` can route all
/// demands under `design`.
pub fn check_incumbent_feasible(instance: &NetworkInstance, design: &[u32], settings: &LpSettings) -> Result<bool> {
    let mut template = ScenarioTemplate::new(instance, *settings);
    if template.check_base(design)?.is_cut() {
        return Ok(false);
    }
    for s in 0..instance.scenarios.len() {
        if let ScenarioOutcome::Cut { .. } = template.check_scenario(s, design, 0)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactSolution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub design: Option<Vec<u32>>,
}

struct AcceptAll;

impl TreeDriver for AcceptAll {
    fn candidate(&mut self, _: &NodeInfo, _: &[f64]) -> Result<Verdict> {
        Ok(Verdict::Accept)
    }
}

/// Solves the monolithic formulation with flows for the base case and every
/// scenario. Refuses instances with more than `size_cap` flow columns.
pub fn solve_compact(instance: &NetworkInstance, time_limit: Option<Duration>, size_cap: usize) -> Result<CompactSolution> {
    instance.validate()?;
    let size = (instance.scenarios.len() + 1) * instance.demands.len() * instance.arc_count();
    if size > size_cap {
        return Err(Error::SizeGuardExceeded { size, cap: size_cap });
    }
    let layout = instance.module_layout();
    let mut lp = master_lp(instance, &layout);
    for s in &instance.scenarios {
        let offset = lp.variables.len();
        add_flow_block(instance, &layout, &mut lp, &s.failed_edges, offset);
    }
    let deadline = time_limit.map(|t| Instant::now() + t);
    let settings = LpSettings::default();
    let outcome = branch_and_bound(&mut lp, layout.len(), &settings, deadline, 1e-6, &mut AcceptAll)?;
    if outcome.status == SolveStatus::TimeLimit {
        return Err(Error::TimeLimit);
    }
    Ok(CompactSolution {
        status: outcome.status,
        objective: outcome.incumbent.as_ref().map(|(v, _)| *v),
        design: outcome.incumbent.map(|(_, x)| round_design(&x[..layout.len()])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::log::LogEvent;
    use crate::instance::fixtures;

    fn standard() -> RunConfig {
        RunConfig::from_id("Standard").unwrap()
    }

    #[test]
    fn zero_demands() {
        let inst = fixtures::instance(
            &["A", "B", "C"],
            &[("A", "B", 0.0, &[(5.0, 1.0)]), ("A", "C", 0.0, &[(5.0, 1.0)]), ("C", "B", 0.0, &[(5.0, 1.0)])],
            &[],
        );
        let r = solve(&inst, &standard()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(0.0));
        assert!(r.cuts.is_empty());
        let summary = r.log.summary().unwrap();
        assert_eq!(summary.rounds, 1);
        assert_eq!(summary.subproblem_solves, inst.scenarios.len() as u64);
        assert_eq!(solve_compact(&inst, None, DEFAULT_COMPACT_CAP).unwrap().objective, Some(0.0));
        assert!(check_incumbent_feasible(&inst, &[0, 0, 0], &LpSettings::default()).unwrap());
    }

    #[test]
    fn triangle_needs_one_module_per_edge() {
        let inst = fixtures::triangle();
        for id in ["Standard", "ML-0.5P-20S-5R", "Random-1C", "ML-0.9T-1M"] {
            let r = solve(&inst, &RunConfig::from_id(id).unwrap()).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "{id}");
            assert_eq!(r.objective, Some(3.0), "{id}");
            assert_eq!(r.design.as_deref(), Some(&[1, 1, 1][..]), "{id}");
            assert!(r.gap.unwrap() <= 1e-6);
        }
        let c = solve_compact(&inst, None, DEFAULT_COMPACT_CAP).unwrap();
        assert_eq!(c.objective, Some(3.0));
        let s = LpSettings::default();
        assert!(check_incumbent_feasible(&inst, &[1, 1, 1], &s).unwrap());
        assert!(!check_incumbent_feasible(&inst, &[1, 0, 0], &s).unwrap());
    }

    #[test]
    fn preinstalled_capacity_suffices() {
        let inst = fixtures::instance(
            &["A", "B", "C"],
            &[("A", "B", 5.0, &[(5.0, 1.0)]), ("A", "C", 5.0, &[(5.0, 1.0)]), ("C", "B", 5.0, &[(5.0, 1.0)])],
            &[("A", "B", 5.0)],
        );
        let r = solve(&inst, &standard()).unwrap();
        assert_eq!(r.objective, Some(0.0));
        assert!(r.cuts.is_empty());
        assert_eq!(r.log.summary().unwrap().rounds, 1);
    }

    #[test]
    fn path_keeps_only_the_surviving_scenario() {
        let inst = fixtures::instance(
            &["A", "B", "C"],
            &[("A", "B", 0.0, &[(5.0, 2.0)]), ("B", "C", 0.0, &[(5.0, 3.0)])],
            &[("A", "B", 5.0)],
        );
        assert_eq!(inst.scenarios.len(), 1);
        assert_eq!(solve_compact(&inst, None, DEFAULT_COMPACT_CAP).unwrap().objective, Some(2.0));
        assert_eq!(solve(&inst, &standard()).unwrap().objective, Some(2.0));
    }

    #[test]
    fn compact_size_guard() {
        let inst = fixtures::triangle();
        assert!(matches!(
            solve_compact(&inst, None, 5),
            Err(Error::SizeGuardExceeded { size: 24, cap: 5 })
        ));
    }

    #[test]
    fn bound_never_decreases() {
        let inst = fixtures::instance(
            &["A", "B", "C", "D"],
            &[
                ("A", "B", 0.0, &[(4.0, 3.0), (10.0, 7.0)]),
                ("B", "C", 1.0, &[(4.0, 2.0)]),
                ("C", "D", 0.0, &[(4.0, 3.0), (10.0, 5.0)]),
                ("D", "A", 0.0, &[(4.0, 1.0)]),
                ("A", "C", 0.0, &[(10.0, 6.0)]),
            ],
            &[("A", "C", 6.0), ("B", "D", 3.0)],
        );
        let r = solve(&inst, &RunConfig::from_id("ML-0.5P-3S-2R").unwrap()).unwrap();
        let compact = solve_compact(&inst, None, DEFAULT_COMPACT_CAP).unwrap();
        assert!((r.objective.unwrap() - compact.objective.unwrap()).abs() < 1e-6);
        let bounds: Vec<f64> = r
            .log
            .events
            .iter()
            .filter_map(|e| match e {
                LogEvent::Bound { value, .. } => Some(*value),
                _ => None,
            })
            .collect();
        assert!(bounds.windows(2).all(|w| w[0] <= w[1]));
        r.log.check_timestamps().unwrap();
    }

    #[test]
    fn time_limit_zero() {
        let mut config = standard();
        config.time_limit = Some(Duration::ZERO);
        let r = solve(&fixtures::triangle(), &config).unwrap();
        assert_eq!(r.status, SolveStatus::TimeLimit);
        assert_eq!(r.objective, None);
    }

    #[test]
    fn modules_missing_everywhere_is_infeasible() {
        let inst = fixtures::instance(&["A", "B"], &[("A", "B", 1.0, &[])], &[("A", "B", 5.0)]);
        let r = solve(&inst, &standard()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert_eq!(solve_compact(&inst, None, DEFAULT_COMPACT_CAP).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap(10.0, 9.0), 0.1);
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
    }
}
