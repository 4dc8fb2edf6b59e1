//! Per-round scenario selection: scoring, ordering and early stopping.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{extract_features, FeatureVector, LogisticModel, MasterView, ScenarioStats};
use crate::subproblem::{BendersCut, ScenarioOutcome, ScenarioTemplate};

/// Cuts that scale to the same normalized row within this tolerance are
/// duplicates.
pub const DUPLICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Standard,
    Random,
    #[serde(rename = "ML")]
    Ml,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Standard => "Standard",
            Method::Random => "Random",
            Method::Ml => "ML",
        }
    }
}

/// Stopping criteria and stabilization schedule of a selection strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    pub method: Method,
    /// Stop when the next score falls below this value.
    pub threshold: Option<f64>,
    /// Stop once this fraction of all scenarios has been examined.
    pub proportion: Option<f64>,
    pub cut_limit: Option<u32>,
    pub miss_limit: Option<u32>,
    /// Per-round time limit; not part of the identifier string.
    pub round_time_limit: Option<Duration>,
    pub stabilization_period: Option<u32>,
    pub root_rounds: Option<u32>,
}

impl StoppingConfig {
    pub fn standard() -> Self {
        StoppingConfig {
            method: Method::Standard,
            threshold: None,
            proportion: None,
            cut_limit: None,
            miss_limit: None,
            round_time_limit: None,
            stabilization_period: None,
            root_rounds: None,
        }
    }

    fn empty(method: Method) -> Self {
        StoppingConfig {
            method,
            ..Self::standard()
        }
    }

    pub fn has_criteria(&self) -> bool {
        self.threshold.is_some()
            || self.proportion.is_some()
            || self.cut_limit.is_some()
            || self.miss_limit.is_some()
            || self.round_time_limit.is_some()
    }
}

/// Parses identifiers such as `ML-0.1T-0.6P-10C-20S-5R`.
pub fn parse_config_id(text: &str) -> Result<StoppingConfig> {
    let grammar = |position: usize, message: String| Error::Grammar { position, message };
    let mut parts = text.split('-');
    let head = parts.next().unwrap_or_default();
    let method = match head {
        "Standard" => Method::Standard,
        "Random" => Method::Random,
        "ML" => Method::Ml,
        other => return Err(grammar(0, format!("unknown method `{other}`"))),
    };
    let mut config = StoppingConfig::empty(method);
    let mut position = head.len();
    for token in parts {
        position += 1;
        let at = position;
        position += token.len();
        let Some(kind) = token.chars().last() else {
            return Err(grammar(at, "empty token".into()));
        };
        let number = &token[..token.len() - kind.len_utf8()];
        let float = || -> Result<f64> {
            let v: f64 = number
                .parse()
                .map_err(|_| grammar(at, format!("`{number}` is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(grammar(at, format!("{v} outside [0, 1]")));
            }
            Ok(v)
        };
        let int = || -> Result<u32> {
            let v: u32 = number
                .parse()
                .map_err(|_| grammar(at, format!("`{number}` is not a non-negative integer")))?;
            if v == 0 {
                return Err(grammar(at, "count must be positive".into()));
            }
            Ok(v)
        };
        let duplicate = || grammar(at, format!("`{kind}` given twice"));
        match kind {
            'T' => config.threshold.replace(float()?).map_or(Ok(()), |_| Err(duplicate()))?,
            'P' => config.proportion.replace(float()?).map_or(Ok(()), |_| Err(duplicate()))?,
            'C' => config.cut_limit.replace(int()?).map_or(Ok(()), |_| Err(duplicate()))?,
            'M' => config.miss_limit.replace(int()?).map_or(Ok(()), |_| Err(duplicate()))?,
            'S' => config
                .stabilization_period
                .replace(int()?)
                .map_or(Ok(()), |_| Err(duplicate()))?,
            'R' => config.root_rounds.replace(int()?).map_or(Ok(()), |_| Err(duplicate()))?,
            other => return Err(grammar(at, format!("unknown token suffix `{other}`"))),
        }
    }
    if method == Method::Standard && config != StoppingConfig::standard() {
        return Err(grammar(head.len(), "Standard takes no criteria".into()));
    }
    Ok(config)
}

impl fmt::Display for StoppingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.method.name())?;
        if let Some(r) = self.threshold {
            write!(f, "-{r}T")?;
        }
        if let Some(p) = self.proportion {
            write!(f, "-{p}P")?;
        }
        if let Some(k) = self.cut_limit {
            write!(f, "-{k}C")?;
        }
        if let Some(m) = self.miss_limit {
            write!(f, "-{m}M")?;
        }
        if let Some(n) = self.stabilization_period {
            write!(f, "-{n}S")?;
        }
        if let Some(n) = self.root_rounds {
            write!(f, "-{n}R")?;
        }
        Ok(())
    }
}

impl FromStr for StoppingConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_config_id(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundKind {
    Normal,
    Stabilization,
    RootStabilization,
}

impl RoundKind {
    /// Whether every scenario must be examined.
    pub fn is_full(self) -> bool {
        self != RoundKind::Normal
    }
}

/// Kind of round `t` (1-based). `root_rounds_done` is the number of rounds
/// already run at the root node, or `None` once the search has left it.
///
/// The first round always initializes the scores over all scenarios.
pub fn classify_round(t: u64, root_rounds_done: Option<u32>, config: &StoppingConfig) -> RoundKind {
    let root_budget = config.root_rounds.unwrap_or(0);
    if t == 1 || root_rounds_done.is_some_and(|done| done < root_budget) {
        RoundKind::RootStabilization
    } else if config
        .stabilization_period
        .is_some_and(|n| t.is_multiple_of(u64::from(n)))
    {
        RoundKind::Stabilization
    } else {
        RoundKind::Normal
    }
}

/// Progress of the round being run.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    pub iteration: u64,
    pub kind: RoundKind,
    pub examined: usize,
    pub cuts: usize,
    pub consecutive_misses: usize,
    pub elapsed: Duration,
    /// Scenario queue in solve order with its scores.
    pub queue: Vec<(usize, f64)>,
}

impl RoundState {
    pub fn new(iteration: u64, kind: RoundKind, queue: Vec<(usize, f64)>) -> Self {
        RoundState {
            iteration,
            kind,
            examined: 0,
            cuts: 0,
            consecutive_misses: 0,
            elapsed: Duration::ZERO,
            queue,
        }
    }

    pub fn record(&mut self, cut: bool) {
        self.examined += 1;
        if cut {
            self.cuts += 1;
            self.consecutive_misses = 0;
        } else {
            self.consecutive_misses += 1;
        }
    }

    /// Score of the next scenario in the queue, if any.
    pub fn next_score(&self) -> Option<f64> {
        self.queue.get(self.examined).map(|&(_, s)| s)
    }
}

/// Why a round ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Exhausted,
    Criterion,
}

/// Early-stop test for a normal round; never stops before the first cut.
pub fn should_stop(state: &RoundState, next_score: Option<f64>, config: &StoppingConfig, total_scenarios: usize) -> bool {
    if state.cuts == 0 {
        return false;
    }
    if config.cut_limit.is_some_and(|k| state.cuts >= k as usize) {
        return true;
    }
    if let Some(p) = config.proportion {
        let needed = (p * total_scenarios as f64 - 1e-9).ceil() as usize;
        if state.examined >= needed {
            return true;
        }
    }
    if config
        .miss_limit
        .is_some_and(|m| state.consecutive_misses >= m as usize)
    {
        return true;
    }
    if let (Some(r), Some(next)) = (config.threshold, next_score) {
        if next < r {
            return true;
        }
    }
    config.round_time_limit.is_some_and(|limit| state.elapsed >= limit)
}

/// Solve order for the given scores: descending score, then ascending id.
pub fn solve_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// One subproblem solve within a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub scenario: usize,
    pub score: f64,
    pub probability: f64,
    /// Whether the solve contributed a new cut.
    pub cut: bool,
    pub violation: Option<f64>,
    pub solve_time: Duration,
    /// Seconds since the selector's origin when the solve finished.
    pub at: f64,
}

#[derive(Debug, Clone)]
pub struct RoundResult {
    pub iteration: u64,
    pub kind: RoundKind,
    pub cuts: Vec<BendersCut>,
    pub records: Vec<SolveRecord>,
    pub stop: StopReason,
    /// Cuts found but discarded as copies of known cuts.
    pub duplicates: usize,
}

impl RoundResult {
    pub fn examined_all(&self, total: usize) -> bool {
        self.records.len() == total
    }
}

/// Scoring state carried across the rounds of one solve.
#[derive(Debug, Clone)]
pub struct Selector {
    pub config: StoppingConfig,
    pub model: LogisticModel,
    pub stats: ScenarioStats,
    /// Reference instant for record timestamps.
    pub origin: Instant,
    rng: ChaCha8Rng,
}

impl Selector {
    pub fn new(config: StoppingConfig, model: LogisticModel, scenarios: usize, seed: u64) -> Self {
        Selector {
            config,
            model,
            stats: ScenarioStats::new(scenarios),
            origin: Instant::now(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Runs one round of subproblem solves at the integral design of `view`.
    ///
    /// `known` holds the cuts already in the master; copies of them count as
    /// misses. `deadline` aborts the round with [`Error::TimeLimit`].
    pub fn run_round(
        &mut self,
        template: &mut ScenarioTemplate<'_>,
        view: &MasterView<'_>,
        iteration: u64,
        kind: RoundKind,
        known: &[BendersCut],
        deadline: Option<Instant>,
    ) -> Result<RoundResult> {
        let n = view.instance.scenarios.len();
        if kind == RoundKind::Stabilization {
            self.stats.reset_history();
        }
        let raw: Vec<FeatureVector> = (0..n)
            .map(|s| extract_features(s, view, &self.stats, iteration))
            .collect();
        let normalized: Vec<FeatureVector> = raw.iter().map(|r| self.model.normalize(r)).collect();
        let probabilities: Vec<f64> = normalized.iter().map(|p| self.model.predict(p)).collect();
        let scores: Vec<f64> = match self.config.method {
            Method::Standard => vec![1.0; n],
            Method::Random => (0..n).map(|_| self.rng.gen::<f64>()).collect(),
            Method::Ml => probabilities.clone(),
        };
        let order = solve_order(&scores);
        let mut state = RoundState::new(iteration, kind, order.iter().map(|&s| (s, scores[s])).collect());
        let started = Instant::now();
        let mut cuts: Vec<BendersCut> = Vec::new();
        let mut records = Vec::with_capacity(n);
        let mut duplicates = 0;
        let mut stop = StopReason::Exhausted;

        for &s in &order {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(Error::TimeLimit);
            }
            let outcome = template.check_scenario(s, view.design, iteration)?;
            let solve_time = outcome.solve_time();
            let (new_cut, violation) = match outcome {
                ScenarioOutcome::Cut { cut, violation, .. } => {
                    let seen = known
                        .iter()
                        .chain(&cuts)
                        .any(|c| c.same_as(&cut, DUPLICATE_TOL));
                    if seen {
                        duplicates += 1;
                        (None, None)
                    } else {
                        (Some(cut), Some(violation))
                    }
                }
                ScenarioOutcome::Feasible { .. } => (None, None),
            };
            let hit = new_cut.is_some();
            self.stats.record(s, iteration, violation);
            // Train on the example normalized with its own sample folded in;
            // the round-start vectors can be far out of scale while a
            // feature's variance is still zero.
            self.model.welford_update(&raw[s]);
            let phi = self.model.normalize(&raw[s]);
            self.model.train(&phi, hit);
            records.push(SolveRecord {
                scenario: s,
                score: scores[s],
                probability: probabilities[s],
                cut: hit,
                violation,
                solve_time,
                at: self.origin.elapsed().as_secs_f64(),
            });
            cuts.extend(new_cut);
            state.record(hit);
            state.elapsed = started.elapsed();
            if kind == RoundKind::Normal && should_stop(&state, state.next_score(), &self.config, n) {
                stop = StopReason::Criterion;
                break;
            }
        }
        Ok(RoundResult {
            iteration,
            kind,
            cuts,
            records,
            stop,
            duplicates,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures;
    use crate::instance::{edge_betweenness, NetworkInstance};
    use crate::lp::LpSettings;
    use proptest::prelude::*;

    #[test]
    fn parse_table_identifiers() {
        let c = parse_config_id("ML-0.1T-0.6P-10C-20S-5R").unwrap();
        assert_eq!(c.method, Method::Ml);
        assert_eq!(c.threshold, Some(0.1));
        assert_eq!(c.proportion, Some(0.6));
        assert_eq!(c.cut_limit, Some(10));
        assert_eq!(c.stabilization_period, Some(20));
        assert_eq!(c.root_rounds, Some(5));
        assert_eq!(c.miss_limit, None);

        assert_eq!(parse_config_id("Standard").unwrap(), StoppingConfig::standard());

        let r = parse_config_id("Random-0.5P-20S-5R").unwrap();
        assert_eq!(r.method, Method::Random);
        assert_eq!(r.proportion, Some(0.5));
        assert_eq!((r.stabilization_period, r.root_rounds), (Some(20), Some(5)));

        for id in [
            "ML-0.1T-0.6P-10C-20S-5R",
            "Standard",
            "Random-0.5P-20S-5R",
            "ML-0.5T-5C-20S-5R",
            "ML-3M",
        ] {
            assert_eq!(parse_config_id(id).unwrap().to_string(), id);
        }
    }

    #[test]
    fn grammar_errors_carry_positions() {
        let pos = |s: &str| match parse_config_id(s) {
            Err(Error::Grammar { position, .. }) => position,
            other => panic!("{s}: {other:?}"),
        };
        assert_eq!(pos("Greedy"), 0);
        assert_eq!(pos("ML-0.5X"), 3);
        assert_eq!(pos("ML-0.5P-abcC"), 8);
        assert_eq!(pos("ML-1.5P"), 3);
        assert_eq!(pos("ML-0C"), 3);
        assert_eq!(pos("ML-2C-3C"), 6);
        assert_eq!(pos("ML-"), 3);
        assert!(parse_config_id("Standard-5C").is_err());
    }

    #[test]
    fn round_kinds() {
        let c = parse_config_id("ML-0.5P-20S-5R").unwrap();
        for done in 0..5 {
            assert_eq!(classify_round(done as u64 + 1, Some(done), &c), RoundKind::RootStabilization);
        }
        assert_eq!(classify_round(6, Some(5), &c), RoundKind::Normal);
        assert_eq!(classify_round(40, None, &c), RoundKind::Stabilization);
        assert_eq!(classify_round(41, None, &c), RoundKind::Normal);
        assert_eq!(classify_round(1, None, &c), RoundKind::RootStabilization);
    }

    fn state(examined: usize, cuts: usize, misses: usize) -> RoundState {
        RoundState {
            examined,
            cuts,
            consecutive_misses: misses,
            ..RoundState::new(3, RoundKind::Normal, Vec::new())
        }
    }

    #[test]
    fn stopping_rules() {
        let k = parse_config_id("ML-10C").unwrap();
        assert!(should_stop(&state(12, 10, 0), None, &k, 30));
        assert!(!should_stop(&state(12, 9, 0), None, &k, 30));

        let p = parse_config_id("ML-0.5P").unwrap();
        assert!(should_stop(&state(4, 1, 0), None, &p, 7));
        assert!(!should_stop(&state(3, 1, 0), None, &p, 7));

        let r = parse_config_id("ML-0.5T").unwrap();
        assert!(!should_stop(&state(3, 0, 3), Some(0.49), &r, 7));
        assert!(should_stop(&state(3, 1, 2), Some(0.49), &r, 7));
        assert!(!should_stop(&state(3, 1, 2), Some(0.5), &r, 7));

        let m = parse_config_id("ML-2M").unwrap();
        assert!(should_stop(&state(5, 1, 2), None, &m, 7));

        let mut t = StoppingConfig::empty(Method::Ml);
        t.round_time_limit = Some(Duration::from_millis(5));
        let mut s = state(1, 1, 0);
        s.elapsed = Duration::from_millis(6);
        assert!(should_stop(&s, None, &t, 7));

        assert!(!should_stop(&state(7, 7, 0), None, &StoppingConfig::standard(), 7));
    }

    #[test]
    fn order_breaks_ties_by_id() {
        assert_eq!(solve_order(&[0.2, 0.9, 0.2, 0.9]), vec![1, 3, 0, 2]);
    }

    fn view<'a>(inst: &'a NetworkInstance, layout: &'a crate::instance::ModuleLayout, design: &'a [u32], flows: &'a [f64], beta: &'a [f64]) -> MasterView<'a> {
        MasterView {
            instance: inst,
            layout,
            design,
            base_flows: flows,
            betweenness: beta,
        }
    }

    fn selector(id: &str, inst: &NetworkInstance) -> Selector {
        Selector::new(parse_config_id(id).unwrap(), LogisticModel::new(0.075, 0.02), inst.scenarios.len(), 1)
    }

    #[test]
    fn zero_demand_round_examines_everything() {
        let inst = fixtures::instance(&["A", "B", "C"], &[("A", "B", 0.0, &[(5.0, 1.0)]), ("B", "C", 0.0, &[(5.0, 1.0)]), ("A", "C", 0.0, &[(5.0, 1.0)])], &[]);
        let layout = inst.module_layout();
        let beta = edge_betweenness(&inst);
        let mut tpl = ScenarioTemplate::new(&inst, LpSettings::default());
        let mut sel = selector("Standard", &inst);
        let v = view(&inst, &layout, &[0, 0, 0], &[], &beta);
        let r = sel.run_round(&mut tpl, &v, 2, RoundKind::Normal, &[], None).unwrap();
        assert!(r.cuts.is_empty());
        assert_eq!(r.records.len(), 3);
        assert_eq!(r.records.iter().map(|x| x.scenario).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn cut_limit_one_stops_after_the_first_cut() {
        let inst = fixtures::triangle();
        let layout = inst.module_layout();
        let beta = edge_betweenness(&inst);
        let flows = vec![0.0; inst.arc_count()];
        let mut tpl = ScenarioTemplate::new(&inst, LpSettings::default());
        let mut sel = selector("ML-1C", &inst);
        // equal scores put scenario 0 (AB fails, the only built edge) first
        let design = [1, 0, 0];
        let v = view(&inst, &layout, &design, &flows, &beta);
        let r = sel.run_round(&mut tpl, &v, 2, RoundKind::Normal, &[], None).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.cuts.len(), 1);
        assert_eq!(r.stop, StopReason::Criterion);
        assert_eq!(sel.stats.total_cuts, 1);
    }

    #[test]
    fn stabilization_round_is_full() {
        let inst = fixtures::triangle();
        let layout = inst.module_layout();
        let beta = edge_betweenness(&inst);
        let flows = vec![0.0; inst.arc_count()];
        let mut tpl = ScenarioTemplate::new(&inst, LpSettings::default());
        let mut sel = selector("ML-1C-20S", &inst);
        let v = view(&inst, &layout, &[0, 0, 0], &flows, &beta);
        let r = sel.run_round(&mut tpl, &v, 20, RoundKind::Stabilization, &[], None).unwrap();
        assert_eq!(r.records.len(), 3);
        // every scenario is infeasible at ȳ = 0; equal cuts are kept once
        assert_eq!(r.cuts.len() + r.duplicates, 3);
        assert!(r.cuts.len() >= 2);
    }

    #[test]
    fn known_cuts_count_as_misses() {
        let inst = fixtures::triangle();
        let layout = inst.module_layout();
        let beta = edge_betweenness(&inst);
        let flows = vec![0.0; inst.arc_count()];
        let mut tpl = ScenarioTemplate::new(&inst, LpSettings::default());
        let mut sel = selector("Standard", &inst);
        let design = [0, 0, 0];
        let v = view(&inst, &layout, &design, &flows, &beta);
        let first = sel.run_round(&mut tpl, &v, 1, RoundKind::RootStabilization, &[], None).unwrap();
        let again = sel.run_round(&mut tpl, &v, 2, RoundKind::Normal, &first.cuts, None).unwrap();
        assert!(again.cuts.is_empty());
        assert_eq!(again.duplicates, 3);
        assert!(again.records.iter().all(|r| !r.cut));
    }

    proptest! {
        #[test]
        fn config_ids_round_trip(
            method in prop::sample::select(vec![Method::Random, Method::Ml]),
            t in prop::option::of(0u32..=100), p in prop::option::of(0u32..=100),
            k in prop::option::of(1u32..50), m in prop::option::of(1u32..50),
            s in prop::option::of(1u32..50), r in prop::option::of(1u32..50),
        ) {
            let config = StoppingConfig {
                method,
                threshold: t.map(|x| x as f64 / 100.0),
                proportion: p.map(|x| x as f64 / 100.0),
                cut_limit: k,
                miss_limit: m,
                round_time_limit: None,
                stabilization_period: s,
                root_rounds: r,
            };
            let text = config.to_string();
            let back = parse_config_id(&text).unwrap();
            prop_assert_eq!(&back, &config);
            prop_assert_eq!(back.to_string(), text);
        }

        #[test]
        fn no_stop_without_cuts(examined in 0usize..50, misses in 0usize..50, next in 0.0f64..1.0) {
            let c = parse_config_id("ML-0.9T-0.1P-1C-1M").unwrap();
            prop_assert!(!should_stop(&state(examined, 0, misses), Some(next), &c, 50));
        }

        #[test]
        fn order_is_sorted(scores in prop::collection::vec(prop::sample::select(vec![0.1, 0.5, 0.7, 0.9]), 0..30)) {
            let order = solve_order(&scores);
            for w in order.windows(2) {
                let (a, b) = (w[0], w[1]);
                prop_assert!(scores[a] > scores[b] || (scores[a] == scores[b] && a < b));
            }
        }
    }
}
