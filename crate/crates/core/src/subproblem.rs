//! Scenario feasibility checks and Benders feasibility cuts.
//!
//! For a fixed module vector `ȳ` and scenario `s`, the subproblem asks for a
//! multicommodity flow `f[d][a] >= 0` that conserves every demand at every
//! node, respects the installed capacity on operational edges and sends
//! nothing over the failed ones. An infeasible subproblem yields a Farkas ray
//! `(σ, π)`, from which
//!
//! ```text
//! Σ_{e ∉ F_s} π_e Σ_m u_{e,m} y_{e,m}  >=  -Σ_{d,v} σ_{d,v} b_{d,v} - Σ_{e ∉ F_s} π_e pre_e
//! ```
//!
//! is valid for every `y` under which the scenario is routable, and is
//! violated by `ȳ`.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ModuleLayout, NetworkInstance, Scenario};
use crate::lp::{solve_lp, Basis, LinearProgram, LpOutcome, LpSettings, Row, Variable};

/// Ray entries below this magnitude are dropped from cut coefficients.
const RAY_ZERO: f64 = 1e-10;

/// Column of `f[d][a]` in every flow LP built by this crate.
pub fn flow_column(num_arcs: usize, demand: usize, arc: usize) -> usize {
    demand * num_arcs + arc
}

/// Builds the flow LP of one scenario from scratch.
///
/// Rows: one equality per `(demand, node)` in demand-major order, then one
/// capacity inequality per edge. Failed edges get capacity 0 and their arcs
/// are fixed to zero.
pub fn build_scenario_lp(instance: &NetworkInstance, failed: &[usize], design: &[u32]) -> LinearProgram {
    let layout = instance.module_layout();
    let arcs = instance.arc_count();
    let nv = instance.nodes.len();
    let mut lp = LinearProgram::default();
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
        let mut rows = vec![Vec::new(); nv];
        for a in 0..arcs {
            let (tail, head) = instance.arc_endpoints(a);
            rows[tail].push((flow_column(arcs, d, a), 1.0));
            rows[head].push((flow_column(arcs, d, a), -1.0));
        }
        for (v, coeffs) in rows.into_iter().enumerate() {
            lp.equalities.push(Row::new(coeffs, dem.supply(v)));
        }
    }
    for e in 0..instance.edges.len() {
        let coeffs = (0..instance.demands.len())
            .flat_map(|d| [flow_column(arcs, d, 2 * e), flow_column(arcs, d, 2 * e + 1)])
            .map(|j| (j, 1.0))
            .collect();
        let cap = if failed.contains(&e) {
            0.0
        } else {
            instance.capacity(&layout, design, e)
        };
        lp.inequalities.push(Row::new(coeffs, cap));
    }
    lp
}

/// A Benders feasibility cut `Σ coeff · y >= rhs` over flat module indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersCut {
    /// `(flat module index, coefficient >= 0)`, sorted by index.
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub scenario: usize,
    pub iteration: u64,
}

impl BendersCut {
    pub fn lhs(&self, design: &[u32]) -> f64 {
        self.coeffs.iter().map(|&(k, c)| c * f64::from(design[k])).sum()
    }

    pub fn lhs_f64(&self, y: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, c)| c * y[k]).sum()
    }

    /// Same hyperplane after scaling both cuts to a largest coefficient of 1.
    pub fn same_as(&self, other: &BendersCut, tol: f64) -> bool {
        if self.coeffs.len() != other.coeffs.len() {
            return false;
        }
        let scale = |c: &BendersCut| {
            let m = c.coeffs.iter().map(|x| x.1.abs()).fold(0.0, f64::max);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        };
        let (sa, sb) = (scale(self), scale(other));
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .all(|(a, b)| a.0 == b.0 && (a.1 / sa - b.1 / sb).abs() <= tol)
            && (self.rhs / sa - other.rhs / sb).abs() <= tol
    }
}

/// `rhs - Σ coeff · ȳ`; positive when `design` violates the cut.
pub fn violation(cut: &BendersCut, design: &[u32]) -> f64 {
    cut.rhs - cut.lhs(design)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioOutcome {
    Feasible {
        solve_time: Duration,
    },
    Cut {
        cut: BendersCut,
        violation: f64,
        solve_time: Duration,
    },
}

impl ScenarioOutcome {
    pub fn solve_time(&self) -> Duration {
        match self {
            ScenarioOutcome::Feasible { solve_time } | ScenarioOutcome::Cut { solve_time, .. } => *solve_time,
        }
    }

    pub fn is_cut(&self) -> bool {
        matches!(self, ScenarioOutcome::Cut { .. })
    }
}

/// One flow LP whose rhs and fixed arcs are switched between scenarios,
/// with a warm basis cached per scenario.
pub struct ScenarioTemplate<'a> {
    instance: &'a NetworkInstance,
    layout: ModuleLayout,
    lp: LinearProgram,
    failed: Vec<usize>,
    bases: HashMap<usize, Basis>,
    settings: LpSettings,
}

impl<'a> ScenarioTemplate<'a> {
    pub fn new(instance: &'a NetworkInstance, settings: LpSettings) -> Self {
        let layout = instance.module_layout();
        let zero = vec![0; layout.len()];
        ScenarioTemplate {
            instance,
            lp: build_scenario_lp(instance, &[], &zero),
            layout,
            failed: Vec::new(),
            bases: HashMap::new(),
            settings,
        }
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn instance(&self) -> &NetworkInstance {
        self.instance
    }

    fn set_arcs_fixed(&mut self, edge: usize, fixed: bool) {
        let arcs = self.instance.arc_count();
        for d in 0..self.instance.demands.len() {
            for a in [2 * edge, 2 * edge + 1] {
                self.lp.variables[flow_column(arcs, d, a)] = if fixed {
                    Variable::fixed_zero()
                } else {
                    Variable::nonnegative(0.0)
                };
            }
        }
    }

    /// Switches the template to `failed` under `design`. An empty failure
    /// set is the base case.
    pub fn adjust(&mut self, failed: &[usize], design: &[u32]) -> Result<()> {
        if design.len() != self.layout.len() {
            return Err(Error::Shape(format!(
                "module vector has {} entries, instance has {}",
                design.len(),
                self.layout.len()
            )));
        }
        if let Some(&bad) = failed.iter().find(|&&e| e >= self.instance.edges.len()) {
            return Err(Error::Shape(format!("failed edge {bad} out of range")));
        }
        for e in std::mem::take(&mut self.failed) {
            self.set_arcs_fixed(e, false);
        }
        for &e in failed {
            self.set_arcs_fixed(e, true);
        }
        self.failed = failed.to_vec();
        for e in 0..self.instance.edges.len() {
            self.lp.inequalities[e].rhs = if failed.contains(&e) {
                0.0
            } else {
                self.instance.capacity(&self.layout, design, e)
            };
        }
        Ok(())
    }

    /// Checks scenario `index` of the instance under `design`.
    pub fn check_scenario(&mut self, index: usize, design: &[u32], iteration: u64) -> Result<ScenarioOutcome> {
        let scenario: &Scenario = self
            .instance
            .scenarios
            .get(index)
            .ok_or_else(|| Error::Shape(format!("scenario {index} out of range")))?;
        let failed = scenario.failed_edges.clone();
        self.check(Some(index), &failed, design, iteration)
    }

    /// Checks the failure-free base case under `design`.
    pub fn check_base(&mut self, design: &[u32]) -> Result<ScenarioOutcome> {
        self.check(None, &[], design, 0)
    }

    fn check(&mut self, key: Option<usize>, failed: &[usize], design: &[u32], iteration: u64) -> Result<ScenarioOutcome> {
        let start = Instant::now();
        self.adjust(failed, design)?;
        let warm = key.and_then(|k| self.bases.get(&k));
        let solved = match solve_lp(&self.lp, warm, &self.settings) {
            Ok(s) => s,
            Err(first) => {
                log::warn!("subproblem solve failed ({first}); retrying without warm start");
                solve_lp(&self.lp, None, &self.settings)
                    .map_err(|e| Error::SolverFailure(format!("scenario {key:?}: {e}")))?
            }
        };
        if let Some(k) = key {
            self.bases.insert(k, solved.basis);
        }
        let solve_time = start.elapsed();
        match solved.outcome {
            LpOutcome::Optimal(_) => Ok(ScenarioOutcome::Feasible { solve_time }),
            LpOutcome::Unbounded => Err(Error::SolverFailure("zero-objective subproblem reported unbounded".into())),
            LpOutcome::Infeasible(ray) => {
                let mut coeffs = Vec::new();
                let mut rhs: f64 = self
                    .lp
                    .equalities
                    .iter()
                    .zip(&ray.sigma)
                    .map(|(row, s)| -s * row.rhs)
                    .sum();
                for (e, edge) in self.instance.edges.iter().enumerate() {
                    let p = ray.pi[e];
                    if failed.contains(&e) || p.abs() < RAY_ZERO {
                        continue;
                    }
                    rhs -= p * edge.preinstalled;
                    for (m, module) in edge.modules.iter().enumerate() {
                        coeffs.push((self.layout.index(e, m), p * module.capacity));
                    }
                }
                let cut = BendersCut {
                    coeffs,
                    rhs,
                    scenario: key.unwrap_or(usize::MAX),
                    iteration,
                };
                let nu = violation(&cut, design);
                if nu < self.settings.certificate_tol {
                    return Err(Error::SolverFailure(format!(
                        "cut for scenario {key:?} is violated by only {nu:e}"
                    )));
                }
                Ok(ScenarioOutcome::Cut {
                    cut,
                    violation: nu,
                    solve_time,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{instance, triangle};
    use crate::lp::verify_farkas;

    #[test]
    fn base_case_zero_design_has_zero_capacity() {
        let inst = triangle();
        let mut t = ScenarioTemplate::new(&inst, LpSettings::default());
        t.adjust(&[], &[0, 0, 0]).unwrap();
        assert!(t.lp().inequalities.iter().all(|r| r.rhs == 0.0));
    }

    #[test]
    fn adjust_sets_rhs_and_fixes_failed_arcs() {
        let inst = triangle();
        let mut t = ScenarioTemplate::new(&inst, LpSettings::default());
        t.adjust(&[0], &[1, 1, 1]).unwrap();
        let rhs: Vec<f64> = t.lp().inequalities.iter().map(|r| r.rhs).collect();
        assert_eq!(rhs, vec![0.0, 5.0, 5.0]);
        assert!(t.lp().variables[0].is_fixed() && t.lp().variables[1].is_fixed());
        t.adjust(&[2], &[1, 1, 1]).unwrap();
        assert!(!t.lp().variables[0].is_fixed() && !t.lp().variables[1].is_fixed());
        assert!(t.lp().variables[4].is_fixed() && t.lp().variables[5].is_fixed());
        assert!(matches!(t.adjust(&[0], &[1, 1]), Err(Error::Shape(_))));
    }

    #[test]
    fn triangle_failing_ab_cuts_on_the_detour() {
        let inst = triangle();
        let mut t = ScenarioTemplate::new(&inst, LpSettings::default());
        let design = [1, 0, 0];
        let out = t.check_scenario(0, &design, 1).unwrap();
        let ScenarioOutcome::Cut { cut, violation: nu, .. } = out else {
            panic!("expected a cut")
        };
        assert!(nu > 0.0);
        assert!(cut.coeffs.iter().all(|&(k, c)| k != 0 && c >= 0.0));
        // the detour A-C-B has capacity 5·(y_AC, y_CB); one module on each
        // satisfies the cut, the incumbent does not
        assert!(violation(&cut, &[0, 1, 1]) <= 1e-9);
        assert!(violation(&cut, &design) > 0.0);
    }

    #[test]
    fn min_cut_certificate_gives_expected_cut() {
        // the cut 5·y_AC >= 5 from the A-side min cut {A}: scaled form of any
        // certificate supported only on edge AC
        let inst = triangle();
        let cut = BendersCut {
            coeffs: vec![(1, 5.0)],
            rhs: 5.0,
            scenario: 0,
            iteration: 1,
        };
        assert_eq!(violation(&cut, &[1, 0, 0]), 5.0);
        assert_eq!(violation(&cut, &[1, 1, 0]), 0.0);
        assert_eq!(violation(&cut, &[1, 2, 0]), -5.0);
        // and it is certified by σ_A = -1, σ_B = σ_C = 0, π_AC = 1 on the failing-AB LP
        let lp = build_scenario_lp(&inst, &[0], &[1, 0, 0]);
        let ray = crate::lp::FarkasRay {
            sigma: vec![-1.0, 0.0, 0.0],
            pi: vec![0.0, 1.0, 0.0],
        };
        assert!(verify_farkas(&lp, &ray, &LpSettings::default()));
    }

    #[test]
    fn full_design_feasible_everywhere() {
        let inst = triangle();
        let mut t = ScenarioTemplate::new(&inst, LpSettings::default());
        for s in 0..3 {
            assert!(!t.check_scenario(s, &[1, 1, 1], 1).unwrap().is_cut());
        }
        assert!(!t.check_base(&[1, 1, 1]).unwrap().is_cut());
    }

    #[test]
    fn no_demands_always_feasible() {
        let inst = instance(
            &["A", "B", "C"],
            &[("A", "B", 0.0, &[(1.0, 1.0)]), ("B", "C", 0.0, &[(1.0, 1.0)])],
            &[],
        );
        let mut t = ScenarioTemplate::new(&inst, LpSettings::default());
        for s in 0..inst.scenarios.len() {
            assert!(!t.check_scenario(s, &[0, 0], 1).unwrap().is_cut());
        }
    }

    #[test]
    fn duplicate_detection_is_scale_free() {
        let a = BendersCut {
            coeffs: vec![(1, 5.0), (2, 10.0)],
            rhs: 5.0,
            scenario: 0,
            iteration: 1,
        };
        let mut b = a.clone();
        b.coeffs = vec![(1, 1.0), (2, 2.0)];
        b.rhs = 1.0;
        assert!(a.same_as(&b, 1e-8));
        b.rhs = 1.5;
        assert!(!a.same_as(&b, 1e-8));
    }
}
