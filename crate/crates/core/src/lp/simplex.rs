//! Dense-tableau primal simplex for bounded variables.
//!
//! Columns are the structural variables followed by one unit column per row:
//! a slack in `[0, inf)` for inequalities and an artificial fixed to `[0, 0]`
//! for equalities. Phase 1 minimizes the sum of bound infeasibilities of the
//! basic variables starting from any basis, so a warm basis needs no special
//! treatment. When phase 1 stalls with positive infeasibility, the negated
//! simplex multipliers of the phase-1 costs form the Farkas ray.

use super::{Basis, FarkasRay, LinearProgram, LpOutcome, LpSettings, LpSolution, OptimalSolution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Tableau<'a> {
    lp: &'a LinearProgram,
    settings: &'a LpSettings,
    m: usize,
    n: usize,
    cols: usize,
    /// `B⁻¹ [M | I]`, row-major.
    t: Vec<f64>,
    /// Values of the basic variables, by row.
    beta: Vec<f64>,
    basic: Vec<usize>,
    status: Vec<Status>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    /// Original rows with unit columns, for reinversion.
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

enum Step {
    Optimal,
    Pivoted { degenerate: bool },
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(lp: &'a LinearProgram, settings: &'a LpSettings) -> Self {
        let n = lp.variables.len();
        let m = lp.num_rows();
        let cols = n + m;
        let mut lo = Vec::with_capacity(cols);
        let mut hi = Vec::with_capacity(cols);
        let mut cost = Vec::with_capacity(cols);
        for v in &lp.variables {
            lo.push(v.lower);
            hi.push(v.upper);
            cost.push(v.cost);
        }
        for _ in &lp.equalities {
            lo.push(0.0);
            hi.push(0.0);
            cost.push(0.0);
        }
        for _ in &lp.inequalities {
            lo.push(0.0);
            hi.push(f64::INFINITY);
            cost.push(0.0);
        }
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, r) in lp.equalities.iter().chain(&lp.inequalities).enumerate() {
            let mut coeffs = r.coeffs.clone();
            coeffs.push((n + i, 1.0));
            rows.push(coeffs);
            rhs.push(r.rhs);
        }
        let mut tab = Tableau {
            lp,
            settings,
            m,
            n,
            cols,
            t: vec![0.0; m * cols],
            beta: vec![0.0; m],
            basic: (n..cols).collect(),
            status: vec![Status::Lower; cols],
            lo,
            hi,
            cost,
            rows,
            rhs,
            iterations: 0,
            since_refactor: 0,
        };
        for i in 0..m {
            tab.status[n + i] = Status::Basic;
        }
        tab.load_identity();
        tab.recompute_beta();
        tab
    }

    fn load_identity(&mut self) {
        self.t.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let base = i * self.cols;
            for &(j, a) in row {
                self.t[base + j] += a;
            }
        }
    }

    fn value_of(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::Lower => self.lo[j],
            Status::Upper => self.hi[j],
            Status::Basic => unreachable!("basic value read through value_of"),
        }
    }

    /// `beta = B⁻¹ (rhs - N x_N)`, with `B⁻¹` read off the unit columns.
    fn recompute_beta(&mut self) {
        let mut residual = self.rhs.clone();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                if self.status[j] != Status::Basic {
                    residual[i] -= a * self.value_of(j);
                }
            }
        }
        for r in 0..self.m {
            let base = r * self.cols + self.n;
            self.beta[r] = (0..self.m).map(|i| self.t[base + i] * residual[i]).sum();
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let a = self.t[r * cols + q];
        let pivot_row: Vec<(usize, f64)> = {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            let mut nz = Vec::new();
            for (j, x) in row.iter_mut().enumerate() {
                if *x != 0.0 {
                    *x /= a;
                    nz.push((j, *x));
                }
            }
            nz
        };
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for &(j, x) in &pivot_row {
                row[j] -= f * x;
            }
            row[q] = 0.0;
        }
        self.t[r * cols + q] = 1.0;
        let leaving = self.basic[r];
        self.basic[r] = q;
        self.status[q] = Status::Basic;
        if self.status[leaving] == Status::Basic {
            self.status[leaving] = Status::Lower;
        }
    }

    /// Rebuilds `B⁻¹ M` from scratch for the columns in `desired`. Columns that
    /// cannot be pivoted in stay nonbasic at their lower bound.
    fn rebuild(&mut self, desired: &[usize]) {
        let mut want = vec![false; self.cols];
        for &j in desired {
            if j < self.cols {
                want[j] = true;
            }
        }
        let n = self.n;
        let keep_status = self.status.clone();
        self.load_identity();
        self.basic = (n..self.cols).collect();
        for j in 0..self.cols {
            self.status[j] = if j >= n {
                Status::Basic
            } else if keep_status[j] == Status::Upper && self.hi[j].is_finite() {
                Status::Upper
            } else {
                Status::Lower
            };
        }
        for &q in desired {
            if q >= self.cols || self.status[q] == Status::Basic {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.m {
                if want[self.basic[r]] {
                    continue;
                }
                let a = self.t[r * self.cols + q].abs();
                if a > 1e-9 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((r, a));
                }
            }
            if let Some((r, _)) = best {
                self.pivot(r, q);
            }
        }
        // unit columns that dropped out of the basis sit at their lower bound
        for j in n..self.cols {
            if self.status[j] != Status::Basic {
                self.status[j] = Status::Lower;
            }
        }
        self.recompute_beta();
        self.since_refactor = 0;
    }

    fn refactor(&mut self) {
        let basic = self.basic.clone();
        self.rebuild(&basic);
    }

    fn apply_warm_start(&mut self, basis: &Basis) {
        if basis.num_vars != self.n || basis.num_rows != self.m || basis.basic.len() != self.m {
            return;
        }
        for &j in &basis.at_upper {
            if j < self.cols && self.hi[j].is_finite() && self.lo[j] < self.hi[j] {
                self.status[j] = Status::Upper;
            }
        }
        self.rebuild(&basis.basic);
    }

    /// Phase-1 cost of each basic row: -1 below its lower bound, +1 above
    /// its upper bound.
    fn infeasibility_costs(&self) -> (Vec<f64>, f64) {
        let tol = self.settings.feasibility_tol;
        let mut total = 0.0;
        let costs = (0..self.m)
            .map(|r| {
                let j = self.basic[r];
                let x = self.beta[r];
                if x < self.lo[j] - tol {
                    total += self.lo[j] - x;
                    -1.0
                } else if x > self.hi[j] + tol {
                    total += x - self.hi[j];
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        (costs, total)
    }

    /// Simplex multipliers `yᵀ = c_Bᵀ B⁻¹`.
    fn multipliers(&self, basic_costs: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (r, &c) in basic_costs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let base = r * self.cols + self.n;
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += c * self.t[base + i];
            }
        }
        y
    }

    fn reduced_costs(&self, phase: Phase, basic_costs: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = match phase {
            Phase::One => vec![0.0; self.cols],
            Phase::Two => self.cost.clone(),
        };
        for (r, &c) in basic_costs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.t[r * self.cols..(r + 1) * self.cols];
            for (dj, &a) in d.iter_mut().zip(row) {
                *dj -= c * a;
            }
        }
        d
    }

    fn step(&mut self, phase: Phase, basic_costs: &[f64], bland: bool) -> Step {
        let tol = self.settings.feasibility_tol;
        let d = self.reduced_costs(phase, basic_costs);

        let mut entering: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            let attractive = match self.status[j] {
                Status::Basic => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                Status::Lower => d[j] < -tol,
                Status::Upper => d[j] > tol,
            };
            if !attractive {
                continue;
            }
            if bland {
                entering = Some((j, d[j]));
                break;
            }
            if entering.is_none_or(|(_, best)| d[j].abs() > best.abs()) {
                entering = Some((j, d[j]));
            }
        }
        let Some((q, _)) = entering else {
            return Step::Optimal;
        };
        let dir = if self.status[q] == Status::Lower { 1.0 } else { -1.0 };

        // ratio test
        let mut theta = self.hi[q] - self.lo[q];
        let mut leave: Option<(usize, bool, f64)> = None;
        for r in 0..self.m {
            let a = self.t[r * self.cols + q];
            if a.abs() <= self.settings.pivot_tol {
                continue;
            }
            let delta = -dir * a;
            let j = self.basic[r];
            let x = self.beta[r];
            let (limit, to_upper) = if delta < 0.0 {
                if x > self.hi[j] + tol {
                    ((x - self.hi[j]) / -delta, true)
                } else if x >= self.lo[j] - tol {
                    ((x - self.lo[j]).max(0.0) / -delta, false)
                } else {
                    continue;
                }
            } else if x < self.lo[j] - tol {
                ((self.lo[j] - x) / delta, false)
            } else if self.hi[j].is_finite() && x <= self.hi[j] + tol {
                ((self.hi[j] - x).max(0.0) / delta, true)
            } else {
                continue;
            };
            let better = match leave {
                None => limit < theta,
                Some((lr, _, la)) => {
                    if limit < theta - 1e-12 {
                        true
                    } else if limit <= theta + 1e-12 {
                        if bland {
                            j < self.basic[lr]
                        } else {
                            a.abs() > la
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                theta = limit.max(0.0);
                leave = Some((r, to_upper, a.abs()));
            }
        }
        if leave.is_none() && !theta.is_finite() {
            return Step::Unbounded;
        }

        for r in 0..self.m {
            let a = self.t[r * self.cols + q];
            if a != 0.0 {
                self.beta[r] -= dir * a * theta;
            }
        }
        let entering_value = self.value_of(q) + dir * theta;
        match leave {
            None => {
                self.status[q] = if dir > 0.0 { Status::Upper } else { Status::Lower };
            }
            Some((r, to_upper, _)) => {
                let j = self.basic[r];
                self.pivot(r, q);
                self.status[j] = if to_upper { Status::Upper } else { Status::Lower };
                self.beta[r] = entering_value;
                self.since_refactor += 1;
            }
        }
        self.iterations += 1;
        Step::Pivoted {
            degenerate: theta <= 1e-12,
        }
    }

    /// Runs one phase to optimality. Returns `false` on unboundedness.
    fn run_phase(&mut self, phase: Phase, limit: usize) -> Result<bool> {
        let mut degenerate_run = 0;
        let mut bland = false;
        let mut verified = false;
        loop {
            if self.iterations >= limit {
                return Err(Error::Numerical(format!("iteration limit {limit} reached")));
            }
            if self.since_refactor >= self.settings.refactor_interval {
                self.refactor();
            }
            let basic_costs = match phase {
                Phase::One => {
                    let (c, total) = self.infeasibility_costs();
                    if total == 0.0 {
                        return Ok(true);
                    }
                    c
                }
                Phase::Two => self.basic.iter().map(|&j| self.cost[j]).collect(),
            };
            match self.step(phase, &basic_costs, bland) {
                Step::Optimal => {
                    if verified {
                        return Ok(true);
                    }
                    // confirm on a freshly inverted tableau
                    self.refactor();
                    verified = true;
                }
                Step::Unbounded => return Ok(false),
                Step::Pivoted { degenerate } => {
                    verified = false;
                    if degenerate {
                        degenerate_run += 1;
                        if degenerate_run > self.settings.degenerate_budget {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                        bland = false;
                    }
                }
            }
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.cols)
            .map(|j| if self.status[j] == Status::Basic { 0.0 } else { self.value_of(j) })
            .collect();
        for (r, &j) in self.basic.iter().enumerate() {
            x[j] = self.beta[r];
        }
        x
    }

    fn basis(&self) -> Basis {
        Basis {
            basic: self.basic.clone(),
            at_upper: (0..self.cols).filter(|&j| self.status[j] == Status::Upper).collect(),
            num_vars: self.n,
            num_rows: self.m,
        }
    }

    fn split_duals(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let neq = self.lp.equalities.len();
        let sigma = y[..neq].iter().map(|v| -v).collect();
        let pi = y[neq..].iter().map(|v| (-v).max(0.0)).collect();
        (sigma, pi)
    }
}

/// Solves `problem`, optionally starting from `warmstart`.
///
/// The pivot rule is deterministic (Dantzig pricing with a Bland fallback
/// after a run of degenerate pivots), so identical inputs give identical
/// outcomes. A warm basis of the wrong shape is ignored.
pub fn solve_lp(problem: &LinearProgram, warmstart: Option<&Basis>, settings: &LpSettings) -> Result<LpSolution> {
    problem.validate()?;
    let mut tab = Tableau::new(problem, settings);
    if let Some(b) = warmstart {
        tab.apply_warm_start(b);
    }
    let limit = settings
        .max_iterations
        .unwrap_or_else(|| 20_000.max(50 * (tab.m + tab.n)));

    tab.run_phase(Phase::One, limit)?;
    let (costs, infeasibility) = tab.infeasibility_costs();
    if infeasibility > 0.0 {
        let y = tab.multipliers(&costs);
        let (sigma, pi) = tab.split_duals(&y);
        let ray = FarkasRay { sigma, pi };
        if !super::verify_farkas(problem, &ray, settings) {
            return Err(Error::Numerical(format!(
                "phase 1 ended with infeasibility {infeasibility:e} but the ray does not certify it"
            )));
        }
        return Ok(LpSolution {
            outcome: LpOutcome::Infeasible(ray),
            basis: tab.basis(),
            iterations: tab.iterations,
        });
    }

    if problem.variables.iter().any(|v| v.cost != 0.0) {
        loop {
            if !tab.run_phase(Phase::Two, limit)? {
                return Ok(LpSolution {
                    outcome: LpOutcome::Unbounded,
                    basis: tab.basis(),
                    iterations: tab.iterations,
                });
            }
            // reinversion at the end of phase 2 can expose small infeasibilities
            if tab.infeasibility_costs().1 == 0.0 {
                break;
            }
            tab.run_phase(Phase::One, limit)?;
            if tab.infeasibility_costs().1 > 0.0 {
                return Err(Error::Numerical("lost feasibility during phase 2".into()));
            }
        }
    }

    let basic_costs: Vec<f64> = tab.basic.iter().map(|&j| tab.cost[j]).collect();
    let y = tab.multipliers(&basic_costs);
    let (eq_duals, ineq_duals) = tab.split_duals(&y);
    let mut primal = tab.primal();
    primal.truncate(tab.n);
    let objective = problem.objective(&primal);
    Ok(LpSolution {
        outcome: LpOutcome::Optimal(OptimalSolution {
            primal,
            eq_duals,
            ineq_duals,
            objective,
        }),
        basis: tab.basis(),
        iterations: tab.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{verify_farkas, Row, Variable};
    use super::*;
    use proptest::prelude::*;

    fn settings() -> LpSettings {
        LpSettings::default()
    }

    #[test]
    fn single_equality() {
        let lp = LinearProgram {
            variables: vec![Variable {
                lower: 0.0,
                upper: 2.0,
                cost: 0.0,
            }],
            equalities: vec![Row::new(vec![(0, 1.0)], 1.0)],
            inequalities: vec![],
        };
        let sol = solve_lp(&lp, None, &settings()).unwrap();
        match sol.outcome {
            LpOutcome::Optimal(s) => assert!((s.primal[0] - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_variable_infeasible_ray() {
        let lp = super::super::tests::two_var_infeasible();
        let sol = solve_lp(&lp, None, &settings()).unwrap();
        let LpOutcome::Infeasible(ray) = sol.outcome else {
            panic!("expected infeasible");
        };
        assert!(verify_farkas(&lp, &ray, &settings()));
        // the certificate is unique up to scaling: σ = -π1 = -π2
        assert!(ray.sigma[0] < 0.0);
        assert!((ray.pi[0] + ray.sigma[0]).abs() < 1e-9);
        assert!((ray.pi[1] + ray.sigma[0]).abs() < 1e-9);
    }

    #[test]
    fn small_optimum_with_duals() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
        let lp = LinearProgram {
            variables: vec![Variable::nonnegative(-1.0); 2],
            equalities: vec![],
            inequalities: vec![
                Row::new(vec![(0, 1.0), (1, 2.0)], 4.0),
                Row::new(vec![(0, 3.0), (1, 1.0)], 6.0),
            ],
        };
        let sol = solve_lp(&lp, None, &settings()).unwrap();
        let LpOutcome::Optimal(s) = sol.outcome else { panic!() };
        assert!((s.primal[0] - 1.6).abs() < 1e-9);
        assert!((s.primal[1] - 1.2).abs() < 1e-9);
        assert!((s.objective + 2.8).abs() < 1e-9);
        assert!((s.ineq_duals[0] - 0.4).abs() < 1e-9);
        assert!((s.ineq_duals[1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram {
            variables: vec![Variable::nonnegative(-1.0), Variable::nonnegative(0.0)],
            equalities: vec![Row::new(vec![(0, 1.0), (1, -1.0)], 1.0)],
            inequalities: vec![],
        };
        let sol = solve_lp(&lp, None, &settings()).unwrap();
        assert_eq!(sol.outcome, LpOutcome::Unbounded);
    }

    #[test]
    fn upper_bounds_enter_the_certificate() {
        // x + y = 5 with x <= 2, y <= 2 expressed as variable bounds
        let lp = LinearProgram {
            variables: vec![
                Variable {
                    lower: 0.0,
                    upper: 2.0,
                    cost: 0.0,
                };
                2
            ],
            equalities: vec![Row::new(vec![(0, 1.0), (1, 1.0)], 5.0)],
            inequalities: vec![],
        };
        let sol = solve_lp(&lp, None, &settings()).unwrap();
        let LpOutcome::Infeasible(ray) = sol.outcome else { panic!() };
        assert!(verify_farkas(&lp, &ray, &settings()));
    }

    fn small_lp() -> impl Strategy<Value = LinearProgram> {
        (1usize..=5, 0usize..=3, 0usize..=3).prop_flat_map(|(n, neq, nle)| {
            let coef = -5i32..=5;
            let row = (prop::collection::vec(coef.clone(), n), -5i32..=5);
            (
                prop::collection::vec((0i32..=2, prop::option::of(0i32..=4), -5i32..=5), n),
                prop::collection::vec(row.clone(), neq),
                prop::collection::vec(row, nle),
            )
                .prop_map(move |(vars, eqs, les)| {
                    let to_row = |(c, b): (Vec<i32>, i32)| {
                        Row::new(
                            c.iter()
                                .enumerate()
                                .filter(|(_, a)| **a != 0)
                                .map(|(j, a)| (j, *a as f64))
                                .collect(),
                            b as f64,
                        )
                    };
                    LinearProgram {
                        variables: vars
                            .into_iter()
                            .map(|(l, u, c)| Variable {
                                lower: l as f64,
                                upper: u.map_or(f64::INFINITY, |u| (l + u) as f64),
                                cost: c as f64,
                            })
                            .collect(),
                        equalities: eqs.into_iter().map(to_row).collect(),
                        inequalities: les.into_iter().map(to_row).collect(),
                    }
                })
        })
    }

    proptest! {
        #[test]
        fn outcomes_are_certified(lp in small_lp()) {
            let sol = solve_lp(&lp, None, &settings()).unwrap();
            match &sol.outcome {
                LpOutcome::Optimal(s) => {
                    prop_assert!(lp.max_violation(&s.primal) < 1e-7);
                    prop_assert!(s.ineq_duals.iter().all(|&p| p >= 0.0));
                    // dual feasibility of reduced costs c + Aᵀσ + Bᵀπ
                    let r = lp.combine_rows(&s.eq_duals, &s.ineq_duals);
                    for (j, v) in lp.variables.iter().enumerate() {
                        let d = v.cost + r[j];
                        let x = s.primal[j];
                        if x > v.lower + 1e-7 && x < v.upper - 1e-7 {
                            prop_assert!(d.abs() < 1e-7);
                        } else if (x - v.lower).abs() <= 1e-7 && !v.is_fixed() {
                            prop_assert!(d > -1e-7);
                        } else if (x - v.upper).abs() <= 1e-7 && !v.is_fixed() {
                            prop_assert!(d < 1e-7);
                        }
                    }
                    // complementary slackness on inequalities
                    for (row, p) in lp.inequalities.iter().zip(&s.ineq_duals) {
                        prop_assert!((p * (row.rhs - row.dot(&s.primal))).abs() < 1e-7);
                    }
                }
                LpOutcome::Infeasible(ray) => prop_assert!(verify_farkas(&lp, ray, &settings())),
                LpOutcome::Unbounded => prop_assert!(lp.variables.iter().any(|v| v.cost != 0.0)),
            }
        }

        #[test]
        fn warm_start_is_neutral(lp in small_lp(), other in small_lp()) {
            let cold = solve_lp(&lp, None, &settings()).unwrap();
            // a basis of the same problem and one of an unrelated problem
            let warm = solve_lp(&lp, Some(&cold.basis), &settings()).unwrap();
            let foreign = solve_lp(&other, None, &settings()).unwrap();
            let mixed = solve_lp(&lp, Some(&foreign.basis), &settings()).unwrap();
            for w in [&warm, &mixed] {
                match (&cold.outcome, &w.outcome) {
                    (LpOutcome::Optimal(a), LpOutcome::Optimal(b)) => {
                        prop_assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()));
                    }
                    (LpOutcome::Infeasible(_), LpOutcome::Infeasible(_)) => {}
                    (LpOutcome::Unbounded, LpOutcome::Unbounded) => {}
                    (a, b) => prop_assert!(false, "classification differs: {a:?} vs {b:?}"),
                }
            }
        }

        #[test]
        fn deterministic(lp in small_lp()) {
            let a = solve_lp(&lp, None, &settings()).unwrap();
            let b = solve_lp(&lp, None, &settings()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
