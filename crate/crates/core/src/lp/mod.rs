//! Bounded-variable linear programs with infeasibility certificates.
//!
//! A [`LinearProgram`] is
//!
//! ```text
//! min  cᵀx
//! s.t. A x  = b        (equalities)
//!      B x <= c        (inequalities)
//!      l <= x <= u,    0 <= l < inf,  u may be +inf
//! ```
//!
//! Dual values use the certificate sign convention: with `σ` for the
//! equalities and `π >= 0` for the inequalities, the reduced costs of an
//! optimal solution are `c + Aᵀσ + Bᵀπ`. When the system is infeasible the
//! solver returns a [`FarkasRay`] `(σ, π)` such that `r = Aᵀσ + Bᵀπ` satisfies
//!
//! ```text
//! bᵀσ + cᵀπ  <  min { rᵀx : l <= x <= u }
//! ```
//!
//! which for `l = 0, u = inf` reduces to the textbook `r >= 0, bᵀσ + cᵀπ < 0`.

mod simplex;

pub use simplex::solve_lp;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

impl Variable {
    pub fn nonnegative(cost: f64) -> Self {
        Variable {
            lower: 0.0,
            upper: f64::INFINITY,
            cost,
        }
    }

    pub fn fixed_zero() -> Self {
        Variable {
            lower: 0.0,
            upper: 0.0,
            cost: 0.0,
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row { coeffs, rhs }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub equalities: Vec<Row>,
    pub inequalities: Vec<Row>,
}

impl LinearProgram {
    pub fn num_rows(&self) -> usize {
        self.equalities.len() + self.inequalities.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        for (j, v) in self.variables.iter().enumerate() {
            if !(v.lower >= 0.0 && v.lower.is_finite()) || !(v.upper >= v.lower) || !v.cost.is_finite() {
                return Err(Error::Shape(format!("variable {j} has invalid bounds or cost")));
            }
        }
        for (kind, rows) in [("equality", &self.equalities), ("inequality", &self.inequalities)] {
            for (i, r) in rows.iter().enumerate() {
                if !r.rhs.is_finite() {
                    return Err(Error::Shape(format!("{kind} row {i} has non-finite rhs")));
                }
                if r.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                    return Err(Error::Shape(format!("{kind} row {i} references a bad column")));
                }
            }
        }
        Ok(())
    }

    /// Maximum violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xj) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xj).max(xj - v.upper);
        }
        for r in &self.equalities {
            worst = worst.max((r.dot(x) - r.rhs).abs());
        }
        for r in &self.inequalities {
            worst = worst.max(r.dot(x) - r.rhs);
        }
        worst
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.variables.iter().zip(x).map(|(v, xj)| v.cost * xj).sum()
    }

    /// `Aᵀσ + Bᵀπ`.
    pub fn combine_rows(&self, sigma: &[f64], pi: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.variables.len()];
        for (row, &s) in self.equalities.iter().zip(sigma) {
            for &(j, a) in &row.coeffs {
                r[j] += a * s;
            }
        }
        for (row, &p) in self.inequalities.iter().zip(pi) {
            for &(j, a) in &row.coeffs {
                r[j] += a * p;
            }
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpSettings {
    /// Primal and dual feasibility tolerance.
    pub feasibility_tol: f64,
    /// A Farkas ray must separate by at least this much.
    pub certificate_tol: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_budget: usize,
    /// Pivots between tableau reinversions.
    pub refactor_interval: usize,
    /// Hard cap on pivots; `None` scales with the problem size.
    pub max_iterations: Option<usize>,
}

impl Default for LpSettings {
    fn default() -> Self {
        LpSettings {
            feasibility_tol: 1e-9,
            certificate_tol: 1e-7,
            pivot_tol: 1e-10,
            degenerate_budget: 50,
            refactor_interval: 100,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub primal: Vec<f64>,
    /// `σ`, one per equality row, free sign.
    pub eq_duals: Vec<f64>,
    /// `π >= 0`, one per inequality row.
    pub ineq_duals: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarkasRay {
    pub sigma: Vec<f64>,
    pub pi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(OptimalSolution),
    Infeasible(FarkasRay),
    Unbounded,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal(_))
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, LpOutcome::Infeasible(_))
    }
}

/// A simplex basis over the structural columns followed by one unit column
/// per row (equalities first, then inequalities).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub at_upper: Vec<usize>,
    pub num_vars: usize,
    pub num_rows: usize,
}

impl Basis {
    /// Adapts a basis to a problem with the same variables and rows appended
    /// at the end of the inequality block; the new rows get their slacks.
    pub fn extended_to(&self, problem: &LinearProgram) -> Option<Basis> {
        let n = problem.variables.len();
        let m = problem.num_rows();
        if self.num_vars != n || self.num_rows > m {
            return None;
        }
        let mut basic = self.basic.clone();
        basic.extend((self.num_rows..m).map(|i| n + i));
        Some(Basis {
            basic,
            at_upper: self.at_upper.clone(),
            num_vars: n,
            num_rows: m,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub outcome: LpOutcome,
    pub basis: Basis,
    pub iterations: usize,
}

/// Checks the certificate conditions for `ray` against `problem`.
pub fn verify_farkas(problem: &LinearProgram, ray: &FarkasRay, settings: &LpSettings) -> bool {
    if ray.sigma.len() != problem.equalities.len() || ray.pi.len() != problem.inequalities.len() {
        return false;
    }
    let tol = settings.feasibility_tol;
    if ray.pi.iter().any(|&p| !(p >= -tol)) || ray.sigma.iter().any(|s| !s.is_finite()) {
        return false;
    }
    let r = problem.combine_rows(&ray.sigma, &ray.pi);
    let mut box_min = 0.0;
    for (v, &rj) in problem.variables.iter().zip(&r) {
        if v.is_fixed() {
            box_min += rj * v.lower;
        } else if rj >= -tol {
            box_min += rj.max(0.0) * v.lower;
        } else if v.upper.is_finite() {
            box_min += rj * v.upper;
        } else {
            return false;
        }
    }
    let rhs: f64 = problem
        .equalities
        .iter()
        .zip(&ray.sigma)
        .map(|(row, s)| row.rhs * s)
        .chain(problem.inequalities.iter().zip(&ray.pi).map(|(row, p)| row.rhs * p))
        .sum();
    rhs - box_min <= -settings.certificate_tol
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lp-fixture 1")?;
        writeln!(f, "vars {}", self.variables.len())?;
        for v in &self.variables {
            writeln!(f, "{} {} {}", v.lower, v.upper, v.cost)?;
        }
        for (tag, rows) in [("eq", &self.equalities), ("le", &self.inequalities)] {
            writeln!(f, "{tag} {}", rows.len())?;
            for r in rows {
                write!(f, "{} :", r.rhs)?;
                for (j, a) in &r.coeffs {
                    write!(f, " {j}:{a}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

impl FromStr for LinearProgram {
    type Err = Error;

    /// Reads the fixture text written by `Display`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Schema(format!("lp fixture: {what}"));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("lp-fixture 1") {
            return Err(bad("missing header"));
        }
        let count = |line: Option<&str>, tag: &str| -> Result<usize> {
            line.and_then(|l| l.trim().strip_prefix(tag))
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(&format!("expected {tag} count")))
        };
        let mut lp = LinearProgram::default();
        let n = count(lines.next(), "vars")?;
        for _ in 0..n {
            let parts: Vec<&str> = lines.next().ok_or_else(|| bad("truncated"))?.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad("variable line"));
            }
            lp.variables.push(Variable {
                lower: num(parts[0])?,
                upper: num(parts[1])?,
                cost: num(parts[2])?,
            });
        }
        for tag in ["eq", "le"] {
            let m = count(lines.next(), tag)?;
            for _ in 0..m {
                let line = lines.next().ok_or_else(|| bad("truncated"))?;
                let (rhs, rest) = line.split_once(':').ok_or_else(|| bad("row line"))?;
                let mut row = Row::new(Vec::new(), num(rhs.trim())?);
                for term in rest.split_whitespace() {
                    let (j, a) = term.split_once(':').ok_or_else(|| bad("row term"))?;
                    let j = j.parse().map_err(|_| bad("column index"))?;
                    row.coeffs.push((j, num(a)?));
                }
                if tag == "eq" {
                    lp.equalities.push(row);
                } else {
                    lp.inequalities.push(row);
                }
            }
        }
        lp.validate()?;
        Ok(lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `x1 + x2 = 3, x1 <= 1, x2 <= 1, x >= 0`.
    pub(crate) fn two_var_infeasible() -> LinearProgram {
        LinearProgram {
            variables: vec![Variable::nonnegative(0.0); 2],
            equalities: vec![Row::new(vec![(0, 1.0), (1, 1.0)], 3.0)],
            inequalities: vec![Row::new(vec![(0, 1.0)], 1.0), Row::new(vec![(1, 1.0)], 1.0)],
        }
    }

    #[test]
    fn hand_certificate_verifies() {
        let lp = two_var_infeasible();
        let ray = FarkasRay {
            sigma: vec![-1.0],
            pi: vec![1.0, 1.0],
        };
        assert_eq!(lp.combine_rows(&ray.sigma, &ray.pi), vec![0.0, 0.0]);
        assert!(verify_farkas(&lp, &ray, &LpSettings::default()));
    }

    #[test]
    fn zero_ray_rejected() {
        let lp = two_var_infeasible();
        let ray = FarkasRay {
            sigma: vec![0.0],
            pi: vec![0.0, 0.0],
        };
        assert!(!verify_farkas(&lp, &ray, &LpSettings::default()));
    }

    #[test]
    fn negative_pi_rejected() {
        let lp = two_var_infeasible();
        let ray = FarkasRay {
            sigma: vec![-1.0],
            pi: vec![1.0, -1.0],
        };
        assert!(!verify_farkas(&lp, &ray, &LpSettings::default()));
    }

    #[test]
    fn fixture_text_round_trips() {
        let mut lp = two_var_infeasible();
        lp.variables[1].upper = 2.5;
        lp.variables[0].cost = 0.1;
        let text = lp.to_string();
        let back: LinearProgram = text.parse().unwrap();
        assert_eq!(back, lp);
    }

    #[test]
    fn basis_extension_appends_slacks() {
        let lp = two_var_infeasible();
        let b = Basis {
            basic: vec![0, 1],
            at_upper: vec![],
            num_vars: 2,
            num_rows: 2,
        };
        let ext = b.extended_to(&lp).unwrap();
        assert_eq!(ext.basic, vec![0, 1, 4]);
    }
}
