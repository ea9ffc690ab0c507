//! Minimal linear-program representation and the solver backend contract.
//!
//! Problems are always minimizations over bounded variables with sparse
//! rows `sum(coef * var) {<=,=,>=} rhs`.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowOp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub op: RowOp,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<Row>,
}

impl LpProblem {
    pub fn add_var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, op: RowOp, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, op, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rhs).collect()
    }

    /// True when the two problems differ at most in their right-hand sides
    /// (objective, bounds, coefficients and row senses compared bitwise).
    pub fn same_structure(&self, other: &LpProblem) -> bool {
        let bits = |v: f64| v.to_bits();
        self.objective.len() == other.objective.len()
            && self
                .objective
                .iter()
                .zip(&other.objective)
                .all(|(a, b)| bits(*a) == bits(*b))
            && self.bounds.len() == other.bounds.len()
            && self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|(a, b)| bits(a.0) == bits(b.0) && bits(a.1) == bits(b.1))
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.op == b.op
                    && a.coeffs.len() == b.coeffs.len()
                    && a.coeffs
                        .iter()
                        .zip(&b.coeffs)
                        .all(|(x, y)| x.0 == y.0 && bits(x.1) == bits(y.1))
            })
    }

    /// Objective value of a primal point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of a primal point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - v).max(v - hi);
        }
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
            let viol = match r.op {
                RowOp::Le => lhs - r.rhs,
                RowOp::Ge => r.rhs - lhs,
                RowOp::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("problem too large for backend: {0}")]
    TooLarge(String),
    #[error("backend failure: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct Capabilities {
    pub name: &'static str,
    pub max_vars: usize,
    pub max_rows: usize,
    /// Relative optimality tolerance the backend aims for.
    pub tolerance: f64,
}

/// An engine able to solve [`LpProblem`]s to optimality.
pub trait LpBackend: Send + Sync {
    fn capabilities(&self) -> Capabilities;
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution, LpError>;
}

/// Pure-Rust dual simplex from the `microlp` crate.
#[derive(Debug, Default, Clone, Copy)]
pub struct MicrolpBackend;

impl LpBackend for MicrolpBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            name: "microlp",
            max_vars: 1_000_000,
            max_rows: 1_000_000,
            tolerance: 1e-8,
        }
    }

    fn solve(&self, p: &LpProblem) -> Result<LpSolution, LpError> {
        use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

        let caps = self.capabilities();
        if p.num_vars() > caps.max_vars || p.rows.len() > caps.max_rows {
            return Err(LpError::TooLarge(format!(
                "{} vars, {} rows",
                p.num_vars(),
                p.rows.len()
            )));
        }
        let mut prob = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = p
            .objective
            .iter()
            .zip(&p.bounds)
            .map(|(&c, &b)| prob.add_var(c, b))
            .collect();
        for r in &p.rows {
            let op = match r.op {
                RowOp::Le => ComparisonOp::Le,
                RowOp::Eq => ComparisonOp::Eq,
                RowOp::Ge => ComparisonOp::Ge,
            };
            prob.add_constraint(r.coeffs.iter().map(|&(j, c)| (vars[j], c)), op, r.rhs);
        }
        let sol = match prob.solve() {
            Ok(SolveOutcome::Solution(s)) => s,
            Ok(SolveOutcome::Interrupted(_)) => {
                return Err(LpError::Failed("solve interrupted".into()))
            }
            Err(microlp::Error::Infeasible) => return Err(LpError::Infeasible),
            Err(microlp::Error::Unbounded) => return Err(LpError::Unbounded),
            Err(e) => return Err(LpError::Failed(e.to_string())),
        };
        let values: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v)).collect();
        // Objective recomputed from the primal point.
        Ok(LpSolution {
            objective: p.evaluate(&values),
            values,
        })
    }
}
