//! Aggregation error metrics and bound certification.
//!
//! For a reduced-set decision x̂ and (optionally) the full-set optimum x*:
//!
//! * simplification error  `C(x̂, D̂) - C(x*, D)`
//! * decision error        `C(x̂, D) - C(x*, D)`, never negative
//! * op. estimation error  `C_op(x, D̂) - C_op(x, D)`
//!
//! with `decision = simplification - estimation(x̂)`. The decision error is
//! bounded above by `estimation(x*) - estimation(x̂)`, and for mean-based
//! representatives (which under-estimate) by `-estimation(x̂)` alone.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opcost::OpEvaluator;
use crate::scenario::ScenarioSet;
use crate::solve::{evaluate_fixed, PlanResult};
use crate::sysmodel::InvestmentDecision;

/// Relative tolerance applied to the full-scale total cost.
pub const REL_TOL: f64 = 1e-6;
/// Absolute floor for near-zero normalizers.
pub const ABS_TOL: f64 = 1e-6;

pub fn tolerance(normalizer: f64) -> f64 {
    (REL_TOL * normalizer.abs()).max(ABS_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub evaluable: bool,
    pub pass: bool,
    /// Smallest slack over the inequalities of the bound; negative means violated.
    pub margin: Option<f64>,
    /// Upper bound on the decision error implied by this check, when computable.
    pub bound: Option<f64>,
}

impl Verdict {
    fn not_evaluable(bound: Option<f64>) -> Self {
        Self {
            evaluable: false,
            pass: false,
            margin: None,
            bound,
        }
    }

    fn from_margin(margin: f64, tol: f64, bound: Option<f64>) -> Self {
        Self {
            evaluable: true,
            pass: margin >= -tol,
            margin: Some(margin),
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdicts {
    /// `0 <= decision <= estimation(x*) - estimation(x̂)`.
    pub general: Verdict,
    /// `0 <= decision <= -estimation(x̂)`.
    pub practical: Verdict,
    /// `estimation(x̂) <= estimation(x*) <= 0`.
    pub chain: Verdict,
    pub tolerance: f64,
}

impl Default for BoundVerdicts {
    fn default() -> Self {
        Self {
            general: Verdict::not_evaluable(None),
            practical: Verdict::not_evaluable(None),
            chain: Verdict::not_evaluable(None),
            tolerance: ABS_TOL,
        }
    }
}

impl BoundVerdicts {
    pub fn all_evaluable_pass(&self) -> bool {
        [&self.general, &self.practical, &self.chain]
            .iter()
            .all(|v| !v.evaluable || v.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdError {
    pub k: usize,
    pub weight: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayError {
    pub day_id: usize,
    pub rd: usize,
    pub op_error: f64,
    pub ts_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rd_count: usize,
    pub decision: String,
    /// C(x̂, D̂).
    pub total_reduced: f64,
    /// C(x̂, D).
    pub total_full: f64,
    /// C(x*, D).
    pub reference_total: Option<f64>,
    pub reference_decision: Option<String>,
    pub simplification_error: Option<f64>,
    pub decision_error: Option<f64>,
    pub op_estimation_error: f64,
    pub op_estimation_error_ref: Option<f64>,
    pub per_rd_errors: Vec<RdError>,
    pub per_day_errors: Vec<DayError>,
    pub normalizer: Option<f64>,
    pub bounds: BoundVerdicts,
}

impl ErrorReport {
    /// `|decision - (simplification - estimation)|`, when all three are present.
    pub fn identity_residual(&self) -> Option<f64> {
        Some((self.decision_error? - (self.simplification_error? - self.op_estimation_error)).abs())
    }

    /// Full-scale cost used to scale tolerances and normalized output.
    pub fn scale(&self) -> f64 {
        self.normalizer.unwrap_or(self.total_full)
    }

    pub fn normalized(&self, v: f64) -> Option<f64> {
        self.normalizer.filter(|n| *n != 0.0).map(|n| v / n)
    }
}

pub fn simplification_error(reduced_plan: &PlanResult, reference_plan: &PlanResult) -> f64 {
    reduced_plan.total_cost - reference_plan.total_cost
}

/// `C(x, D) - C(x*, D)`; fails if the reference turns out not to be optimal.
pub fn decision_error(
    ev: &OpEvaluator<'_>,
    x: &InvestmentDecision,
    reference: Option<&PlanResult>,
    full: &ScenarioSet,
) -> Result<f64> {
    let reference = reference.ok_or(Error::Unavailable("decision error"))?;
    let err = evaluate_fixed(ev, x, full)? - reference.total_cost;
    if err < -tolerance(reference.total_cost) {
        return Err(Error::Consistency(format!(
            "decision {x} beats the reference total by {}",
            -err
        )));
    }
    Ok(err)
}

pub fn op_estimation_error(
    ev: &OpEvaluator<'_>,
    x: &InvestmentDecision,
    full: &ScenarioSet,
    reduced: &ScenarioSet,
) -> Result<f64> {
    Ok(ev.op_cost(x, reduced)?.total - ev.op_cost(x, full)?.total)
}

/// Estimation error of each representative's cluster.
pub fn per_rd_errors(
    ev: &OpEvaluator<'_>,
    x: &InvestmentDecision,
    full: &ScenarioSet,
    reduced: &ScenarioSet,
) -> Result<Vec<RdError>> {
    Ok(ev
        .per_cluster_costs(x, full, reduced)?
        .into_iter()
        .enumerate()
        .map(|(k, (rd, members))| RdError {
            k,
            weight: reduced.entries[k].weight,
            error: rd - members,
        })
        .collect())
}

/// Per original day: `w_d * (cost(T̂_k) - cost(T_d))`, in full-set order.
pub fn per_day_op_errors(
    ev: &OpEvaluator<'_>,
    x: &InvestmentDecision,
    full: &ScenarioSet,
    reduced: &ScenarioSet,
) -> Result<Vec<(usize, usize, f64)>> {
    reduced.check_partitions(full)?;
    let rd_costs = ev.entry_costs(x, reduced)?;
    let day_costs = ev.entry_costs(x, full)?;
    let assign = assignment(full, reduced);
    Ok((0..full.len())
        .map(|i| {
            let k = assign[i];
            let w = full.entries[i].weight;
            (full.day_id(i), k, w * (rd_costs[k] - day_costs[i]))
        })
        .collect())
}

/// Representative index of each full-set entry.
fn assignment(full: &ScenarioSet, reduced: &ScenarioSet) -> Vec<usize> {
    let index = full.day_index();
    let mut out = vec![0; full.len()];
    for (k, members) in reduced.provenance.iter().enumerate() {
        for d in members {
            out[index[d]] = k;
        }
    }
    out
}

/// Euclidean distance between each original day and its representative.
pub fn ts_errors(full: &ScenarioSet, reduced: &ScenarioSet) -> Result<Vec<(usize, f64)>> {
    reduced.check_partitions(full)?;
    if full.dim() != reduced.dim() {
        return Err(Error::Dimension(
            "full and reduced feature sizes differ".into(),
        ));
    }
    let assign = assignment(full, reduced);
    Ok(full
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let rd = &reduced.entries[assign[i]].features;
            let d2: f64 = e
                .features
                .iter()
                .zip(rd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (full.day_id(i), d2.sqrt())
        })
        .collect())
}

/// Evaluates the decision-error bounds on whatever the report makes available.
pub fn check_bounds(r: &ErrorReport) -> BoundVerdicts {
    let tol = tolerance(r.scale());
    let est = r.op_estimation_error;
    let practical_bound = Some(-est);
    let general_bound = r.op_estimation_error_ref.map(|e| e - est);

    let general = match (r.decision_error, general_bound) {
        (Some(dec), Some(b)) => Verdict::from_margin(dec.min(b - dec), tol, Some(b)),
        _ => Verdict::not_evaluable(general_bound),
    };
    let practical = match r.decision_error {
        Some(dec) => Verdict::from_margin(dec.min(-est - dec), tol, practical_bound),
        None => Verdict::not_evaluable(practical_bound),
    };
    let chain = match r.op_estimation_error_ref {
        Some(est_ref) => Verdict::from_margin((est_ref - est).min(-est_ref), tol, None),
        None => Verdict::not_evaluable(None),
    };
    BoundVerdicts {
        general,
        practical,
        chain,
        tolerance: tol,
    }
}

/// Assembles the complete error report for one reduced-set planning run.
pub fn build_report(
    ev: &OpEvaluator<'_>,
    full: &ScenarioSet,
    reduced: &ScenarioSet,
    reduced_plan: &PlanResult,
    reference: Option<&PlanResult>,
) -> Result<ErrorReport> {
    let x = &reduced_plan.decision;
    let total_full = evaluate_fixed(ev, x, full)?;
    let op_est = op_estimation_error(ev, x, full, reduced)?;
    let per_rd = per_rd_errors(ev, x, full, reduced)?;
    let ts: Vec<f64> = ts_errors(full, reduced)?
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    let per_day = per_day_op_errors(ev, x, full, reduced)?
        .into_iter()
        .zip(ts)
        .map(|((day_id, rd, op_error), ts_error)| DayError {
            day_id,
            rd,
            op_error,
            ts_error,
        })
        .collect();

    let (decision_err, simpl, est_ref) = match reference {
        Some(refp) => (
            Some(decision_error(ev, x, Some(refp), full)?),
            Some(simplification_error(reduced_plan, refp)),
            Some(op_estimation_error(ev, &refp.decision, full, reduced)?),
        ),
        None => (None, None, None),
    };

    let mut report = ErrorReport {
        rd_count: reduced.len(),
        decision: x.to_string(),
        total_reduced: reduced_plan.total_cost,
        total_full,
        reference_total: reference.map(|r| r.total_cost),
        reference_decision: reference.map(|r| r.decision.to_string()),
        simplification_error: simpl,
        decision_error: decision_err,
        op_estimation_error: op_est,
        op_estimation_error_ref: est_ref,
        per_rd_errors: per_rd,
        per_day_errors: per_day,
        normalizer: reference.map(|r| r.total_cost),
        bounds: BoundVerdicts::default(),
    };
    report.bounds = check_bounds(&report);
    Ok(report)
}

/// `day_id,rd,op_err,ts_err`.
pub fn write_per_day_csv<W: Write>(w: W, r: &ErrorReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["day_id", "rd", "op_err", "ts_err"])?;
    for d in &r.per_day_errors {
        wtr.write_record([
            d.day_id.to_string(),
            d.rd.to_string(),
            d.op_error.to_string(),
            d.ts_error.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<per-day csv>", e))?;
    Ok(())
}

/// `k,weight,op_err`.
pub fn write_per_rd_csv<W: Write>(w: W, r: &ErrorReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["k", "weight", "op_err"])?;
    for e in &r.per_rd_errors {
        wtr.write_record([e.k.to_string(), e.weight.to_string(), e.error.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<per-rd csv>", e))?;
    Ok(())
}
