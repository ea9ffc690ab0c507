//! Feedback re-clustering: repeatedly split the representatives whose
//! clusters carry the largest operational estimation error.
//!
//! Each loop plans on the current reduced set, evaluates that decision on the
//! full set, ranks representatives by `|ΔC_k|`, pools the member days of the
//! `n_bad` worst ones and re-clusters them into `n_bad + n_step` new
//! representatives.

use std::collections::BTreeSet;
use std::io::Write;

use log::info;
use serde::{Deserialize, Serialize};

use crate::clustering::{make_representatives, recluster_subset, reduce};
use crate::error::{Error, Result};
use crate::metrics::{build_report, ErrorReport, RdError};
use crate::opcost::OpEvaluator;
use crate::scenario::ScenarioSet;
use crate::solve::{plan, PlanOptions, PlanResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackConfig {
    pub n0: usize,
    pub n_loop: usize,
    pub n_step: usize,
    pub n_bad: usize,
}

impl FeedbackConfig {
    pub fn final_count(&self) -> usize {
        self.n0 + self.n_loop * self.n_step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub loop_index: usize,
    pub rd_count: usize,
    pub decision: String,
    pub total_reduced: f64,
    pub total_full: f64,
    pub op_error: f64,
    pub decision_error: Option<f64>,
    pub per_rd_errors: Vec<RdError>,
    /// Representative indices replaced after this record; empty on the last one.
    pub replaced: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeedbackTrace {
    pub records: Vec<LoopRecord>,
}

impl FeedbackTrace {
    /// `rd_count,total_reduced,total_full,op_err,decision_err,replaced_rds`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "rd_count",
            "total_reduced",
            "total_full",
            "op_err",
            "decision_err",
            "replaced_rds",
        ])?;
        for r in &self.records {
            let replaced: Vec<String> = r.replaced.iter().map(|k| k.to_string()).collect();
            wtr.write_record([
                r.rd_count.to_string(),
                r.total_reduced.to_string(),
                r.total_full.to_string(),
                r.op_error.to_string(),
                r.decision_error
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "N/A".into()),
                replaced.join(";"),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<trace csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FeedbackOutcome {
    pub final_set: ScenarioSet,
    pub trace: FeedbackTrace,
    /// One report per trace record.
    pub reports: Vec<ErrorReport>,
    pub plans: Vec<PlanResult>,
}

/// Representative indices sorted from worst to best: larger `|error|`
/// first, then larger weight, then smaller index.
pub fn rank_representatives(errors: &[RdError]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&errors[a], &errors[b]);
        eb.error
            .abs()
            .total_cmp(&ea.error.abs())
            .then(eb.weight.total_cmp(&ea.weight))
            .then(a.cmp(&b))
    });
    order
}

/// Picks the `n_bad` worst representatives that have at least two member days.
pub fn select_worst(
    errors: &[RdError],
    reduced: &ScenarioSet,
    n_bad: usize,
    loop_index: usize,
) -> Result<Vec<usize>> {
    let picked: Vec<usize> = rank_representatives(errors)
        .into_iter()
        .filter(|&k| reduced.provenance[k].len() > 1)
        .take(n_bad)
        .collect();
    if picked.len() < n_bad {
        return Err(Error::Config {
            loop_index,
            message: format!(
                "only {} of {} representatives can be split, n_bad = {n_bad}",
                picked.len(),
                reduced.len()
            ),
        });
    }
    Ok(picked)
}

/// Replaces the representatives at `removed` with `new`: the first
/// `removed.len()` new entries take the removed positions in ascending order,
/// the rest are appended.
pub fn splice(reduced: &ScenarioSet, removed: &[usize], new: &ScenarioSet) -> Result<ScenarioSet> {
    let mut positions = removed.to_vec();
    positions.sort_unstable();
    let mut entries = reduced.entries.clone();
    let mut provenance = reduced.provenance.clone();
    let mut fresh = new
        .entries
        .iter()
        .cloned()
        .zip(new.provenance.iter().cloned());
    for &k in &positions {
        let (e, p) = fresh
            .next()
            .ok_or_else(|| Error::Argument("fewer new representatives than removed ones".into()))?;
        entries[k] = e;
        provenance[k] = p;
    }
    for (e, p) in fresh {
        entries.push(e);
        provenance.push(p);
    }
    ScenarioSet::new(reduced.kind, entries, provenance)
}

fn record(loop_index: usize, plan: &PlanResult, report: &ErrorReport) -> LoopRecord {
    LoopRecord {
        loop_index,
        rd_count: report.rd_count,
        decision: plan.bits.clone(),
        total_reduced: report.total_reduced,
        total_full: report.total_full,
        op_error: report.op_estimation_error,
        decision_error: report.decision_error,
        per_rd_errors: report.per_rd_errors.clone(),
        replaced: vec![],
    }
}

/// Runs the feedback loop from a fresh `n0`-cluster reduction of `full`.
pub fn run_feedback(
    ev: &OpEvaluator<'_>,
    full: &ScenarioSet,
    cfg: FeedbackConfig,
    opts: PlanOptions,
    reference: Option<&PlanResult>,
) -> Result<FeedbackOutcome> {
    if cfg.n0 == 0 || cfg.n_step == 0 || cfg.n_bad == 0 {
        return Err(Error::Config {
            loop_index: 0,
            message: "n0, n_step and n_bad must be positive".into(),
        });
    }
    if cfg.final_count() > full.len() {
        return Err(Error::Config {
            loop_index: 0,
            message: format!(
                "final representative count {} exceeds {} days",
                cfg.final_count(),
                full.len()
            ),
        });
    }

    let (_, mut reduced) = reduce(full, cfg.n0)?;
    let mut trace = FeedbackTrace::default();
    let mut reports = Vec::new();
    let mut plans = Vec::new();

    for loop_index in 0..cfg.n_loop {
        let p = plan(ev, &reduced, opts)?;
        let report = build_report(ev, full, &reduced, &p, reference)?;
        let mut rec = record(loop_index, &p, &report);

        if cfg.n_bad > reduced.len() {
            return Err(Error::Config {
                loop_index,
                message: format!(
                    "n_bad = {} exceeds {} representatives",
                    cfg.n_bad,
                    reduced.len()
                ),
            });
        }
        let worst = select_worst(&report.per_rd_errors, &reduced, cfg.n_bad, loop_index)?;
        let pooled: BTreeSet<usize> = worst
            .iter()
            .flat_map(|&k| reduced.provenance[k].iter().copied())
            .collect();
        let target = cfg.n_bad + cfg.n_step;
        if pooled.len() < target {
            return Err(Error::Config {
                loop_index,
                message: format!(
                    "selected clusters hold {} days, cannot form {target} clusters",
                    pooled.len()
                ),
            });
        }
        let sub = make_representatives(&recluster_subset(full, &pooled, target)?)?;
        reduced = splice(&reduced, &worst, &sub)?;
        reduced.check_partitions(full)?;
        info!(
            "feedback loop {loop_index}: op error {:.6e}, replaced {:?}, now {} RDs",
            report.op_estimation_error,
            worst,
            reduced.len()
        );

        rec.replaced = worst;
        trace.records.push(rec);
        reports.push(report);
        plans.push(p);
    }

    let p = plan(ev, &reduced, opts)?;
    let report = build_report(ev, full, &reduced, &p, reference)?;
    trace.records.push(record(cfg.n_loop, &p, &report));
    reports.push(report);
    plans.push(p);

    Ok(FeedbackOutcome {
        final_set: reduced,
        trace,
        reports,
        plans,
    })
}

/// Direct clustering at each count, planned and fully evaluated.
pub fn baseline_sweep(
    ev: &OpEvaluator<'_>,
    full: &ScenarioSet,
    rd_counts: &[usize],
    opts: PlanOptions,
    reference: Option<&PlanResult>,
) -> Result<Vec<(usize, ErrorReport)>> {
    rd_counts
        .iter()
        .map(|&k| {
            let (_, reduced) = reduce(full, k)?;
            let p = plan(ev, &reduced, opts)?;
            Ok((k, build_report(ev, full, &reduced, &p, reference)?))
        })
        .collect()
}

/// `rd_count,op_err,op_err_norm,decision_err,decision_err_norm,simplification_err,practical_bound`.
/// Columns that need a reference are written as `N/A` when it is missing.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[(usize, ErrorReport)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "rd_count",
        "op_err",
        "op_err_norm",
        "decision_err",
        "decision_err_norm",
        "simplification_err",
        "practical_bound",
    ])?;
    let na = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "N/A".into());
    for (k, r) in rows {
        wtr.write_record([
            k.to_string(),
            r.op_estimation_error.to_string(),
            na(r.normalized(r.op_estimation_error)),
            na(r.decision_error),
            na(r.decision_error.and_then(|d| r.normalized(d))),
            na(r.simplification_error),
            (0.0 - r.op_estimation_error).to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<sweep csv>", e))?;
    Ok(())
}
