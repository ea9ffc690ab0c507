//! Investment search by exhaustive enumeration of binary decisions.

use std::io::Write;
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::opcost::OpEvaluator;
use crate::scenario::ScenarioSet;
use crate::sysmodel::{enumerate_decisions, invest_cost, InvestmentDecision, DEFAULT_ENUM_LIMIT};

#[derive(Debug, Clone, Copy)]
pub struct PlanOptions {
    pub enum_limit: usize,
    /// Skip decisions whose investment cost alone reaches the incumbent total.
    pub prune: bool,
    pub trace: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            enum_limit: DEFAULT_ENUM_LIMIT,
            prune: true,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub decision: String,
    pub invest: f64,
    /// `None` when the decision was pruned.
    pub op: Option<f64>,
    pub total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub decision: InvestmentDecision,
    /// Decision as a bit string, candidate lines first.
    pub bits: String,
    pub total_cost: f64,
    pub invest_cost: f64,
    pub op_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

/// Minimizes investment plus operational cost over all decisions.
///
/// Decisions are visited in lexicographic order and only a strictly lower
/// total replaces the incumbent, so ties resolve to the smallest bit vector.
/// Pruning is sound because operational costs are non-negative.
pub fn plan(ev: &OpEvaluator<'_>, set: &ScenarioSet, opts: PlanOptions) -> Result<PlanResult> {
    let m = ev.model();
    let decisions = enumerate_decisions(m, opts.enum_limit)?;
    let mut best: Option<(InvestmentDecision, f64, f64, f64)> = None;
    let mut trace = opts.trace.then(Vec::new);
    for x in decisions {
        let inv = invest_cost(m, &x)?;
        if opts.prune {
            if let Some((_, _, _, best_total)) = &best {
                if inv >= *best_total {
                    if let Some(t) = trace.as_mut() {
                        t.push(TraceEntry {
                            decision: x.to_string(),
                            invest: inv,
                            op: None,
                            total: None,
                        });
                    }
                    continue;
                }
            }
        }
        let op = ev.op_cost(&x, set)?.total;
        let total = inv + op;
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry {
                decision: x.to_string(),
                invest: inv,
                op: Some(op),
                total: Some(total),
            });
        }
        if best.as_ref().is_none_or(|b| total < b.3) {
            best = Some((x, inv, op, total));
        }
    }
    let (decision, invest, op, total) = best.expect("enumeration yields at least one decision");
    Ok(PlanResult {
        bits: decision.to_string(),
        decision,
        total_cost: total,
        invest_cost: invest,
        op_cost: op,
        trace,
    })
}

/// Investment plus full-set operational cost of a fixed decision.
pub fn evaluate_fixed(
    ev: &OpEvaluator<'_>,
    x: &InvestmentDecision,
    full: &ScenarioSet,
) -> Result<f64> {
    let inv = invest_cost(ev.model(), x)?;
    Ok(inv + ev.op_cost(x, full)?.total)
}

#[derive(Serialize, Deserialize)]
struct CachedReference {
    input_hash: String,
    reference: PlanResult,
}

/// Hash identifying a (system, scenario set) pair.
pub fn input_hash(ev: &OpEvaluator<'_>, set: &ScenarioSet) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(ev.model())?);
    h.update(serde_json::to_vec(set)?);
    Ok(hex::encode(h.finalize()))
}

pub const REFERENCE_FILE: &str = "reference.json";

/// Plans on the full set. With a cache directory, a stored result for the
/// same inputs is reused and a fresh result is written back.
///
/// Returns the plan and whether it came from the cache.
pub fn reference_solution(
    ev: &OpEvaluator<'_>,
    full: &ScenarioSet,
    opts: PlanOptions,
    cache_dir: Option<&Path>,
) -> Result<(PlanResult, bool)> {
    let hash = input_hash(ev, full)?;
    if let Some(dir) = cache_dir {
        if let Some(reference) = lookup(dir, &hash)? {
            return Ok((reference, true));
        }
    }
    let reference = plan(ev, full, opts)?;
    if let Some(dir) = cache_dir {
        let path = dir.join(REFERENCE_FILE);
        let body = serde_json::to_vec_pretty(&CachedReference {
            input_hash: hash,
            reference: reference.clone(),
        })?;
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok((reference, false))
}

/// Cached reference for exactly these inputs, if one is stored in `dir`.
pub fn cached_reference(
    ev: &OpEvaluator<'_>,
    full: &ScenarioSet,
    dir: &Path,
) -> Result<Option<PlanResult>> {
    lookup(dir, &input_hash(ev, full)?)
}

fn lookup(dir: &Path, hash: &str) -> Result<Option<PlanResult>> {
    let path = dir.join(REFERENCE_FILE);
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(&path, e)),
    };
    match serde_json::from_slice::<CachedReference>(&bytes) {
        Ok(c) if c.input_hash == hash => {
            info!("reference cache hit: {}", path.display());
            Ok(Some(c.reference))
        }
        _ => {
            info!("reference cache stale or unreadable: {}", path.display());
            Ok(None)
        }
    }
}

/// Writes `decision,invest,op,total`; pruned decisions leave op and total empty.
pub fn write_trace_csv<W: Write>(w: W, trace: &[TraceEntry]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["decision", "invest", "op", "total"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for t in trace {
        wtr.write_record([
            t.decision.clone(),
            t.invest.to_string(),
            opt(t.op),
            opt(t.total),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}
