use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use rdagg::feedback::write_sweep_csv;
use rdagg::metrics::{write_per_day_csv, write_per_rd_csv};
use rdagg::opcost::write_dispatch_csv;
use rdagg::scenario::{load_full_set, write_timeseries_csv};
use rdagg::solve::{cached_reference, write_trace_csv, REFERENCE_FILE};
use rdagg::sysmodel::warnings;
use rdagg::{
    baseline_sweep, build_report, invest_cost, plan, reduce, reference_solution, run_feedback,
    FeedbackConfig, InvestmentDecision, MicrolpBackend, OpEvaluator, PlanOptions, PlanResult,
    ScenarioSet, SystemModel,
};

use crate::config::Settings;
use crate::failure::{CliResult, Failure, EXIT_INTERNAL};
use crate::report::render_markdown;
use crate::rundir::RunDir;

pub const REDUCED_SET: &str = "reduced_set.json";
pub const PARTITION: &str = "partition.json";
pub const PLAN: &str = "plan.json";
pub const EVALUATION: &str = "evaluation.json";
pub const FINAL_SET: &str = "final_set.json";

const MAX_DEFAULT_SWEEP: usize = 10;

fn load_system(s: &Settings) -> CliResult<SystemModel> {
    let m = SystemModel::load(s.system_path()?)?;
    for w in warnings(&m) {
        warn!("{w}");
    }
    Ok(m)
}

fn load_full(s: &Settings) -> CliResult<ScenarioSet> {
    let full = load_full_set(s.timeseries_path()?)?;
    info!("{} days loaded", full.len());
    Ok(full)
}

fn evaluator<'m>(s: &Settings, m: &'m SystemModel) -> CliResult<OpEvaluator<'m>> {
    Ok(OpEvaluator::with_backend(
        m,
        Arc::new(MicrolpBackend),
        s.jobs,
    )?)
}

fn plan_options(s: &Settings, trace: bool) -> PlanOptions {
    PlanOptions {
        enum_limit: s.enum_limit,
        trace,
        ..Default::default()
    }
}

fn load_plan(path: &Path) -> CliResult<PlanResult> {
    let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

fn reference_if_cached(
    ev: &OpEvaluator<'_>,
    full: &ScenarioSet,
    run: &RunDir,
) -> CliResult<Option<PlanResult>> {
    let r = cached_reference(ev, full, run.root())?;
    if r.is_none() {
        info!("no matching {REFERENCE_FILE} in the run directory; decision errors will be N/A");
    }
    Ok(r)
}

pub fn cluster(s: &Settings, k: usize) -> CliResult<()> {
    let full = load_full(s)?;
    let mut run = RunDir::open(&s.out)?;
    let (partition, reduced) = reduce(&full, k)?;
    run.write_json(REDUCED_SET, &reduced)?;
    run.write_json(PARTITION, &partition)?;
    info!(
        "{} days reduced to {} representatives",
        full.len(),
        reduced.len()
    );
    run.finish("cluster", json!({ "k": k }))
}

pub fn plan_cmd(s: &Settings, set: Option<PathBuf>, trace: bool) -> CliResult<()> {
    let m = load_system(s)?;
    let mut run = RunDir::open(&s.out)?;
    let set_path = match set {
        Some(p) => p,
        None => run.require(REDUCED_SET, "rdagg cluster")?,
    };
    let set = ScenarioSet::load(&set_path)?;
    let ev = evaluator(s, &m)?;
    let p = plan(&ev, &set, plan_options(s, trace))?;
    if let Some(t) = &p.trace {
        run.write_with("plan_trace.csv", |buf| write_trace_csv(buf, t))?;
    }
    run.write_json(
        PLAN,
        &PlanResult {
            trace: None,
            ..p.clone()
        },
    )?;
    info!("decision {} with total cost {}", p.bits, p.total_cost);
    run.finish("plan", json!({ "set": set_path, "trace": trace }))
}

pub fn reference(s: &Settings) -> CliResult<()> {
    let m = load_system(s)?;
    let full = load_full(s)?;
    let mut run = RunDir::open(&s.out)?;
    let ev = evaluator(s, &m)?;
    let (r, hit) = reference_solution(&ev, &full, plan_options(s, false), Some(run.root()))?;
    if !hit {
        run.note_written(REFERENCE_FILE);
    }
    info!(
        "reference decision {} with total cost {}",
        r.bits, r.total_cost
    );
    run.finish("reference", json!({ "cache_hit": hit }))
}

#[derive(Serialize)]
struct Evaluation {
    decision: String,
    set: String,
    invest_cost: f64,
    op_cost: f64,
    total_cost: f64,
    /// Weighted operational cost of each set entry.
    per_entry: Vec<f64>,
    /// Unweighted daily optimum of each set entry.
    daily_cost: Vec<f64>,
}

pub fn evaluate(
    s: &Settings,
    decision: Option<String>,
    set: Option<PathBuf>,
    dispatch: bool,
) -> CliResult<()> {
    let m = load_system(s)?;
    let mut run = RunDir::open(&s.out)?;
    let bits = match decision.or_else(|| s.file.decision.clone()) {
        Some(b) => b,
        None => load_plan(&run.require(PLAN, "rdagg plan")?)?.bits,
    };
    let x = InvestmentDecision::from_bits(&m, &bits)?;
    let (set, label) = match set {
        Some(p) => (ScenarioSet::load(&p)?, p.display().to_string()),
        None => (load_full(s)?, "full".to_string()),
    };
    let ev = evaluator(s, &m)?;
    let op = ev.op_cost(&x, &set)?;
    let inv = invest_cost(&m, &x)?;
    let eval = Evaluation {
        decision: x.to_string(),
        set: label.clone(),
        invest_cost: inv,
        op_cost: op.total,
        total_cost: inv + op.total,
        per_entry: op.per_entry,
        daily_cost: ev.entry_costs(&x, &set)?,
    };
    run.write_json(EVALUATION, &eval)?;
    if dispatch {
        let audited = set
            .entries
            .iter()
            .zip(&set.provenance)
            .map(|(e, p)| Ok((p[0], ev.dispatch(&x, &e.features, p[0])?)))
            .collect::<rdagg::Result<Vec<_>>>()?;
        for (day, a) in &audited {
            let worst = a.max_balance_residual().max(a.max_flow_excess());
            if worst > 1e-6 {
                warn!("day {day}: dispatch residual {worst:.3e} MW");
            }
        }
        let refs: Vec<_> = audited.iter().map(|(d, a)| (*d, a)).collect();
        run.write_with("dispatch.csv", |buf| write_dispatch_csv(buf, &m, &refs))?;
    }
    info!(
        "decision {} costs {} on {label}",
        eval.decision, eval.total_cost
    );
    run.finish(
        "evaluate",
        json!({ "decision": bits, "set": label, "dispatch": dispatch }),
    )
}

pub fn feedback(s: &Settings, cfg: FeedbackConfig) -> CliResult<()> {
    let m = load_system(s)?;
    let full = load_full(s)?;
    let mut run = RunDir::open(&s.out)?;
    let ev = evaluator(s, &m)?;
    let reference = reference_if_cached(&ev, &full, &run)?;
    let out = run_feedback(&ev, &full, cfg, plan_options(s, false), reference.as_ref())?;
    run.write_with("trace.csv", |buf| out.trace.write_csv(buf))?;
    run.write_json(FINAL_SET, &out.final_set)?;
    run.write_json(
        "final_plan.json",
        out.plans
            .last()
            .ok_or_else(|| Failure::new(EXIT_INTERNAL, "no plan"))?,
    )?;
    for (i, r) in out.reports.iter().enumerate() {
        run.write_json(&format!("reports/loop_{i:02}.json"), r)?;
    }
    run.finish("feedback", serde_json::to_value(cfg).unwrap_or_default())
}

pub fn report(s: &Settings, rd_counts: Option<Vec<usize>>) -> CliResult<()> {
    let m = load_system(s)?;
    let full = load_full(s)?;
    let mut run = RunDir::open(&s.out)?;
    let reduced = ScenarioSet::load(&run.require(REDUCED_SET, "rdagg cluster")?)?;
    let p = load_plan(&run.require(PLAN, "rdagg plan")?)?;
    p.decision.check_dims(&m)?;
    let ev = evaluator(s, &m)?;
    let reference = reference_if_cached(&ev, &full, &run)?;
    let r = build_report(&ev, &full, &reduced, &p, reference.as_ref())?;

    let counts = rd_counts
        .or_else(|| s.file.rd_counts.clone())
        .unwrap_or_else(|| (1..=full.len().min(MAX_DEFAULT_SWEEP)).collect());
    let sweep = baseline_sweep(
        &ev,
        &full,
        &counts,
        plan_options(s, false),
        reference.as_ref(),
    )?;

    run.write_with("per_day_errors.csv", |buf| write_per_day_csv(buf, &r))?;
    run.write_with("per_rd_errors.csv", |buf| write_per_rd_csv(buf, &r))?;
    run.write_with("sweep.csv", |buf| write_sweep_csv(buf, &sweep))?;
    run.write_json("report.json", &r)?;
    let trace = std::fs::read_to_string(run.path("trace.csv")).ok();
    run.write_bytes(
        "report.md",
        render_markdown(&r, &sweep, trace.as_deref()).as_bytes(),
    )?;
    if !r.bounds.all_evaluable_pass() {
        warn!("a decision-error bound check failed; see report.md");
    }
    run.finish("report", json!({ "rd_counts": counts }))
}

pub fn synth(s: &Settings, fixture: u8, days: usize, peaks: usize, seed: u64) -> CliResult<()> {
    use rdagg::synth::{four_bus, six_bus, synthetic_series, three_bus, SeriesSpec};
    let model = match fixture {
        3 => three_bus(days as f64),
        4 => four_bus(days as f64),
        6 => six_bus(days as f64),
        other => {
            return Err(Failure::validation(format!(
                "unknown fixture {other}; choose 3, 4 or 6"
            )))
        }
    };
    let (load, wind) = synthetic_series(SeriesSpec::new(days, peaks, seed))?;
    let sys = s.system_path()?;
    let ts = s.timeseries_path()?;
    let mut body = serde_json::to_vec_pretty(&model)
        .map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))?;
    body.push(b'\n');
    std::fs::write(sys, body).map_err(|e| Failure::io(sys, e))?;
    let f = std::fs::File::create(ts).map_err(|e| Failure::io(ts, e))?;
    write_timeseries_csv(std::io::BufWriter::new(f), &load, &wind)?;
    info!("wrote {} and {}", sys.display(), ts.display());
    Ok(())
}
