//! Representative-day aggregation for power-system expansion planning.
//!
//! The pipeline reduces a year of hourly load/wind factors to weighted
//! representative days by mean-based hierarchical clustering, plans
//! line and wind investments by exhaustive enumeration over daily DC-OPF
//! LPs, measures how far the reduced model's costs and decisions drift from
//! the full-resolution model, and refines the representatives whose clusters
//! carry most of that drift.

pub mod clustering;
pub mod error;
pub mod feedback;
pub mod lp;
pub mod metrics;
pub mod opcost;
pub mod scenario;
pub mod solve;
pub mod synth;
pub mod sysmodel;

pub use clustering::{
    agglomerate, make_representatives, recluster_subset, reduce, ward_dist, Cluster, Partition,
};
pub use error::{Error, Result};
pub use feedback::{
    baseline_sweep, run_feedback, FeedbackConfig, FeedbackOutcome, FeedbackTrace, LoopRecord,
};
pub use lp::{LpBackend, LpError, LpProblem, LpSolution, MicrolpBackend};
pub use metrics::{build_report, check_bounds, BoundVerdicts, ErrorReport, Verdict};
pub use opcost::{build_daily_lp, AuditedDispatch, DailyDispatch, OpCostResult, OpEvaluator};
pub use scenario::{
    normalize, segment_days, to_full_set, DayProfile, Entry, HourlySeries, ScenarioSet, SetKind,
    FEATURE_LEN, HOURS_PER_DAY,
};
pub use solve::{evaluate_fixed, plan, reference_solution, PlanOptions, PlanResult};
pub use sysmodel::{
    enumerate_decisions, invest_cost, validate, InvestmentDecision, SystemModel, DEFAULT_ENUM_LIMIT,
};
