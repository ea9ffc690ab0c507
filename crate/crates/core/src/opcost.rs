//! Daily DC optimal power flow for a fixed investment decision, and the
//! weighted operational cost of a scenario set.
//!
//! A day's load and wind factors only enter the LP through right-hand
//! sides; every matrix, bound and cost depends on the model and decision
//! alone. Days are solved independently: ramping couples hours within a day
//! but the first hour of each day is free.

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{LpBackend, LpProblem, MicrolpBackend, RowOp};
use crate::scenario::{ScenarioSet, FEATURE_LEN, HOURS_PER_DAY};
use crate::sysmodel::{InvestmentDecision, SystemModel};

const H: usize = HOURS_PER_DAY;

/// A line present in the daily network: every existing line plus built candidates.
#[derive(Debug, Clone, Copy)]
struct ActiveLine {
    from: usize,
    to: usize,
    susceptance: f64,
    capacity: f64,
}

/// Variable and row indices of one daily LP.
#[derive(Debug, Clone)]
pub struct DailyLayout {
    gen: Vec<[usize; H]>,
    wind: Vec<[usize; H]>,
    curtail: Vec<[usize; H]>,
    theta: Vec<[usize; H]>,
    flow: Vec<[usize; H]>,
    shed: Vec<[usize; H]>,
    lines: Vec<ActiveLine>,
    gen_bus: Vec<usize>,
    wind_bus: Vec<usize>,
    bus_peak: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DailyLp {
    pub problem: LpProblem,
    pub layout: DailyLayout,
}

fn check_features(features: &[f64]) -> Result<()> {
    if features.len() != FEATURE_LEN {
        return Err(Error::Dimension(format!(
            "day feature vector has {} entries, expected {FEATURE_LEN}",
            features.len()
        )));
    }
    Ok(())
}

fn hourly(p: &mut LpProblem, cost: f64, lo: f64, hi: f64) -> [usize; H] {
    std::array::from_fn(|_| p.add_var(cost, lo, hi))
}

/// Builds the 24-hour DC-OPF LP of one day.
pub fn build_daily_lp(
    m: &SystemModel,
    x: &InvestmentDecision,
    features: &[f64],
) -> Result<DailyLp> {
    x.check_dims(m)?;
    check_features(features)?;
    let (load_f, wind_f) = features.split_at(H);
    let idx = m.bus_index();
    let bus = |b| {
        idx.get(&b)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown bus {b}")))
    };
    let nb = m.buses.len();
    let reference = bus(m.reference_bus)?;

    let mut lines = Vec::new();
    let built = m
        .candidate_lines
        .iter()
        .zip(&x.line_built)
        .filter(|(_, &b)| b)
        .map(|(l, _)| l);
    for l in m.lines.iter().chain(built) {
        lines.push(ActiveLine {
            from: bus(l.from)?,
            to: bus(l.to)?,
            susceptance: l.susceptance,
            capacity: l.capacity,
        });
    }
    let mut bus_peak = vec![0.0; nb];
    for l in &m.loads {
        bus_peak[bus(l.bus)?] += l.peak;
    }
    let gen_bus = m
        .thermal
        .iter()
        .map(|g| bus(g.bus))
        .collect::<Result<Vec<_>>>()?;
    let wind_bus = m
        .candidate_wind
        .iter()
        .map(|w| bus(w.bus))
        .collect::<Result<Vec<_>>>()?;

    let mut p = LpProblem::default();
    let gen: Vec<_> = m
        .thermal
        .iter()
        .map(|g| hourly(&mut p, g.marginal_cost, g.p_min, g.p_max))
        .collect();
    let wind: Vec<_> = m
        .candidate_wind
        .iter()
        .map(|_| hourly(&mut p, 0.0, 0.0, f64::INFINITY))
        .collect();
    let curtail: Vec<_> = m
        .candidate_wind
        .iter()
        .map(|_| hourly(&mut p, m.curtail_price, 0.0, f64::INFINITY))
        .collect();
    let theta: Vec<_> = (0..nb)
        .map(|b| {
            if b == reference {
                hourly(&mut p, 0.0, 0.0, 0.0)
            } else {
                hourly(&mut p, 0.0, f64::NEG_INFINITY, f64::INFINITY)
            }
        })
        .collect();
    let flow: Vec<_> = lines
        .iter()
        .map(|l| hourly(&mut p, 0.0, -l.capacity, l.capacity))
        .collect();
    let shed: Vec<_> = (0..nb)
        .map(|_| hourly(&mut p, m.voll, 0.0, f64::INFINITY))
        .collect();

    for t in 0..H {
        for b in 0..nb {
            let mut row = vec![(shed[b][t], 1.0)];
            row.extend(
                gen_bus
                    .iter()
                    .zip(&gen)
                    .filter(|(&gb, _)| gb == b)
                    .map(|(_, v)| (v[t], 1.0)),
            );
            row.extend(
                wind_bus
                    .iter()
                    .zip(&wind)
                    .filter(|(&wb, _)| wb == b)
                    .map(|(_, v)| (v[t], 1.0)),
            );
            for (l, f) in lines.iter().zip(&flow) {
                if l.to == b {
                    row.push((f[t], 1.0));
                }
                if l.from == b {
                    row.push((f[t], -1.0));
                }
            }
            p.add_row(row, RowOp::Eq, bus_peak[b] * load_f[t]);
        }
        for (l, f) in lines.iter().zip(&flow) {
            p.add_row(
                vec![
                    (f[t], 1.0),
                    (theta[l.from][t], -l.susceptance),
                    (theta[l.to][t], l.susceptance),
                ],
                RowOp::Eq,
                0.0,
            );
        }
        for (w, farm) in m.candidate_wind.iter().enumerate() {
            let avail = if x.wind_built[w] {
                farm.capacity * wind_f[t]
            } else {
                0.0
            };
            p.add_row(
                vec![(wind[w][t], 1.0), (curtail[w][t], 1.0)],
                RowOp::Eq,
                avail,
            );
        }
    }
    for (g, unit) in m.thermal.iter().enumerate() {
        for t in 1..H {
            p.add_row(
                vec![(gen[g][t], 1.0), (gen[g][t - 1], -1.0)],
                RowOp::Le,
                unit.ramp,
            );
            p.add_row(
                vec![(gen[g][t - 1], 1.0), (gen[g][t], -1.0)],
                RowOp::Le,
                unit.ramp,
            );
        }
    }

    Ok(DailyLp {
        problem: p,
        layout: DailyLayout {
            gen,
            wind,
            curtail,
            theta,
            flow,
            shed,
            lines,
            gen_bus,
            wind_bus,
            bus_peak,
        },
    })
}

/// Optimal operation of one day. Outer index is the unit/farm/bus/line,
/// inner index the hour.
#[derive(Debug, Clone, Serialize)]
pub struct DailyDispatch {
    pub generation: Vec<Vec<f64>>,
    pub wind_output: Vec<Vec<f64>>,
    pub curtailed: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
    pub flows: Vec<Vec<f64>>,
    pub shed: Vec<Vec<f64>>,
    pub cost: f64,
    #[serde(skip)]
    demand: Vec<Vec<f64>>,
    #[serde(skip)]
    capacity: Vec<f64>,
    #[serde(skip)]
    net_import: Vec<Vec<f64>>,
}

impl DailyDispatch {
    fn extract(lp: &DailyLp, values: &[f64], cost: f64, load_f: &[f64]) -> Self {
        let l = &lp.layout;
        let take = |vars: &[[usize; H]]| -> Vec<Vec<f64>> {
            vars.iter()
                .map(|v| v.iter().map(|&j| values[j]).collect())
                .collect()
        };
        let flows = take(&l.flow);
        let nb = l.bus_peak.len();
        let mut net_import = vec![vec![0.0; H]; nb];
        for (line, f) in l.lines.iter().zip(&flows) {
            for t in 0..H {
                net_import[line.to][t] += f[t];
                net_import[line.from][t] -= f[t];
            }
        }
        Self {
            generation: take(&l.gen),
            wind_output: take(&l.wind),
            curtailed: take(&l.curtail),
            angles: take(&l.theta),
            flows,
            shed: take(&l.shed),
            cost,
            demand: l
                .bus_peak
                .iter()
                .map(|&p| load_f.iter().map(|&f| p * f).collect())
                .collect(),
            capacity: l.lines.iter().map(|a| a.capacity).collect(),
            net_import,
        }
    }

    fn bus_injection(
        &self,
        layout_gen_bus: &[usize],
        layout_wind_bus: &[usize],
        b: usize,
        t: usize,
    ) -> (f64, f64) {
        let gen = layout_gen_bus
            .iter()
            .zip(&self.generation)
            .filter(|(&gb, _)| gb == b)
            .map(|(_, g)| g[t])
            .sum();
        let wind = layout_wind_bus
            .iter()
            .zip(&self.wind_output)
            .filter(|(&wb, _)| wb == b)
            .map(|(_, w)| w[t])
            .sum();
        (gen, wind)
    }

    pub fn net_import(&self) -> &[Vec<f64>] {
        &self.net_import
    }

    pub fn demand(&self) -> &[Vec<f64>] {
        &self.demand
    }
}

/// Dispatch together with the bus mapping needed to audit it.
#[derive(Debug, Clone)]
pub struct AuditedDispatch {
    pub dispatch: DailyDispatch,
    gen_bus: Vec<usize>,
    wind_bus: Vec<usize>,
}

impl AuditedDispatch {
    /// Largest |generation + wind + net import + shed - demand| over bus-hours.
    pub fn max_balance_residual(&self) -> f64 {
        let d = &self.dispatch;
        let mut worst: f64 = 0.0;
        for b in 0..d.demand.len() {
            for t in 0..H {
                let (g, w) = d.bus_injection(&self.gen_bus, &self.wind_bus, b, t);
                let r = g + w + d.net_import[b][t] + d.shed[b][t] - d.demand[b][t];
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Largest amount by which any |flow| exceeds its line capacity (0 if none).
    pub fn max_flow_excess(&self) -> f64 {
        let d = &self.dispatch;
        d.flows
            .iter()
            .zip(&d.capacity)
            .flat_map(|(f, &c)| f.iter().map(move |v| v.abs() - c))
            .fold(0.0, f64::max)
    }

    /// Most negative value among generation, wind, shed and curtailment (0 if none).
    pub fn max_negativity(&self) -> f64 {
        let d = &self.dispatch;
        [&d.generation, &d.wind_output, &d.shed, &d.curtailed]
            .into_iter()
            .flatten()
            .flatten()
            .fold(0.0, |acc: f64, &v| acc.max(-v))
    }

    pub fn gen_bus(&self) -> &[usize] {
        &self.gen_bus
    }

    pub fn wind_bus(&self) -> &[usize] {
        &self.wind_bus
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OpCostResult {
    pub total: f64,
    /// Weighted cost of each scenario entry.
    pub per_entry: Vec<f64>,
}

type CacheKey = (InvestmentDecision, Vec<u64>);

/// Evaluates operational costs for one system, caching daily optima by
/// (decision, exact feature bits).
pub struct OpEvaluator<'m> {
    model: &'m SystemModel,
    backend: Arc<dyn LpBackend>,
    pool: Option<rayon::ThreadPool>,
    cache: Mutex<HashMap<CacheKey, f64>>,
    solves: AtomicUsize,
    hits: AtomicUsize,
}

impl std::fmt::Debug for OpEvaluator<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpEvaluator")
            .field("backend", &self.backend.capabilities().name)
            .field("solves", &self.solves.load(Ordering::Relaxed))
            .field("hits", &self.hits.load(Ordering::Relaxed))
            .finish()
    }
}

impl<'m> OpEvaluator<'m> {
    /// Evaluator on the default backend using the global rayon pool.
    pub fn new(model: &'m SystemModel) -> Result<Self> {
        Self::with_backend(model, Arc::new(MicrolpBackend), None)
    }

    /// `jobs = Some(n)` runs daily solves on a dedicated pool of `n` threads.
    pub fn with_backend(
        model: &'m SystemModel,
        backend: Arc<dyn LpBackend>,
        jobs: Option<usize>,
    ) -> Result<Self> {
        model.validated()?;
        let pool = match jobs {
            Some(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Argument(format!("thread pool: {e}")))?,
            ),
            None => None,
        };
        Ok(Self {
            model,
            backend,
            pool,
            cache: Mutex::new(HashMap::new()),
            solves: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        })
    }

    pub fn model(&self) -> &SystemModel {
        self.model
    }

    /// (LP solves, cache hits) so far.
    pub fn stats(&self) -> (usize, usize) {
        (
            self.solves.load(Ordering::Relaxed),
            self.hits.load(Ordering::Relaxed),
        )
    }

    fn solve_lp(
        &self,
        x: &InvestmentDecision,
        features: &[f64],
        day: usize,
    ) -> Result<(DailyLp, Vec<f64>, f64)> {
        let lp = build_daily_lp(self.model, x, features)?;
        let sol = self
            .backend
            .solve(&lp.problem)
            .map_err(|source| Error::Backend {
                day,
                context: format!("decision {x}"),
                source,
            })?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        Ok((lp, sol.values, sol.objective))
    }

    /// Optimal (unweighted) cost of one day. `day` only labels errors.
    pub fn day_cost(&self, x: &InvestmentDecision, features: &[f64], day: usize) -> Result<f64> {
        let key = (x.clone(), features.iter().map(|v| v.to_bits()).collect());
        if let Some(&c) = self.cache.lock().unwrap().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(c);
        }
        let (_, _, cost) = self.solve_lp(x, features, day)?;
        self.cache.lock().unwrap().insert(key, cost);
        Ok(cost)
    }

    /// Solves one day and returns its full dispatch.
    pub fn dispatch(
        &self,
        x: &InvestmentDecision,
        features: &[f64],
        day: usize,
    ) -> Result<AuditedDispatch> {
        let (lp, values, cost) = self.solve_lp(x, features, day)?;
        let dispatch = DailyDispatch::extract(&lp, &values, cost, &features[..H]);
        Ok(AuditedDispatch {
            dispatch,
            gen_bus: lp.layout.gen_bus,
            wind_bus: lp.layout.wind_bus,
        })
    }

    fn run<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Unweighted optimal cost of every entry, in entry order.
    pub fn entry_costs(&self, x: &InvestmentDecision, set: &ScenarioSet) -> Result<Vec<f64>> {
        x.check_dims(self.model)?;
        self.run(|| {
            set.entries
                .par_iter()
                .zip(set.provenance.par_iter())
                .map(|(e, p)| self.day_cost(x, &e.features, p[0]))
                .collect()
        })
    }

    /// Weighted operational cost of a scenario set; totals are summed in entry order.
    pub fn op_cost(&self, x: &InvestmentDecision, set: &ScenarioSet) -> Result<OpCostResult> {
        let costs = self.entry_costs(x, set)?;
        let per_entry: Vec<f64> = set
            .entries
            .iter()
            .zip(&costs)
            .map(|(e, c)| e.weight * c)
            .collect();
        let total = per_entry.iter().sum();
        Ok(OpCostResult { total, per_entry })
    }

    /// For each representative k: (ŵ_k · cost(T̂_k), Σ_{d in cluster k} w_d · cost(T_d)).
    pub fn per_cluster_costs(
        &self,
        x: &InvestmentDecision,
        full: &ScenarioSet,
        reduced: &ScenarioSet,
    ) -> Result<Vec<(f64, f64)>> {
        reduced.check_partitions(full)?;
        let rd = self.op_cost(x, reduced)?;
        let days = self.op_cost(x, full)?;
        let index = full.day_index();
        Ok(reduced
            .provenance
            .iter()
            .zip(rd.per_entry)
            .map(|(members, rd_cost)| {
                let member_cost = members.iter().map(|d| days.per_entry[index[d]]).sum();
                (rd_cost, member_cost)
            })
            .collect())
    }
}

/// Writes a per bus-hour dispatch table:
/// `day,hour,bus,gen,wind,shed,net_import,load`.
pub fn write_dispatch_csv<W: Write>(
    w: W,
    model: &SystemModel,
    days: &[(usize, &AuditedDispatch)],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "day",
        "hour",
        "bus",
        "gen",
        "wind",
        "shed",
        "net_import",
        "load",
    ])?;
    for (day, a) in days {
        let d = &a.dispatch;
        for t in 0..H {
            for (b, id) in model.buses.iter().enumerate() {
                let (g, wv) = d.bus_injection(&a.gen_bus, &a.wind_bus, b, t);
                wtr.write_record([
                    day.to_string(),
                    t.to_string(),
                    id.to_string(),
                    g.to_string(),
                    wv.to_string(),
                    d.shed[b][t].to_string(),
                    d.net_import[b][t].to_string(),
                    d.demand[b][t].to_string(),
                ])?;
            }
        }
    }
    wtr.flush().map_err(|e| Error::io("<dispatch csv>", e))?;
    Ok(())
}
