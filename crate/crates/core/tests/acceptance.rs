//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdagg::synth::{four_bus, six_bus, synthetic_full_set, three_bus, SeriesSpec};
use rdagg::*;

const UNDER_EST_REL: f64 = 1e-6;
const BOUND_REL: f64 = 1e-6;
const PER_RD_REL: f64 = 1e-6;
const EXACT_REL: f64 = 1e-9;
const LP_REL: f64 = 1e-8;
const RESIDUAL_MW: f64 = 1e-6;
const FEEDBACK_GAIN: f64 = 0.10;
const IMBALANCE_FACTOR: f64 = 5.0;
const RUNTIME_LIMIT: Duration = Duration::from_secs(300);

type Outcome = std::result::Result<String, String>;

struct Fixture {
    name: &'static str,
    model: SystemModel,
    full: ScenarioSet,
}

fn fixtures() -> Vec<Fixture> {
    let make = |name, model, spec| Fixture {
        name,
        model,
        full: synthetic_full_set(spec).unwrap(),
    };
    vec![
        make("3-bus/30d", three_bus(30.0), SeriesSpec::new(30, 4, 1)),
        make("4-bus/20d", four_bus(20.0), SeriesSpec::new(20, 3, 2)),
        make("6-bus/20d", six_bus(20.0), SeriesSpec::new(20, 4, 3)),
    ]
}

fn err(e: Error) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Weighted operational cost from per-entry daily optima.
fn weighted_cost(ev: &OpEvaluator<'_>, x: &InvestmentDecision, set: &ScenarioSet) -> Result<f64> {
    let daily = ev.entry_costs(x, set)?;
    Ok(set
        .entries
        .iter()
        .zip(daily)
        .map(|(e, c)| e.weight * c)
        .sum())
}

/// Reduced operational cost minus full operational cost, and the latter.
fn estimation(
    ev: &OpEvaluator<'_>,
    x: &InvestmentDecision,
    full: &ScenarioSet,
    reduced: &ScenarioSet,
) -> Result<(f64, f64)> {
    let c_full = weighted_cost(ev, x, full)?;
    Ok((weighted_cost(ev, x, reduced)? - c_full, c_full))
}

fn under_estimation(fx: &[Fixture]) -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    let mut worst = f64::NEG_INFINITY;
    for f in fx {
        let ev = OpEvaluator::new(&f.model).map_err(err)?;
        let decisions = enumerate_decisions(&f.model, DEFAULT_ENUM_LIMIT).map_err(err)?;
        for k in [2, 5, 10] {
            let (_, reduced) = reduce(&f.full, k).map_err(err)?;
            for x in &decisions {
                let (d, c_full) = estimation(&ev, x, &f.full, &reduced).map_err(err)?;
                ensure(d <= UNDER_EST_REL * c_full, || {
                    format!(
                        "{} K={k} x={x}: estimation error {d:.6e} > {UNDER_EST_REL}*{c_full:.6e}",
                        f.name
                    )
                })?;
                worst = worst.max(d / c_full);
                checks += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < RUNTIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{checks} (fixture, K, x) checks, max relative error {worst:.3e}, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

struct Run {
    fixture: &'static str,
    label: String,
    report: ErrorReport,
    reduced_decision: InvestmentDecision,
    reference: PlanResult,
}

/// Direct clustering at several counts plus one feedback run per fixture.
fn pipeline_runs(fx: &[Fixture]) -> Result<Vec<Run>> {
    let mut runs = Vec::new();
    for f in fx {
        let ev = OpEvaluator::new(&f.model)?;
        let reference = plan(&ev, &f.full, PlanOptions::default())?;
        for k in [1, 2, 3, 5, 8, 10] {
            let (_, reduced) = reduce(&f.full, k)?;
            let p = plan(&ev, &reduced, PlanOptions::default())?;
            runs.push(Run {
                fixture: f.name,
                label: format!("K={k}"),
                report: build_report(&ev, &f.full, &reduced, &p, Some(&reference))?,
                reduced_decision: p.decision,
                reference: reference.clone(),
            });
        }
        let cfg = FeedbackConfig {
            n0: 2,
            n_loop: 3,
            n_step: 1,
            n_bad: 1,
        };
        let out = run_feedback(&ev, &f.full, cfg, PlanOptions::default(), Some(&reference))?;
        for (i, (report, p)) in out.reports.into_iter().zip(out.plans).enumerate() {
            runs.push(Run {
                fixture: f.name,
                label: format!("feedback loop {i}"),
                report,
                reduced_decision: p.decision,
                reference: reference.clone(),
            });
        }
    }
    Ok(runs)
}

/// Recomputes the errors of a run from plain cost evaluations.
struct Recomputed {
    decision: f64,
    est: f64,
    est_ref: f64,
    simplification: f64,
    tol: f64,
}

fn recompute(f: &Fixture, run: &Run) -> Result<Recomputed> {
    let ev = OpEvaluator::new(&f.model)?;
    let r = &run.report;
    let x = &run.reduced_decision;
    let x_star = &run.reference.decision;
    let reduced = rebuild_reduced(f, r)?;
    let c_full_xhat = invest_cost(&f.model, x)? + weighted_cost(&ev, x, &f.full)?;
    let (est, _) = estimation(&ev, x, &f.full, &reduced)?;
    let (est_ref, _) = estimation(&ev, x_star, &f.full, &reduced)?;
    let c_red_xhat = invest_cost(&f.model, x)? + weighted_cost(&ev, x, &reduced)?;
    Ok(Recomputed {
        decision: c_full_xhat - run.reference.total_cost,
        est,
        est_ref,
        simplification: c_red_xhat - run.reference.total_cost,
        tol: BOUND_REL * run.reference.total_cost.abs(),
    })
}

/// Rebuilds the reduced set of a report from its per-day assignment.
fn rebuild_reduced(f: &Fixture, r: &ErrorReport) -> Result<ScenarioSet> {
    let mut groups = vec![Vec::new(); r.rd_count];
    for d in &r.per_day_errors {
        groups[d.rd].push(d.day_id);
    }
    let index = f.full.day_index();
    let entries = groups
        .iter()
        .map(|g| {
            let dim = f.full.dim();
            let mut mean = vec![0.0; dim];
            let mut w = 0.0;
            for d in g {
                let e = &f.full.entries[index[d]];
                w += e.weight;
                for (m, v) in mean.iter_mut().zip(&e.features) {
                    *m += e.weight * v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= w);
            Entry {
                weight: w,
                features: mean,
            }
        })
        .collect();
    ScenarioSet::new(SetKind::Reduced, entries, groups)
}

fn fixture_of<'a>(fx: &'a [Fixture], name: &str) -> &'a Fixture {
    fx.iter().find(|f| f.name == name).unwrap()
}

fn practical_bound(fx: &[Fixture], runs: &[Run]) -> Outcome {
    for run in runs {
        let c = recompute(fixture_of(fx, run.fixture), run).map_err(err)?;
        ensure(c.decision >= -c.tol && c.decision <= -c.est + c.tol, || {
            format!(
                "{} {}: decision error {:.6e} outside [0, {:.6e}]",
                run.fixture, run.label, c.decision, -c.est
            )
        })?;
        ensure(run.report.bounds.practical.pass, || {
            format!("{} {}: report verdict fails", run.fixture, run.label)
        })?;
    }
    Ok(format!("{} pipeline runs", runs.len()))
}

fn general_bound_and_chain(fx: &[Fixture], runs: &[Run]) -> Outcome {
    for run in runs {
        let c = recompute(fixture_of(fx, run.fixture), run).map_err(err)?;
        ensure(c.decision <= c.est_ref - c.est + c.tol, || {
            format!(
                "{} {}: decision error {:.6e} > {:.6e}",
                run.fixture,
                run.label,
                c.decision,
                c.est_ref - c.est
            )
        })?;
        ensure(c.est <= c.est_ref + c.tol && c.est_ref <= c.tol, || {
            format!(
                "{} {}: chain broken: {:.6e}, {:.6e}",
                run.fixture, run.label, c.est, c.est_ref
            )
        })?;
        let b = &run.report.bounds;
        ensure(b.general.pass && b.chain.pass, || {
            format!("{} {}: report verdict fails", run.fixture, run.label)
        })?;
    }
    Ok(format!("{} pipeline runs", runs.len()))
}

fn identity(fx: &[Fixture], runs: &[Run]) -> Outcome {
    let mut worst: f64 = 0.0;
    for run in runs {
        let c = recompute(fixture_of(fx, run.fixture), run).map_err(err)?;
        let res = (c.decision - (c.simplification - c.est)).abs();
        let reported = run.report.identity_residual().ok_or("incomplete report")?;
        ensure(res <= c.tol && reported <= c.tol, || {
            format!(
                "{} {}: residual {res:.3e} / reported {reported:.3e}",
                run.fixture, run.label
            )
        })?;
        worst = worst.max(reported / run.reference.total_cost);
    }
    Ok(format!(
        "{} reports, max relative residual {worst:.3e}",
        runs.len()
    ))
}

fn degenerate(fx: &[Fixture]) -> Outcome {
    for f in fx {
        let ev = OpEvaluator::new(&f.model).map_err(err)?;
        let reference = plan(&ev, &f.full, PlanOptions::default()).map_err(err)?;
        let (_, reduced) = reduce(&f.full, f.full.len()).map_err(err)?;
        let p = plan(&ev, &reduced, PlanOptions::default()).map_err(err)?;
        let r = build_report(&ev, &f.full, &reduced, &p, Some(&reference)).map_err(err)?;
        let tol = EXACT_REL * reference.total_cost;
        let errs = [
            r.simplification_error.unwrap(),
            r.decision_error.unwrap(),
            r.op_estimation_error,
        ];
        ensure(errs.iter().all(|e| e.abs() <= tol), || {
            format!("{}: errors {errs:?}", f.name)
        })?;
        ensure(p.decision == reference.decision, || {
            format!(
                "{}: x̂ = {} but x* = {}",
                f.name, p.decision, reference.decision
            )
        })?;
    }
    Ok(format!("{} fixtures at K = |D|", fx.len()))
}

fn per_rd(fx: &[Fixture], runs: &[Run]) -> Outcome {
    let mut singletons = 0;
    for run in runs {
        let f = fixture_of(fx, run.fixture);
        let r = &run.report;
        let sum: f64 = r.per_rd_errors.iter().map(|e| e.error).sum();
        let scale = r
            .op_estimation_error
            .abs()
            .max(BOUND_REL * run.reference.total_cost);
        ensure(
            (sum - r.op_estimation_error).abs() <= PER_RD_REL * scale,
            || {
                format!(
                    "{} {}: sum {sum:.9e} vs {:.9e}",
                    run.fixture, run.label, r.op_estimation_error
                )
            },
        )?;
        let reduced = rebuild_reduced(f, r).map_err(err)?;
        for (k, members) in reduced.provenance.iter().enumerate() {
            if members.len() == 1 {
                singletons += 1;
                ensure(r.per_rd_errors[k].error == 0.0, || {
                    format!(
                        "{} {}: singleton {k} has error {:e}",
                        run.fixture, run.label, r.per_rd_errors[k].error
                    )
                })?;
            }
        }
    }
    ensure(singletons > 0, || "no singleton clusters exercised".into())?;
    Ok(format!(
        "{} reports, {singletons} singleton clusters",
        runs.len()
    ))
}

fn feedback_efficacy(fx: &[Fixture]) -> Outcome {
    let cfg = FeedbackConfig {
        n0: 2,
        n_loop: 3,
        n_step: 1,
        n_bad: 1,
    };
    let mut lines = Vec::new();
    let mut strict = false;
    for f in fx {
        let ev = OpEvaluator::new(&f.model).map_err(err)?;
        let out = run_feedback(&ev, &f.full, cfg, PlanOptions::default(), None).map_err(err)?;
        let fb_plan = out.plans.last().unwrap();
        let (fb, _) = estimation(&ev, &fb_plan.decision, &f.full, &out.final_set).map_err(err)?;

        let (_, base_set) = reduce(&f.full, cfg.final_count()).map_err(err)?;
        let base_plan = plan(&ev, &base_set, PlanOptions::default()).map_err(err)?;
        let (base, _) = estimation(&ev, &base_plan.decision, &f.full, &base_set).map_err(err)?;

        let tol = BOUND_REL * base_plan.total_cost;
        ensure(fb.abs() <= base.abs() + tol, || {
            format!(
                "{}: feedback {:.1} worse than baseline {:.1}",
                f.name,
                fb.abs(),
                base.abs()
            )
        })?;
        strict |= base.abs() - fb.abs() > FEEDBACK_GAIN * base.abs();
        lines.push(format!("{} {:.0} vs {:.0}", f.name, fb.abs(), base.abs()));
    }
    ensure(strict, || {
        format!(
            "no fixture improves by > {FEEDBACK_GAIN}: {}",
            lines.join(", ")
        )
    })?;
    Ok(format!(
        "|estimation error| at {} RDs, feedback vs direct: {}",
        cfg.final_count(),
        lines.join("; ")
    ))
}

fn imbalance(fx: &[Fixture]) -> Outcome {
    let f = &fx[0];
    let k = 5;
    let ev = OpEvaluator::new(&f.model).map_err(err)?;
    let (_, reduced) = reduce(&f.full, k).map_err(err)?;
    let p = plan(&ev, &reduced, PlanOptions::default()).map_err(err)?;
    let index = f.full.day_index();
    let mut errs: Vec<f64> = reduced
        .entries
        .iter()
        .zip(&reduced.provenance)
        .enumerate()
        .map(|(i, (e, members))| {
            let rd = e.weight * ev.day_cost(&p.decision, &e.features, i)?;
            let days: f64 = members
                .iter()
                .map(|d| {
                    let de = &f.full.entries[index[d]];
                    Ok(de.weight * ev.day_cost(&p.decision, &de.features, *d)?)
                })
                .sum::<Result<f64>>()?;
            Ok((rd - days).abs())
        })
        .collect::<Result<_>>()
        .map_err(err)?;
    errs.sort_by(|a, b| a.total_cmp(b));
    let (max, median) = (errs[errs.len() - 1], errs[errs.len() / 2]);
    let factor = max / median;
    ensure(factor >= IMBALANCE_FACTOR, || {
        format!("{}: max/median = {factor:.2}", f.name)
    })?;
    Ok(format!(
        "{} K={k}: max {max:.0}, median {median:.0}, factor {factor:.2}",
        f.name
    ))
}

/// Greedy merging recomputed from scratch at every step.
fn naive_agglomerate(points: &[Vec<f64>], k: usize) -> BTreeSet<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let centroid = |c: &[usize]| -> Vec<f64> {
        let mut s = vec![0.0; points[0].len()];
        for &i in c {
            for (a, b) in s.iter_mut().zip(&points[i]) {
                *a += b;
            }
        }
        s.iter().map(|v| v / c.len() as f64).collect()
    };
    while clusters.len() > k {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in 0..clusters.len() {
                if a == b {
                    continue;
                }
                let (ca, cb) = (centroid(&clusters[a]), centroid(&clusters[b]));
                let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
                let sq: f64 = ca.iter().zip(&cb).map(|(x, y)| (x - y).powi(2)).sum();
                let d = 2.0 * na * nb / (na + nb) * sq;
                let ma = *clusters[a].iter().min().unwrap();
                let mb = *clusters[b].iter().min().unwrap();
                let key = (ma.min(mb), ma.max(mb));
                if best.is_none_or(|(bd, bk, _, _)| d < bd || (d == bd && key < bk)) {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (_, _, a, b) = best.unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let merged = clusters.remove(hi);
        clusters[lo].extend(merged);
        clusters[lo].sort_unstable();
    }
    clusters.into_iter().collect()
}

fn clustering_oracle() -> Outcome {
    let mut instances = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for n in 1..=10 {
            let dim = rng.gen_range(1..=4);
            let grid = seed % 2 == 0;
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..dim)
                        .map(|_| {
                            if grid {
                                rng.gen_range(0..3) as f64
                            } else {
                                rng.gen_range(0.0..1.0)
                            }
                        })
                        .collect()
                })
                .collect();
            let entries = points
                .iter()
                .map(|p| Entry {
                    weight: rng.gen_range(0.5..3.0),
                    features: p.clone(),
                })
                .collect();
            let set = ScenarioSet::new(SetKind::Full, entries, (0..n).map(|i| vec![i]).collect())
                .map_err(err)?;
            for k in 1..=n {
                let got: BTreeSet<Vec<usize>> = agglomerate(&set, k)
                    .map_err(err)?
                    .clusters
                    .into_iter()
                    .map(|c| c.members)
                    .collect();
                let want = naive_agglomerate(&points, k);
                ensure(got == want, || {
                    format!("seed {seed} n={n} k={k}: {got:?} != {want:?}")
                })?;
                instances += 1;
            }
        }
    }
    Ok(format!("{instances} (seed, n, k) instances"))
}

fn flat(load: f64, wind: f64) -> Vec<f64> {
    let mut f = vec![load; HOURS_PER_DAY];
    f.extend(vec![wind; HOURS_PER_DAY]);
    f
}

fn check_audit(a: &AuditedDispatch, what: &str) -> std::result::Result<(), String> {
    let (bal, flow, neg) = (
        a.max_balance_residual(),
        a.max_flow_excess(),
        a.max_negativity(),
    );
    ensure(
        bal <= RESIDUAL_MW && flow <= RESIDUAL_MW && neg <= RESIDUAL_MW,
        || format!("{what}: balance {bal:.3e}, flow excess {flow:.3e}, negativity {neg:.3e}"),
    )
}

fn dc_opf(fx: &[Fixture]) -> Outcome {
    let model = |v: serde_json::Value| -> std::result::Result<SystemModel, String> {
        serde_json::from_value(v).map_err(|e| e.to_string())
    };
    let one_bus = |peak: f64| {
        model(serde_json::json!({
            "buses": [1], "existing_lines": [],
            "thermal_units": [{"bus": 1, "p_max": 100.0, "marginal_cost": 10.0, "ramp": 1000.0}],
            "loads": [{"bus": 1, "peak": peak}], "voll": 1000.0, "reference_bus": 1
        }))
    };
    let two_bus = model(serde_json::json!({
        "buses": [1, 2],
        "existing_lines": [{"from": 1, "to": 2, "susceptance": 10.0, "capacity": 60.0}],
        "thermal_units": [
            {"bus": 1, "p_max": 200.0, "marginal_cost": 10.0, "ramp": 500.0},
            {"bus": 2, "p_max": 200.0, "marginal_cost": 50.0, "ramp": 500.0}
        ],
        "loads": [{"bus": 2, "peak": 100.0}], "voll": 1000.0, "reference_bus": 1
    }))?;
    let cases = [
        (
            "1-bus served",
            one_bus(100.0)?,
            flat(0.5, 0.0),
            24.0 * 50.0 * 10.0,
        ),
        (
            "1-bus shedding",
            one_bus(120.0)?,
            flat(1.0, 0.0),
            24.0 * (100.0 * 10.0 + 20.0 * 1000.0),
        ),
        (
            "2-bus congested",
            two_bus,
            flat(1.0, 0.0),
            24.0 * (60.0 * 10.0 + 40.0 * 50.0),
        ),
    ];
    for (name, m, feat, want) in &cases {
        let ev = OpEvaluator::new(m).map_err(err)?;
        let a = ev
            .dispatch(&InvestmentDecision::none(m), feat, 0)
            .map_err(err)?;
        let rel = (a.dispatch.cost - want).abs() / want;
        ensure(rel <= LP_REL, || {
            format!("{name}: cost {} vs {want}", a.dispatch.cost)
        })?;
        check_audit(&a, name)?;
    }

    let mut audited = 0;
    for f in fx {
        let ev = OpEvaluator::new(&f.model).map_err(err)?;
        let (_, reduced) = reduce(&f.full, 5).map_err(err)?;
        for x in enumerate_decisions(&f.model, DEFAULT_ENUM_LIMIT).map_err(err)? {
            for set in [&f.full, &reduced] {
                for (i, e) in set.entries.iter().enumerate() {
                    let a = ev.dispatch(&x, &e.features, i).map_err(err)?;
                    check_audit(&a, &format!("{} x={x} entry {i}", f.name))?;
                    audited += 1;
                }
            }
        }
    }
    Ok(format!(
        "{} hand LPs, {audited} fixture dispatches audited",
        cases.len()
    ))
}

fn pruning(fx: &[Fixture]) -> Outcome {
    let mut plans = 0;
    for f in fx {
        ensure(f.model.candidate_count() <= 8, || {
            format!("{} has too many candidates", f.name)
        })?;
        let ev = OpEvaluator::new(&f.model).map_err(err)?;
        let sets = [
            f.full.clone(),
            reduce(&f.full, 2).map_err(err)?.1,
            reduce(&f.full, 5).map_err(err)?.1,
        ];
        for set in &sets {
            let a = plan(&ev, set, PlanOptions::default()).map_err(err)?;
            let b = plan(
                &ev,
                set,
                PlanOptions {
                    prune: false,
                    ..Default::default()
                },
            )
            .map_err(err)?;
            ensure(
                a.decision == b.decision && a.total_cost == b.total_cost,
                || {
                    format!(
                        "{}: pruned {} {} vs unpruned {} {}",
                        f.name, a.bits, a.total_cost, b.bits, b.total_cost
                    )
                },
            )?;
            plans += 1;
        }
    }
    Ok(format!("{plans} plan pairs identical"))
}

fn main() {
    let fx = fixtures();
    let runs = pipeline_runs(&fx).map_err(err);
    let with_runs = |f: fn(&[Fixture], &[Run]) -> Outcome| match &runs {
        Ok(r) => f(&fx, r),
        Err(e) => Err(format!("pipeline failed: {e}")),
    };

    let results: Vec<(&str, Outcome)> = vec![
        (
            "1 under-estimation with mean-based representatives",
            under_estimation(&fx),
        ),
        (
            "2 practical decision-error bound",
            with_runs(practical_bound),
        ),
        (
            "3 general bound and estimation-error chain",
            with_runs(general_bound_and_chain),
        ),
        ("4 error identity", with_runs(identity)),
        ("5 singleton clustering is exact", degenerate(&fx)),
        ("6 per-representative decomposition", with_runs(per_rd)),
        ("7 feedback efficacy", feedback_efficacy(&fx)),
        ("8 per-representative error imbalance", imbalance(&fx)),
        (
            "9 clustering matches naive greedy oracle",
            clustering_oracle(),
        ),
        ("10 DC-OPF hand solutions and residuals", dc_opf(&fx)),
        ("11 pruning soundness", pruning(&fx)),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
