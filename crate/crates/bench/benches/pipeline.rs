use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use rdagg::synth::{six_bus, synthetic_full_set, three_bus, SeriesSpec};
use rdagg::{
    agglomerate, build_daily_lp, plan, reduce, InvestmentDecision, LpBackend, MicrolpBackend,
    OpEvaluator, PlanOptions,
};

fn clustering(c: &mut Criterion) {
    let year = synthetic_full_set(SeriesSpec::new(365, 20, 1)).unwrap();
    c.bench_function("agglomerate 365 days to 20", |b| {
        b.iter(|| agglomerate(black_box(&year), 20).unwrap())
    });
}

fn daily_lp(c: &mut Criterion) {
    let m = six_bus(365.0);
    let day = synthetic_full_set(SeriesSpec::new(1, 0, 2)).unwrap();
    let x = InvestmentDecision::from_bits(&m, "111111").unwrap();
    let lp = build_daily_lp(&m, &x, &day.entries[0].features).unwrap();
    c.bench_function("daily DC-OPF, 6 buses", |b| {
        b.iter(|| MicrolpBackend.solve(black_box(&lp.problem)).unwrap())
    });
}

fn planning(c: &mut Criterion) {
    let m = three_bus(30.0);
    let full = synthetic_full_set(SeriesSpec::new(30, 4, 1)).unwrap();
    let (_, reduced) = reduce(&full, 5).unwrap();
    c.bench_function("plan 3-bus on 5 representatives", |b| {
        b.iter_batched(
            || OpEvaluator::new(&m).unwrap(),
            |ev| plan(&ev, &reduced, PlanOptions::default()).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = clustering, daily_lp, planning
}
criterion_main!(benches);
