//! Seeded synthetic inputs: hourly load/wind years and small test systems.
//!
//! All values here are invented for testing and demonstration; none of them
//! describe a real network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::scenario::{
    normalize, segment_days, to_full_set, HourlySeries, ScenarioSet, HOURS_PER_DAY,
};
use crate::sysmodel::{Line, Load, SystemModel, ThermalGen, WindFarm};

/// Shape of a synthetic time series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesSpec {
    pub days: usize,
    /// Number of days with distinctly elevated load.
    pub peak_days: usize,
    /// Peak-day load level relative to the typical daily level.
    pub peak_level: f64,
    pub seed: u64,
}

impl SeriesSpec {
    pub fn new(days: usize, peak_days: usize, seed: u64) -> Self {
        Self {
            days,
            peak_days,
            peak_level: 1.6,
            seed,
        }
    }
}

fn load_shape(h: usize) -> f64 {
    let t = h as f64;
    0.75 + 0.15 * (-(t - 9.0).powi(2) / 8.0).exp() + 0.25 * (-(t - 19.0).powi(2) / 6.0).exp()
}

/// Raw (un-normalized) hourly load [MW] and wind [MW] series.
pub fn synthetic_series(spec: SeriesSpec) -> Result<(HourlySeries, HourlySeries)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut peak = vec![false; spec.days];
    let mut placed = 0;
    while placed < spec.peak_days.min(spec.days) {
        let d = rng.gen_range(0..spec.days);
        if !peak[d] {
            peak[d] = true;
            placed += 1;
        }
    }
    let mut load = Vec::with_capacity(spec.days * HOURS_PER_DAY);
    let mut wind = Vec::with_capacity(spec.days * HOURS_PER_DAY);
    for (d, &is_peak) in peak.iter().enumerate() {
        let season = 1.0 + 0.1 * (d as f64 * std::f64::consts::TAU / 365.0).cos();
        let level = if is_peak {
            spec.peak_level * rng.gen_range(0.97..1.03)
        } else {
            rng.gen_range(0.85..1.05)
        };
        let wind_level: f64 = rng.gen_range(0.1..0.8);
        let wind_phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        for h in 0..HOURS_PER_DAY {
            let noise: f64 = rng.gen_range(-0.02..0.02);
            load.push(1000.0 * season * level * (load_shape(h) + noise));
            let swing = 0.25 * (h as f64 * std::f64::consts::TAU / 24.0 + wind_phase).sin();
            let w: f64 = wind_level * (1.0 + swing) + rng.gen_range(-0.03..0.03);
            wind.push(500.0 * w.clamp(0.0, 1.0));
        }
    }
    Ok((
        HourlySeries::new("load", load)?,
        HourlySeries::new("wind", wind)?,
    ))
}

/// Normalized, segmented full set for a synthetic series.
pub fn synthetic_full_set(spec: SeriesSpec) -> Result<ScenarioSet> {
    let (load, wind) = synthetic_series(spec)?;
    to_full_set(&segment_days(&normalize(&load)?, &normalize(&wind)?)?)
}

const LINE3: f64 = 16000.0;
const WIND3: f64 = 15000.0;

fn line(from: u32, to: u32, capacity: f64, invest_cost: f64) -> Line {
    Line {
        from,
        to,
        susceptance: 500.0,
        capacity,
        invest_cost,
    }
}

fn unit(bus: u32, p_max: f64, marginal_cost: f64, ramp: f64) -> ThermalGen {
    ThermalGen {
        bus,
        p_min: 0.0,
        p_max,
        marginal_cost,
        ramp,
    }
}

fn farm(bus: u32, capacity: f64, invest_cost: f64) -> WindFarm {
    WindFarm {
        bus,
        capacity,
        invest_cost,
    }
}

/// Three buses: cheap generation at bus 1 feeding load at bus 3 through
/// limited corridors, expensive local generation at bus 2.
/// Two candidates: a second 1-3 corridor and a wind farm at bus 3.
pub fn three_bus(days: f64) -> SystemModel {
    SystemModel {
        buses: vec![1, 2, 3],
        lines: vec![
            line(1, 2, 150.0, 0.0),
            line(2, 3, 120.0, 0.0),
            line(1, 3, 80.0, 0.0),
        ],
        candidate_lines: vec![line(1, 3, 100.0, days * LINE3)],
        thermal: vec![unit(1, 320.0, 20.0, 120.0), unit(2, 200.0, 70.0, 80.0)],
        candidate_wind: vec![farm(3, 80.0, days * WIND3)],
        loads: vec![
            Load { bus: 2, peak: 60.0 },
            Load {
                bus: 3,
                peak: 240.0,
            },
        ],
        voll: 1000.0,
        curtail_price: 0.0,
        reference_bus: 1,
    }
}

/// Four-bus ring with three unit types and four candidates.
pub fn four_bus(days: f64) -> SystemModel {
    SystemModel {
        buses: vec![1, 2, 3, 4],
        lines: vec![
            line(1, 2, 120.0, 0.0),
            line(2, 3, 120.0, 0.0),
            line(3, 4, 120.0, 0.0),
            line(4, 1, 120.0, 0.0),
        ],
        candidate_lines: vec![
            line(1, 3, 100.0, days * 900.0),
            line(2, 4, 80.0, days * 700.0),
        ],
        thermal: vec![
            unit(1, 250.0, 15.0, 100.0),
            unit(2, 150.0, 45.0, 60.0),
            unit(4, 120.0, 90.0, 120.0),
        ],
        candidate_wind: vec![farm(3, 90.0, days * 2200.0), farm(4, 60.0, days * 1800.0)],
        loads: vec![
            Load { bus: 2, peak: 80.0 },
            Load {
                bus: 3,
                peak: 220.0,
            },
            Load { bus: 4, peak: 90.0 },
        ],
        voll: 1500.0,
        curtail_price: 0.0,
        reference_bus: 1,
    }
}

/// Six buses with a weak link to a load pocket and six candidates.
pub fn six_bus(days: f64) -> SystemModel {
    SystemModel {
        buses: vec![1, 2, 3, 4, 5, 6],
        lines: vec![
            line(1, 2, 200.0, 0.0),
            line(2, 3, 150.0, 0.0),
            line(3, 4, 90.0, 0.0),
            line(4, 5, 120.0, 0.0),
            line(5, 6, 120.0, 0.0),
            line(6, 1, 150.0, 0.0),
            line(2, 5, 100.0, 0.0),
        ],
        candidate_lines: vec![
            line(1, 4, 100.0, days * 1100.0),
            line(3, 6, 80.0, days * 800.0),
            line(2, 4, 90.0, days * 1000.0),
        ],
        thermal: vec![
            unit(1, 300.0, 18.0, 100.0),
            unit(2, 150.0, 40.0, 80.0),
            unit(5, 150.0, 75.0, 100.0),
            unit(6, 100.0, 110.0, 100.0),
        ],
        candidate_wind: vec![
            farm(3, 80.0, days * 2000.0),
            farm(4, 70.0, days * 1900.0),
            farm(6, 60.0, days * 1500.0),
        ],
        loads: vec![
            Load { bus: 2, peak: 60.0 },
            Load {
                bus: 3,
                peak: 140.0,
            },
            Load {
                bus: 4,
                peak: 160.0,
            },
            Load { bus: 5, peak: 80.0 },
            Load { bus: 6, peak: 70.0 },
        ],
        voll: 2000.0,
        curtail_price: 0.0,
        reference_bus: 1,
    }
}
