//! Power-system data: buses, lines, thermal units, candidate wind farms and
//! loads, plus the binary investment space over candidate assets.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type BusId = u32;

/// Default cap on the number of binary candidates enumerated by the planner.
pub const DEFAULT_ENUM_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    /// Per-unit susceptance, scaled so that flow [MW] = susceptance * angle difference [rad].
    pub susceptance: f64,
    /// MW.
    pub capacity: f64,
    /// Annualized cost of building a candidate line; ignored for existing lines.
    #[serde(default)]
    pub invest_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalGen {
    pub bus: BusId,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: f64,
    pub marginal_cost: f64,
    /// MW/h.
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindFarm {
    pub bus: BusId,
    pub capacity: f64,
    pub invest_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub bus: BusId,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub buses: Vec<BusId>,
    #[serde(rename = "existing_lines", alias = "lines")]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub candidate_lines: Vec<Line>,
    #[serde(default, rename = "thermal_units", alias = "thermal")]
    pub thermal: Vec<ThermalGen>,
    #[serde(default)]
    pub candidate_wind: Vec<WindFarm>,
    #[serde(default)]
    pub loads: Vec<Load>,
    pub voll: f64,
    #[serde(default)]
    pub curtail_price: f64,
    pub reference_bus: BusId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Where the problem is, e.g. `existing_lines[3]`.
    pub location: String,
    pub kind: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.location, self.kind, self.message)
    }
}

impl SystemModel {
    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }

    pub fn bus_index(&self) -> HashMap<BusId, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, &b)| (b, i))
            .collect()
    }

    pub fn candidate_count(&self) -> usize {
        self.candidate_lines.len() + self.candidate_wind.len()
    }

    /// Returns an error listing every violation, or `Ok` for a usable model.
    pub fn validated(&self) -> Result<()> {
        let v = validate(self);
        if v.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = v.iter().map(|v| v.to_string()).collect();
            Err(Error::Validation(msgs.join("; ")))
        }
    }
}

/// Checks every structural invariant of a model and reports all violations.
pub fn validate(m: &SystemModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |location: String, kind: &'static str, message: String| {
        out.push(Violation {
            location,
            kind,
            message,
        })
    };

    let mut seen = BTreeSet::new();
    for (i, b) in m.buses.iter().enumerate() {
        if !seen.insert(*b) {
            push(
                format!("buses[{i}]"),
                "duplicate-bus",
                format!("bus {b} listed twice"),
            );
        }
    }
    if m.buses.is_empty() {
        push("buses".into(), "no-buses", "system has no buses".into());
    }
    let known = |b: BusId| seen.contains(&b);
    if !known(m.reference_bus) {
        push(
            "reference_bus".into(),
            "unknown-bus",
            format!("reference bus {} is not a bus", m.reference_bus),
        );
    }

    for (group, lines) in [
        ("existing_lines", &m.lines),
        ("candidate_lines", &m.candidate_lines),
    ] {
        for (i, l) in lines.iter().enumerate() {
            let loc = format!("{group}[{i}]");
            if l.from == l.to {
                push(
                    loc.clone(),
                    "self-loop",
                    format!("line connects bus {} to itself", l.from),
                );
            }
            for b in [l.from, l.to] {
                if !known(b) {
                    push(
                        loc.clone(),
                        "unknown-bus",
                        format!("bus {b} is not defined"),
                    );
                }
            }
            if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
                push(
                    loc.clone(),
                    "non-positive",
                    format!("susceptance {} must be > 0", l.susceptance),
                );
            }
            if !(l.capacity > 0.0 && l.capacity.is_finite()) {
                push(
                    loc.clone(),
                    "non-positive",
                    format!("capacity {} must be > 0", l.capacity),
                );
            }
            if !(l.invest_cost >= 0.0 && l.invest_cost.is_finite()) {
                push(
                    loc,
                    "negative",
                    format!("invest_cost {} must be >= 0", l.invest_cost),
                );
            }
        }
    }
    for (i, g) in m.thermal.iter().enumerate() {
        let loc = format!("thermal_units[{i}]");
        if !known(g.bus) {
            push(
                loc.clone(),
                "unknown-bus",
                format!("bus {} is not defined", g.bus),
            );
        }
        if !(g.p_min >= 0.0 && g.p_min <= g.p_max && g.p_max.is_finite()) {
            push(
                loc.clone(),
                "limits",
                format!("need 0 <= p_min ({}) <= p_max ({})", g.p_min, g.p_max),
            );
        }
        if !(g.ramp > 0.0) {
            push(
                loc.clone(),
                "non-positive",
                format!("ramp {} must be > 0", g.ramp),
            );
        }
        if !(g.marginal_cost >= 0.0 && g.marginal_cost.is_finite()) {
            push(
                loc,
                "negative",
                format!("marginal_cost {} must be >= 0", g.marginal_cost),
            );
        }
    }
    for (i, w) in m.candidate_wind.iter().enumerate() {
        let loc = format!("candidate_wind[{i}]");
        if !known(w.bus) {
            push(
                loc.clone(),
                "unknown-bus",
                format!("bus {} is not defined", w.bus),
            );
        }
        if !(w.capacity > 0.0 && w.capacity.is_finite()) {
            push(
                loc.clone(),
                "non-positive",
                format!("capacity {} must be > 0", w.capacity),
            );
        }
        if !(w.invest_cost >= 0.0 && w.invest_cost.is_finite()) {
            push(
                loc,
                "negative",
                format!("invest_cost {} must be >= 0", w.invest_cost),
            );
        }
    }
    for (i, l) in m.loads.iter().enumerate() {
        let loc = format!("loads[{i}]");
        if !known(l.bus) {
            push(
                loc.clone(),
                "unknown-bus",
                format!("bus {} is not defined", l.bus),
            );
        }
        if !(l.peak >= 0.0 && l.peak.is_finite()) {
            push(loc, "negative", format!("peak {} must be >= 0", l.peak));
        }
    }
    if !(m.curtail_price >= 0.0 && m.curtail_price.is_finite()) {
        push(
            "curtail_price".into(),
            "negative",
            format!("{} must be >= 0", m.curtail_price),
        );
    }
    let max_mc = m
        .thermal
        .iter()
        .map(|g| g.marginal_cost)
        .fold(0.0, f64::max);
    if !(m.voll > max_mc && m.voll.is_finite()) {
        push(
            "voll".into(),
            "voll-too-low",
            format!(
                "voll {} must exceed the largest marginal cost {max_mc}",
                m.voll
            ),
        );
    }

    // Connectivity over existing lines, among buses with load or generation.
    let idx = m.bus_index();
    let mut uf = UnionFind::new(m.buses.len());
    for l in &m.lines {
        if let (Some(&a), Some(&b)) = (idx.get(&l.from), idx.get(&l.to)) {
            uf.union(a, b);
        }
    }
    let active: BTreeSet<BusId> = m
        .loads
        .iter()
        .filter(|l| l.peak > 0.0)
        .map(|l| l.bus)
        .chain(m.thermal.iter().map(|g| g.bus))
        .chain(m.candidate_wind.iter().map(|w| w.bus))
        .filter(|b| idx.contains_key(b))
        .collect();
    if let Some(&first) = active.iter().next() {
        let root = uf.find(idx[&first]);
        for b in active.iter().skip(1) {
            if uf.find(idx[b]) != root {
                push(
                    format!("bus {b}"),
                    "island",
                    format!("bus {b} is not connected to bus {first} by existing lines"),
                );
            }
        }
    }
    out
}

/// Non-fatal observations: a positive total minimum output can conflict
/// with low-load hours, since shedding cannot absorb surplus generation.
pub fn warnings(m: &SystemModel) -> Vec<String> {
    let pmin: f64 = m.thermal.iter().map(|g| g.p_min).sum();
    if pmin > 0.0 {
        vec![format!(
            "thermal p_min sums to {pmin} MW; daily LPs may be infeasible in hours with lower load"
        )]
    } else {
        vec![]
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[rb] = ra;
        }
    }
}

/// Build/don't-build choice for every candidate line and wind farm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InvestmentDecision {
    pub line_built: Vec<bool>,
    pub wind_built: Vec<bool>,
}

impl InvestmentDecision {
    pub fn none(m: &SystemModel) -> Self {
        Self {
            line_built: vec![false; m.candidate_lines.len()],
            wind_built: vec![false; m.candidate_wind.len()],
        }
    }

    /// Candidate bits, lines first then wind farms.
    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.line_built.iter().chain(&self.wind_built).copied()
    }

    pub fn from_bits(m: &SystemModel, bits: &str) -> Result<Self> {
        let n = m.candidate_count();
        if bits.len() != n {
            return Err(Error::Dimension(format!(
                "decision `{bits}` has {} bits, system has {n} candidates",
                bits.len()
            )));
        }
        let v = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Argument(format!("invalid decision bit `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let nl = m.candidate_lines.len();
        Ok(Self {
            line_built: v[..nl].to_vec(),
            wind_built: v[nl..].to_vec(),
        })
    }

    pub fn check_dims(&self, m: &SystemModel) -> Result<()> {
        if self.line_built.len() != m.candidate_lines.len()
            || self.wind_built.len() != m.candidate_wind.len()
        {
            return Err(Error::Dimension(format!(
                "decision has {}+{} entries, system has {}+{} candidates",
                self.line_built.len(),
                self.wind_built.len(),
                m.candidate_lines.len(),
                m.candidate_wind.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for InvestmentDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Annualized cost of the built candidates.
pub fn invest_cost(m: &SystemModel, x: &InvestmentDecision) -> Result<f64> {
    x.check_dims(m)?;
    let lines = m
        .candidate_lines
        .iter()
        .zip(&x.line_built)
        .map(|(l, &b)| (b, l.invest_cost));
    let wind = m
        .candidate_wind
        .iter()
        .zip(&x.wind_built)
        .map(|(w, &b)| (b, w.invest_cost));
    Ok(lines
        .chain(wind)
        .filter(|(b, _)| *b)
        .fold(0.0, |acc, (_, c)| acc + c))
}

/// All `2^n` decisions in lexicographic bit order (first candidate most significant).
pub fn enumerate_decisions(m: &SystemModel, limit: usize) -> Result<Vec<InvestmentDecision>> {
    let n = m.candidate_count();
    if n > limit {
        return Err(Error::Capacity { count: n, limit });
    }
    let nl = m.candidate_lines.len();
    Ok((0u64..1 << n)
        .map(|code| {
            let bits: Vec<bool> = (0..n).map(|j| (code >> (n - 1 - j)) & 1 == 1).collect();
            InvestmentDecision {
                line_built: bits[..nl].to_vec(),
                wind_built: bits[nl..].to_vec(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_bus() -> SystemModel {
        serde_json::from_value(serde_json::json!({
            "buses": [1, 2, 3],
            "lines": [
                {"from": 1, "to": 2, "susceptance": 100.0, "capacity": 50.0},
                {"from": 2, "to": 3, "susceptance": 100.0, "capacity": 50.0}
            ],
            "candidate_lines": [
                {"from": 1, "to": 3, "susceptance": 100.0, "capacity": 50.0, "invest_cost": 5.0}
            ],
            "thermal": [{"bus": 1, "p_max": 200.0, "marginal_cost": 20.0, "ramp": 50.0}],
            "candidate_wind": [{"bus": 3, "capacity": 80.0, "invest_cost": 7.0}],
            "loads": [{"bus": 2, "peak": 60.0}, {"bus": 3, "peak": 40.0}],
            "voll": 1000.0,
            "curtail_price": 0.0,
            "reference_bus": 1
        }))
        .unwrap()
    }

    fn kinds(m: &SystemModel) -> Vec<&'static str> {
        validate(m).into_iter().map(|v| v.kind).collect()
    }

    #[test]
    fn json_keys_and_aliases() {
        let v = serde_json::to_value(three_bus()).unwrap();
        assert!(v.get("existing_lines").is_some() && v.get("thermal_units").is_some());
        assert!(v.get("lines").is_none() && v.get("thermal").is_none());
        let back: SystemModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, three_bus());
    }

    #[test]
    fn well_formed_is_ok() {
        assert!(validate(&three_bus()).is_empty());
        assert!(three_bus().validated().is_ok());
    }

    #[test]
    fn self_loop_detected() {
        let mut m = three_bus();
        m.candidate_lines[0].to = 1;
        assert_eq!(kinds(&m), vec!["self-loop"]);
        assert_eq!(validate(&m)[0].location, "candidate_lines[0]");
    }

    #[test]
    fn island_detected() {
        let mut m = three_bus();
        m.lines.pop();
        let v = validate(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, "island");
        assert!(v[0].location.contains('3'));
        // the candidate line does not count toward connectivity
        assert!(m.validated().is_err());
    }

    #[test]
    fn misc_violations() {
        let mut m = three_bus();
        m.voll = 10.0;
        m.thermal[0].ramp = 0.0;
        m.loads[0].bus = 9;
        let k = kinds(&m);
        assert!(k.contains(&"voll-too-low"));
        assert!(k.contains(&"non-positive"));
        assert!(k.contains(&"unknown-bus"));
    }

    #[test]
    fn invest_cost_examples() {
        let m = three_bus();
        assert_eq!(invest_cost(&m, &InvestmentDecision::none(&m)).unwrap(), 0.0);
        let line = InvestmentDecision::from_bits(&m, "10").unwrap();
        assert_eq!(invest_cost(&m, &line).unwrap(), 5.0);
        let both = InvestmentDecision::from_bits(&m, "11").unwrap();
        assert_eq!(invest_cost(&m, &both).unwrap(), 12.0);
        let bad = InvestmentDecision {
            line_built: vec![],
            wind_built: vec![true],
        };
        assert!(matches!(invest_cost(&m, &bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn enumeration_order_and_counts() {
        let mut m = three_bus();
        let d: Vec<String> = enumerate_decisions(&m, 16)
            .unwrap()
            .iter()
            .map(|x| x.to_string())
            .collect();
        assert_eq!(d, ["00", "01", "10", "11"]);

        let (lines, wind) = (m.candidate_lines.clone(), m.candidate_wind.clone());
        m.candidate_lines.clear();
        m.candidate_wind.clear();
        let d = enumerate_decisions(&m, 16).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].to_string(), "");

        m.candidate_lines = vec![lines[0].clone(); 5];
        m.candidate_wind = vec![wind[0].clone(); 6];
        let d = enumerate_decisions(&m, 16).unwrap();
        assert_eq!(d.len(), 2048);
        assert_eq!(d.iter().collect::<BTreeSet<_>>().len(), 2048);
        assert!(matches!(
            enumerate_decisions(&m, 10),
            Err(Error::Capacity {
                count: 11,
                limit: 10
            })
        ));
    }

    #[test]
    fn invest_cost_is_additive_over_disjoint_decisions() {
        let mut m = three_bus();
        m.candidate_wind.push(WindFarm {
            bus: 2,
            capacity: 10.0,
            invest_cost: 3.5,
        });
        let all = enumerate_decisions(&m, 16).unwrap();
        for x in &all {
            for y in &all {
                if x.bits().zip(y.bits()).any(|(a, b)| a && b) {
                    continue;
                }
                let or = InvestmentDecision {
                    line_built: x
                        .line_built
                        .iter()
                        .zip(&y.line_built)
                        .map(|(a, b)| *a || *b)
                        .collect(),
                    wind_built: x
                        .wind_built
                        .iter()
                        .zip(&y.wind_built)
                        .map(|(a, b)| *a || *b)
                        .collect(),
                };
                let lhs = invest_cost(&m, &or).unwrap();
                let rhs = invest_cost(&m, x).unwrap() + invest_cost(&m, y).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pmin_warning() {
        let mut m = three_bus();
        assert!(warnings(&m).is_empty());
        m.thermal[0].p_min = 10.0;
        assert_eq!(warnings(&m).len(), 1);
    }
}
