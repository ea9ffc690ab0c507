//! Hourly series ingestion, daily segmentation and scenario sets.
//!
//! A day is described by a 48-dimensional feature vector: 24 hourly load
//! factors followed by 24 hourly wind factors. Scenario sets are weighted
//! collections of such vectors; reduced sets additionally carry, for every
//! representative, the original day ids it stands for.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;
/// Length of a daily feature vector (load ‖ wind).
pub const FEATURE_LEN: usize = 2 * HOURS_PER_DAY;

#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl HourlySeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() || !values.len().is_multiple_of(HOURS_PER_DAY) {
            return Err(Error::Format(format!(
                "series `{name}` has {} samples, expected a positive multiple of {HOURS_PER_DAY}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Format(format!(
                "series `{name}` has invalid value {} at hour {i}",
                values[i]
            )));
        }
        Ok(Self { name, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn days(&self) -> usize {
        self.values.len() / HOURS_PER_DAY
    }
}

/// Scales a series by its maximum so that the largest sample becomes exactly 1.
pub fn normalize(series: &HourlySeries) -> Result<HourlySeries> {
    let max = series.values.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(Error::NormalizationUndefined(series.name.clone()));
    }
    let values = series
        .values
        .iter()
        .map(|&v| if v == max { 1.0 } else { v / max })
        .collect();
    Ok(HourlySeries {
        name: series.name.clone(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayProfile {
    pub day_id: usize,
    pub load_factors: [f64; HOURS_PER_DAY],
    pub wind_factors: [f64; HOURS_PER_DAY],
    pub weight: f64,
}

impl DayProfile {
    pub fn features(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(FEATURE_LEN);
        f.extend_from_slice(&self.load_factors);
        f.extend_from_slice(&self.wind_factors);
        f
    }
}

/// Cuts two aligned hourly series into consecutive days of weight 1.
pub fn segment_days(load: &HourlySeries, wind: &HourlySeries) -> Result<Vec<DayProfile>> {
    if load.len() != wind.len() {
        return Err(Error::Format(format!(
            "load has {} hours but wind has {}",
            load.len(),
            wind.len()
        )));
    }
    if load.is_empty() || !load.len().is_multiple_of(HOURS_PER_DAY) {
        return Err(Error::Format(format!(
            "series length {} is not a positive multiple of {HOURS_PER_DAY}",
            load.len()
        )));
    }
    let days = load
        .values
        .chunks_exact(HOURS_PER_DAY)
        .zip(wind.values.chunks_exact(HOURS_PER_DAY))
        .enumerate()
        .map(|(day_id, (l, w))| DayProfile {
            day_id,
            load_factors: l.try_into().expect("chunk of 24"),
            wind_factors: w.try_into().expect("chunk of 24"),
            weight: 1.0,
        })
        .collect();
    Ok(days)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Full,
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub weight: f64,
    pub features: Vec<f64>,
}

/// A weighted scenario set. `provenance[k]` lists the original day ids
/// represented by `entries[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub kind: SetKind,
    pub entries: Vec<Entry>,
    pub provenance: Vec<Vec<usize>>,
}

impl ScenarioSet {
    /// Builds a set after checking weights, dimensions and provenance shape.
    pub fn new(kind: SetKind, entries: Vec<Entry>, provenance: Vec<Vec<usize>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySet);
        }
        if entries.len() != provenance.len() {
            return Err(Error::Consistency(format!(
                "{} entries but {} provenance lists",
                entries.len(),
                provenance.len()
            )));
        }
        let dim = entries[0].features.len();
        for (k, e) in entries.iter().enumerate() {
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::Argument(format!(
                    "entry {k} has non-positive weight {}",
                    e.weight
                )));
            }
            if e.features.len() != dim {
                return Err(Error::Dimension(format!(
                    "entry {k} has {} features, entry 0 has {dim}",
                    e.features.len()
                )));
            }
            if e.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("entry {k} has non-finite features")));
            }
        }
        let mut seen = BTreeSet::new();
        for (k, p) in provenance.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::Consistency(format!(
                    "entry {k} has empty provenance"
                )));
            }
            if kind == SetKind::Full && p.len() != 1 {
                return Err(Error::Consistency(format!(
                    "full-set entry {k} must represent exactly one day"
                )));
            }
            for &d in p {
                if !seen.insert(d) {
                    return Err(Error::Consistency(format!(
                        "day {d} appears in more than one entry"
                    )));
                }
            }
        }
        Ok(Self {
            kind,
            entries,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries.first().map_or(0, |e| e.features.len())
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Day id of entry `i` in a full set.
    pub fn day_id(&self, i: usize) -> usize {
        self.provenance[i][0]
    }

    /// Map from day id to entry index; only meaningful on a full set.
    pub fn day_index(&self) -> std::collections::HashMap<usize, usize> {
        self.provenance
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.iter().map(move |&d| (d, i)))
            .collect()
    }

    /// Checks that this reduced set's provenance partitions the days of `full`
    /// and that total weight is conserved.
    pub fn check_partitions(&self, full: &ScenarioSet) -> Result<()> {
        let full_days: BTreeSet<usize> = full.provenance.iter().flatten().copied().collect();
        let mine: Vec<usize> = self.provenance.iter().flatten().copied().collect();
        let mine_set: BTreeSet<usize> = mine.iter().copied().collect();
        if mine.len() != mine_set.len() || mine_set != full_days {
            return Err(Error::Consistency(
                "reduced-set provenance does not partition the full set".into(),
            ));
        }
        let (a, b) = (self.total_weight(), full.total_weight());
        if (a - b).abs() > 1e-9 * b.abs().max(1.0) {
            return Err(Error::Consistency(format!(
                "total weight {a} differs from full-set weight {b}"
            )));
        }
        Ok(())
    }

    pub fn to_json_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json_reader<R: Read>(r: R) -> Result<Self> {
        let raw: ScenarioSet = serde_json::from_reader(r)?;
        ScenarioSet::new(raw.kind, raw.entries, raw.provenance)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_reader(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_json_writer(std::io::BufWriter::new(f))
    }
}

/// Builds the full-scale set: one entry per day with features load ‖ wind.
pub fn to_full_set(days: &[DayProfile]) -> Result<ScenarioSet> {
    if days.is_empty() {
        return Err(Error::EmptySet);
    }
    let entries = days
        .iter()
        .map(|d| Entry {
            weight: d.weight,
            features: d.features(),
        })
        .collect();
    let provenance = days.iter().map(|d| vec![d.day_id]).collect();
    ScenarioSet::new(SetKind::Full, entries, provenance)
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    hour: usize,
    load: f64,
    wind: f64,
}

/// Reads a `hour,load,wind` CSV into raw (un-normalized) load and wind series.
pub fn read_timeseries_csv<R: Read>(r: R) -> Result<(HourlySeries, HourlySeries)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["hour", "load", "wind"] {
        return Err(Error::Format(format!(
            "expected header `hour,load,wind`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut load = Vec::new();
    let mut wind = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = row?;
        if row.hour != i {
            return Err(Error::Format(format!(
                "row {} has hour {}, expected consecutive 0-based hours",
                i + 1,
                row.hour
            )));
        }
        load.push(row.load);
        wind.push(row.wind);
    }
    Ok((
        HourlySeries::new("load", load)?,
        HourlySeries::new("wind", wind)?,
    ))
}

pub fn write_timeseries_csv<W: Write>(
    w: W,
    load: &HourlySeries,
    wind: &HourlySeries,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for (hour, (&l, &wv)) in load.values.iter().zip(&wind.values).enumerate() {
        wtr.serialize(CsvRow {
            hour,
            load: l,
            wind: wv,
        })?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Reads a time-series CSV, normalizes both channels and returns the full set.
pub fn load_full_set(path: &Path) -> Result<ScenarioSet> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (load, wind) = read_timeseries_csv(std::io::BufReader::new(f))?;
    let days = segment_days(&normalize(&load)?, &normalize(&wind)?)?;
    to_full_set(&days)
}
