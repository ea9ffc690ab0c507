//! Mean-based agglomerative clustering of scenario sets.
//!
//! The linkage is Ward's criterion with a factor of two,
//! `2|a||b| / (|a|+|b|) * ||c_a - c_b||^2`, where `|.|` counts member days and
//! `c` is the unweighted member centroid. Day weights only enter when
//! representatives are built.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{Entry, ScenarioSet, SetKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Member day ids, ascending.
    pub members: Vec<usize>,
    /// Weight of each member, aligned with `members`.
    pub weights: Vec<f64>,
    /// Weight-weighted mean of member features.
    pub mean: Vec<f64>,
    /// Unweighted centroid used by the linkage.
    centroid: Vec<f64>,
}

impl Cluster {
    fn from_members(set: &ScenarioSet, index: &[usize], mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        let dim = set.dim();
        let mut mean = vec![0.0; dim];
        let mut centroid = vec![0.0; dim];
        let mut weights = Vec::with_capacity(members.len());
        let mut total = 0.0;
        for &d in &members {
            let e = &set.entries[index[d]];
            weights.push(e.weight);
            total += e.weight;
            for ((m, c), &f) in mean.iter_mut().zip(centroid.iter_mut()).zip(&e.features) {
                *m += e.weight * f;
                *c += f;
            }
        }
        let n = members.len() as f64;
        mean.iter_mut().for_each(|m| *m /= total);
        centroid.iter_mut().for_each(|c| *c /= n);
        Self {
            members,
            weights,
            mean,
            centroid,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    fn min_id(&self) -> usize {
        self.members[0]
    }
}

/// Disjoint clusters covering a set of day ids, ordered by smallest member id.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub clusters: Vec<Cluster>,
}

#[derive(Serialize)]
struct ClusterJson<'a> {
    members: &'a [usize],
    mean: &'a [f64],
    weight: f64,
}

#[derive(Serialize)]
struct PartitionJson<'a> {
    clusters: Vec<ClusterJson<'a>>,
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PartitionJson {
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterJson {
                    members: &c.members,
                    mean: &c.mean,
                    weight: c.weight(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl Partition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn day_ids(&self) -> BTreeSet<usize> {
        self.clusters
            .iter()
            .flat_map(|c| c.members.iter().copied())
            .collect()
    }

    /// Recovers the partition behind a reduced set from its provenance.
    pub fn from_provenance(full: &ScenarioSet, reduced: &ScenarioSet) -> Result<Self> {
        reduced.check_partitions(full)?;
        let index = dense_index(full);
        let clusters = reduced
            .provenance
            .iter()
            .map(|p| Cluster::from_members(full, &index, p.clone()))
            .collect();
        Ok(Self { clusters })
    }
}

/// Linkage between two clusters; symmetric and zero iff centroids coincide.
pub fn ward_dist(a: &Cluster, b: &Cluster) -> f64 {
    linkage(a.len(), &a.centroid, b.len(), &b.centroid)
}

pub(crate) fn linkage(na: usize, ca: &[f64], nb: usize, cb: &[f64]) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let sq: f64 = ca.iter().zip(cb).map(|(x, y)| (x - y) * (x - y)).sum();
    2.0 * na * nb / (na + nb) * sq
}

fn dense_index(set: &ScenarioSet) -> Vec<usize> {
    let max_id = set.provenance.iter().flatten().copied().max().unwrap_or(0);
    let mut index = vec![usize::MAX; max_id + 1];
    for (i, p) in set.provenance.iter().enumerate() {
        for &d in p {
            index[d] = i;
        }
    }
    index
}

/// Clusters a full set into `k` clusters.
pub fn agglomerate(set: &ScenarioSet, k: usize) -> Result<Partition> {
    let ids: Vec<usize> = (0..set.len()).map(|i| set.day_id(i)).collect();
    agglomerate_days(set, &ids, k)
}

/// Clusters only the given days of a full set into `k` clusters.
pub fn recluster_subset(
    set: &ScenarioSet,
    day_ids: &BTreeSet<usize>,
    k: usize,
) -> Result<Partition> {
    if day_ids.is_empty() {
        return Err(Error::Argument(
            "cannot re-cluster an empty day subset".into(),
        ));
    }
    let index = set.day_index();
    if let Some(d) = day_ids.iter().find(|d| !index.contains_key(d)) {
        return Err(Error::Argument(format!(
            "day {d} is not in the scenario set"
        )));
    }
    let ids: Vec<usize> = day_ids.iter().copied().collect();
    agglomerate_days(set, &ids, k)
}

fn agglomerate_days(set: &ScenarioSet, ids: &[usize], k: usize) -> Result<Partition> {
    if set.kind != SetKind::Full {
        return Err(Error::Argument(
            "clustering operates on a full scenario set".into(),
        ));
    }
    let n = ids.len();
    if k == 0 || k > n {
        return Err(Error::Argument(format!(
            "cluster count {k} outside 1..={n}"
        )));
    }
    let index = dense_index(set);
    let mut clusters: Vec<Option<Cluster>> = ids
        .iter()
        .map(|&d| Some(Cluster::from_members(set, &index, vec![d])))
        .collect();

    // Upper-triangular distance cache; a row is recomputed from the merged
    // cluster's exact centroid after every merge.
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (clusters[i].as_ref().unwrap(), clusters[j].as_ref().unwrap());
            dist[i][j] = ward_dist(a, b);
        }
    }

    let mut alive = n;
    while alive > k {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..n {
            let Some(ci) = &clusters[i] else { continue };
            for j in i + 1..n {
                let Some(cj) = &clusters[j] else { continue };
                let d = dist[i][j];
                let key = ordered_pair(ci.min_id(), cj.min_id());
                let better = match &best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < *bd || (d == *bd && key < *bkey),
                };
                if better {
                    best = Some((d, key, i, j));
                }
            }
        }
        let (_, _, i, j) = best.expect("at least two live clusters");
        let cj = clusters[j].take().unwrap();
        let ci = clusters[i].take().unwrap();
        let members = ci.members.into_iter().chain(cj.members).collect();
        let merged = Cluster::from_members(set, &index, members);
        for other in 0..n {
            if other == i {
                continue;
            }
            let (lo, hi) = (other.min(i), other.max(i));
            dist[lo][hi] = match &clusters[other] {
                Some(c) => ward_dist(&merged, c),
                None => f64::INFINITY,
            };
        }
        for row in dist.iter_mut().take(j) {
            row[j] = f64::INFINITY;
        }
        dist[j].iter_mut().for_each(|v| *v = f64::INFINITY);
        clusters[i] = Some(merged);
        alive -= 1;
    }

    let mut out: Vec<Cluster> = clusters.into_iter().flatten().collect();
    out.sort_by_key(|c| c.min_id());
    Ok(Partition { clusters: out })
}

fn ordered_pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Builds mean-based representatives: weight is the cluster's total weight,
/// features are the weight-weighted member mean.
pub fn make_representatives(p: &Partition) -> Result<ScenarioSet> {
    let entries = p
        .clusters
        .iter()
        .map(|c| Entry {
            weight: c.weight(),
            features: c.mean.clone(),
        })
        .collect();
    let provenance = p.clusters.iter().map(|c| c.members.clone()).collect();
    ScenarioSet::new(SetKind::Reduced, entries, provenance)
}

/// Clusters `set` into `k` representatives in one step.
pub fn reduce(set: &ScenarioSet, k: usize) -> Result<(Partition, ScenarioSet)> {
    let p = agglomerate(set, k)?;
    let r = make_representatives(&p)?;
    Ok((p, r))
}
