//! Weighted mixed-type k-means over per-service, per-day records.
//!
//! Centroids hold the arithmetic mean of continuous components and the modal
//! status of each nominal component; both minimize the within-cluster sum of
//! [`FeatureSchema::dissimilarity`], so every assignment and update step is
//! non-increasing in the objective.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{encode, fit_normalization, EncodedVector, FeatureSchema, FeatureVector, NormalizationParams};
use crate::ingest::RawDay;
use crate::thermal::HOURS;

pub const MAX_ITERATIONS: usize = 300;

/// Percentile of member-to-centroid dissimilarities used as the far guard.
pub const FAR_GUARD_PERCENTILE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MemberRef {
    pub service_id: String,
    pub date: NaiveDate,
}

impl MemberRef {
    pub fn of(record: &FeatureVector) -> Self {
        MemberRef {
            service_id: record.service_id.clone(),
            date: record.date,
        }
    }
}

/// Centroid components converted back to raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCentroid {
    pub numeric: Vec<f64>,
    pub ordinal: Vec<f64>,
    pub nominal: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub centroid: EncodedVector,
    pub centroid_raw: RawCentroid,
    pub member_count: usize,
    pub member_refs: Vec<MemberRef>,
}

impl Cluster {
    pub fn member_dates(&self) -> BTreeSet<NaiveDate> {
        self.member_refs.iter().map(|m| m.date).collect()
    }
}

/// Mean 24-hour load (kVA per service) and ambient (°C) over a cluster's members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster_id: usize,
    pub load_kva: [f64; HOURS],
    pub ambient_c: [f64; HOURS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub schema: FeatureSchema,
    pub norm_params: NormalizationParams,
    pub objective: f64,
    pub iterations: usize,
    /// Distinct services in the training data.
    pub service_count: usize,
    /// Member-to-own-centroid dissimilarity percentile beyond which a query is "far".
    pub far_threshold: f64,
    pub clusters: Vec<Cluster>,
    #[serde(default)]
    pub profiles: Vec<ClusterProfile>,
}

impl ClusterModel {
    pub fn cluster_ids(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.id).collect()
    }

    pub fn cluster(&self, id: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.id == id)
    }

    pub fn profile(&self, id: usize) -> Option<&ClusterProfile> {
        self.profiles.iter().find(|p| p.cluster_id == id)
    }

    /// Days of exposure per cluster for one transformer: member records
    /// divided by the number of services contributing them.
    pub fn member_day_counts(&self) -> BTreeMap<usize, f64> {
        let services = self.service_count.max(1) as f64;
        self.clusters
            .iter()
            .map(|c| (c.id, c.member_count as f64 / services))
            .collect()
    }

    /// Distinct calendar dates covered by the model's members.
    pub fn distinct_dates(&self) -> usize {
        self.clusters
            .iter()
            .flat_map(|c| c.member_refs.iter().map(|m| m.date))
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Index of the nearest cluster and its dissimilarity.
    pub fn nearest(&self, point: &EncodedVector) -> (usize, f64) {
        nearest_centroid(point, self.clusters.iter().map(|c| &c.centroid), &self.schema)
    }

    /// Σ dissimilarity(member, own centroid), recomputed from the raw records.
    pub fn objective_for(&self, dataset: &[FeatureVector]) -> Result<f64> {
        let owner: HashMap<&MemberRef, usize> = self
            .clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.member_refs.iter().map(move |m| (m, i)))
            .collect();
        let mut total = 0.0;
        for record in dataset {
            let key = MemberRef::of(record);
            let &i = owner
                .get(&key)
                .ok_or_else(|| Error::KeyMismatch(format!("{} {} is not a member", key.service_id, key.date)))?;
            let point = encode(record, &self.schema, &self.norm_params)?;
            total += self.schema.dissimilarity(&point, &self.clusters[i].centroid);
        }
        Ok(total)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }
}

fn nearest_centroid<'a>(
    point: &EncodedVector,
    centroids: impl Iterator<Item = &'a EncodedVector>,
    schema: &FeatureSchema,
) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.enumerate() {
        let d = schema.dissimilarity(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Mean of continuous components and mode of nominal ones (ties go to the
/// earlier status in the schema).
pub fn update_centroid(members: &[&EncodedVector], schema: &FeatureSchema) -> Result<EncodedVector> {
    let first = members.first().ok_or(Error::EmptyMembers)?;
    let n = members.len() as f64;
    let mut continuous = vec![0.0; first.continuous.len()];
    for m in members {
        for (acc, v) in continuous.iter_mut().zip(&m.continuous) {
            *acc += v;
        }
    }
    for v in &mut continuous {
        *v /= n;
    }
    let nominal = schema
        .nominal()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let mut counts = vec![0usize; f.statuses.len()];
            for m in members {
                counts[m.nominal[j] as usize] += 1;
            }
            let mut best = 0;
            for (s, &c) in counts.iter().enumerate() {
                if c > counts[best] {
                    best = s;
                }
            }
            best as u32
        })
        .collect();
    Ok(EncodedVector { continuous, nominal })
}

/// Outcome of one k-means run in normalized space.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub assignments: Vec<usize>,
    pub centroids: Vec<EncodedVector>,
    pub objective: f64,
    /// Objective after every assignment, empty-cluster repair and update step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub empty_recoveries: usize,
}

/// Seeded choice of `k` distinct data points as initial centroids.
pub fn initial_centroids(points: &[EncodedVector], k: usize, seed: u64) -> Result<Vec<EncodedVector>> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, points.len(), k)
        .into_iter()
        .map(|i| points[i].clone())
        .collect())
}

pub fn lloyd(points: &[EncodedVector], k: usize, schema: &FeatureSchema, seed: u64) -> Result<LloydRun> {
    let init = initial_centroids(points, k, seed)?;
    lloyd_from(points, init, schema)
}

fn total_objective(
    points: &[EncodedVector],
    assignments: &[usize],
    centroids: &[EncodedVector],
    schema: &FeatureSchema,
) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| schema.dissimilarity(p, &centroids[a]))
        .sum()
}

/// k-means iterations from explicit starting centroids.
pub fn lloyd_from(
    points: &[EncodedVector],
    mut centroids: Vec<EncodedVector>,
    schema: &FeatureSchema,
) -> Result<LloydRun> {
    let k = centroids.len();
    if k == 0 || points.len() < k {
        return Err(Error::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let mut assignments: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut empty_recoveries = 0;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let next: Vec<usize> = points
            .par_iter()
            .map(|p| nearest_centroid(p, centroids.iter(), schema).0)
            .collect();
        trace.push(total_objective(points, &next, &centroids, schema));
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;

        let mut sizes = vec![0usize; k];
        for &a in &assignments {
            sizes[a] += 1;
        }
        if sizes.contains(&0) {
            for c in 0..k {
                if sizes[c] > 0 {
                    continue;
                }
                // Farthest point from its own centroid, among clusters that can spare one.
                let mut far: Option<(usize, f64)> = None;
                for (i, p) in points.iter().enumerate() {
                    let own = assignments[i];
                    if sizes[own] < 2 {
                        continue;
                    }
                    let d = schema.dissimilarity(p, &centroids[own]);
                    if far.is_none_or(|(_, best)| d > best) {
                        far = Some((i, d));
                    }
                }
                let (i, _) = far.expect("n >= k leaves a cluster with two members");
                log::warn!("cluster {} emptied; reseeded at record {i}", c + 1);
                sizes[assignments[i]] -= 1;
                sizes[c] = 1;
                assignments[i] = c;
                centroids[c] = points[i].clone();
                empty_recoveries += 1;
            }
            trace.push(total_objective(points, &assignments, &centroids, schema));
        }

        let mut members: Vec<Vec<&EncodedVector>> = vec![Vec::new(); k];
        for (p, &a) in points.iter().zip(&assignments) {
            members[a].push(p);
        }
        for (c, m) in members.iter().enumerate() {
            centroids[c] = update_centroid(m, schema)?;
        }
        trace.push(total_objective(points, &assignments, &centroids, schema));
    }

    let objective = total_objective(points, &assignments, &centroids, schema);
    Ok(LloydRun {
        assignments,
        centroids,
        objective,
        objective_trace: trace,
        iterations,
        converged,
        empty_recoveries,
    })
}

/// Seed of restart `r`; restart 0 uses the base seed itself.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn kmeans(dataset: &[FeatureVector], k: usize, schema: &FeatureSchema, seed: u64) -> Result<ClusterModel> {
    kmeans_with_restarts(dataset, k, schema, seed, 1)
}

/// Best-objective model over `restarts` independently seeded runs.
pub fn kmeans_with_restarts(
    dataset: &[FeatureVector],
    k: usize,
    schema: &FeatureSchema,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || dataset.len() < k {
        return Err(Error::TooFewPoints {
            points: dataset.len(),
            k,
        });
    }
    let params = fit_normalization(dataset, schema)?;
    let points = dataset
        .iter()
        .map(|r| encode(r, schema, &params))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<LloydRun> = None;
    for r in 0..restarts.max(1) {
        let run = lloyd(&points, k, schema, restart_seed(seed, r))?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one run");
    Ok(build_model(
        dataset,
        &points,
        schema,
        params,
        seed,
        restarts.max(1),
        run,
    ))
}

fn build_model(
    dataset: &[FeatureVector],
    points: &[EncodedVector],
    schema: &FeatureSchema,
    params: NormalizationParams,
    seed: u64,
    restarts: usize,
    run: LloydRun,
) -> ClusterModel {
    let k = run.centroids.len();
    let mut refs: Vec<Vec<MemberRef>> = vec![Vec::new(); k];
    for (record, &a) in dataset.iter().zip(&run.assignments) {
        refs[a].push(MemberRef::of(record));
    }
    let mut own: Vec<f64> = points
        .iter()
        .zip(&run.assignments)
        .map(|(p, &a)| schema.dissimilarity(p, &run.centroids[a]))
        .collect();
    own.sort_by(f64::total_cmp);
    let rank = ((FAR_GUARD_PERCENTILE * own.len() as f64).ceil() as usize).clamp(1, own.len());
    let far_threshold = own[rank - 1];

    let service_count = dataset
        .iter()
        .map(|r| r.service_id.as_str())
        .collect::<BTreeSet<_>>()
        .len();
    let clusters = run
        .centroids
        .into_iter()
        .zip(refs)
        .enumerate()
        .map(|(i, (centroid, member_refs))| Cluster {
            id: i + 1,
            centroid_raw: raw_centroid(&centroid, schema, &params),
            centroid,
            member_count: member_refs.len(),
            member_refs,
        })
        .collect();
    ClusterModel {
        k,
        seed,
        restarts,
        schema: schema.clone(),
        norm_params: params,
        objective: run.objective,
        iterations: run.iterations,
        service_count,
        far_threshold,
        clusters,
        profiles: Vec::new(),
    }
}

fn raw_centroid(centroid: &EncodedVector, schema: &FeatureSchema, params: &NormalizationParams) -> RawCentroid {
    let n = schema.numeric().len();
    RawCentroid {
        numeric: (0..n).map(|j| params.denormalize(j, centroid.continuous[j])).collect(),
        ordinal: centroid.continuous[n..].to_vec(),
        nominal: schema
            .nominal()
            .iter()
            .zip(&centroid.nominal)
            .map(|(f, &s)| f.statuses[s as usize].clone())
            .collect(),
    }
}

/// Objective of the best model for each k.
pub fn objective_sweep(
    dataset: &[FeatureVector],
    ks: impl IntoIterator<Item = usize>,
    schema: &FeatureSchema,
    seed: u64,
    restarts: usize,
) -> Result<Vec<(usize, f64)>> {
    ks.into_iter()
        .map(|k| kmeans_with_restarts(dataset, k, schema, seed, restarts).map(|m| (k, m.objective)))
        .collect()
}

/// One row of the cluster composition table, in raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionRow {
    pub cluster_id: usize,
    pub member_count: usize,
    pub numeric: Vec<f64>,
    pub ordinal: Vec<f64>,
    pub nominal: Vec<String>,
}

pub fn composition(model: &ClusterModel) -> Vec<CompositionRow> {
    model
        .clusters
        .iter()
        .map(|c| {
            let raw = raw_centroid(&c.centroid, &model.schema, &model.norm_params);
            CompositionRow {
                cluster_id: c.id,
                member_count: c.member_count,
                numeric: raw.numeric,
                ordinal: raw.ordinal,
                nominal: raw.nominal,
            }
        })
        .collect()
}

/// Transformer-days per calendar month (rows Jan..Dec) per cluster: member
/// records in the month divided by the number of services.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthClusterMatrix {
    pub cluster_ids: Vec<usize>,
    /// `days[month][cluster]`, month 0 = January.
    pub days: Vec<Vec<f64>>,
}

impl MonthClusterMatrix {
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cluster_ids.len())
            .map(|c| self.days.iter().map(|row| row[c]).sum())
            .collect()
    }
}

pub fn month_cluster_matrix(model: &ClusterModel) -> MonthClusterMatrix {
    let mut records = vec![vec![0usize; model.clusters.len()]; 12];
    for (c, cluster) in model.clusters.iter().enumerate() {
        for m in &cluster.member_refs {
            records[m.date.month0() as usize][c] += 1;
        }
    }
    let services = model.service_count.max(1) as f64;
    MonthClusterMatrix {
        cluster_ids: model.cluster_ids(),
        days: records
            .into_iter()
            .map(|row| row.into_iter().map(|n| n as f64 / services).collect())
            .collect(),
    }
}

/// Hour-by-hour mean of every member's stored load and ambient profile.
pub fn extract_profiles(model: &ClusterModel, raw: &BTreeMap<MemberRef, RawDay>) -> Result<Vec<ClusterProfile>> {
    model
        .clusters
        .iter()
        .map(|cluster| {
            let mut load_kva = [0.0; HOURS];
            let mut ambient_c = [0.0; HOURS];
            for m in &cluster.member_refs {
                let day = raw.get(m).ok_or_else(|| Error::MissingProfile {
                    service_id: m.service_id.clone(),
                    date: m.date,
                })?;
                for h in 0..HOURS {
                    load_kva[h] += day.load_kva[h];
                    ambient_c[h] += day.ambient_c[h];
                }
            }
            let n = cluster.member_refs.len().max(1) as f64;
            for h in 0..HOURS {
                load_kva[h] /= n;
                ambient_c[h] /= n;
            }
            Ok(ClusterProfile {
                cluster_id: cluster.id,
                load_kva,
                ambient_c,
            })
        })
        .collect()
}
