//! Inverse-distance estimates for transformers outside the clustered data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aging::daily_life_loss;
use crate::clustering::ClusterModel;
use crate::error::{Error, Result};
use crate::features::{encode, encode_partial, FeatureVector, PartialVector};
use crate::ingest::read_table;
use crate::riskassess::scaled_day;
use crate::thermal::{simulate_day, TransformerSpec};

/// Below this dissimilarity a query is treated as sitting on the centroid.
pub const EXACT_MATCH_EPSILON: f64 = 1e-9;

pub const QUERY_HEADER: [&str; 6] = ["date", "t_max_c", "t_min_c", "t_avg_c", "l_avg_kva", "weekday"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarGuard {
    /// Refuse queries beyond the guard.
    Strict,
    /// Flag them and carry on.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimate: f64,
    pub per_cluster_distances: BTreeMap<usize, f64>,
    pub weights: BTreeMap<usize, f64>,
    pub far_flag: bool,
    /// Cluster whose centroid the query coincides with, if any.
    pub exact_match: Option<usize>,
}

/// Weighted mean of `values` with weights proportional to 1/d. Returns the
/// estimate, the normalized weights and the exact-match cluster if one
/// distance is below [`EXACT_MATCH_EPSILON`].
pub fn inverse_distance_weights(
    distances: &BTreeMap<usize, f64>,
    values: &BTreeMap<usize, f64>,
) -> Result<(f64, BTreeMap<usize, f64>, Option<usize>)> {
    if distances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !distances.keys().eq(values.keys()) {
        return Err(Error::KeyMismatch(format!(
            "distances cover clusters {:?}, values cover {:?}",
            distances.keys().collect::<Vec<_>>(),
            values.keys().collect::<Vec<_>>()
        )));
    }
    if let Some((&id, _)) = distances
        .iter()
        .filter(|(_, d)| **d < EXACT_MATCH_EPSILON)
        .min_by(|a, b| a.1.total_cmp(b.1))
    {
        let weights = distances
            .keys()
            .map(|&k| (k, if k == id { 1.0 } else { 0.0 }))
            .collect();
        return Ok((values[&id], weights, Some(id)));
    }
    let inverse: BTreeMap<usize, f64> = distances.iter().map(|(&k, d)| (k, 1.0 / d)).collect();
    let total: f64 = inverse.values().sum();
    let weights: BTreeMap<usize, f64> = inverse.into_iter().map(|(k, w)| (k, w / total)).collect();
    let estimate = weights.iter().map(|(k, w)| w * values[k]).sum();
    Ok((estimate, weights, None))
}

/// Estimate from an encoded query that may lack some features.
pub fn estimate_partial(
    query: &PartialVector,
    model: &ClusterModel,
    per_cluster_values: &BTreeMap<usize, f64>,
    guard: FarGuard,
) -> Result<EstimationResult> {
    let distances: BTreeMap<usize, f64> = model
        .clusters
        .iter()
        .map(|c| (c.id, model.schema.partial_dissimilarity(query, &c.centroid)))
        .collect();
    let (estimate, weights, exact_match) = inverse_distance_weights(&distances, per_cluster_values)?;
    let nearest = distances.values().copied().fold(f64::INFINITY, f64::min);
    let far_flag = nearest > model.far_threshold;
    if far_flag {
        match guard {
            FarGuard::Strict => {
                return Err(Error::FarFromAllClusters {
                    nearest,
                    threshold: model.far_threshold,
                })
            }
            FarGuard::Lenient => log::warn!(
                "query is outside the model's support (nearest {nearest:.4} > guard {:.4}); estimate is unreliable",
                model.far_threshold
            ),
        }
    }
    Ok(EstimationResult {
        estimate,
        per_cluster_distances: distances,
        weights,
        far_flag,
        exact_match,
    })
}

/// Estimate for a full raw feature vector.
pub fn estimate(
    feature_x: &FeatureVector,
    model: &ClusterModel,
    per_cluster_values: &BTreeMap<usize, f64>,
    guard: FarGuard,
) -> Result<EstimationResult> {
    let x = encode(feature_x, &model.schema, &model.norm_params)?;
    let query = PartialVector {
        continuous: x.continuous.into_iter().map(Some).collect(),
        nominal: x.nominal.into_iter().map(Some).collect(),
    };
    estimate_partial(&query, model, per_cluster_values, guard)
}

/// Average per-service load in kVA from one day's energy readings in kWh.
pub fn avg_load_from_energy(daily_energy_kwh: &[f64], service_count: usize) -> Result<f64> {
    if service_count == 0 {
        return Err(Error::ZeroServices);
    }
    if daily_energy_kwh.len() != service_count {
        return Err(Error::Config(format!(
            "{} energy readings for {service_count} services",
            daily_energy_kwh.len()
        )));
    }
    if let Some(e) = daily_energy_kwh.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::Config(format!("energy reading {e} is not a nonnegative number")));
    }
    Ok(daily_energy_kwh.iter().sum::<f64>() / (24.0 * service_count as f64))
}

/// Simulated outcomes of every cluster profile at a fixed service count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutcomes {
    pub services: usize,
    pub max_top_oil: BTreeMap<usize, f64>,
    pub max_hotspot: BTreeMap<usize, f64>,
    pub daily_loss: BTreeMap<usize, f64>,
}

impl ClusterOutcomes {
    pub fn compute(spec: &TransformerSpec, model: &ClusterModel, services: usize) -> Result<Self> {
        if services == 0 {
            return Err(Error::ZeroServices);
        }
        spec.validate()?;
        let rows = model
            .clusters
            .par_iter()
            .map(|c| {
                let profile = model
                    .profile(c.id)
                    .ok_or_else(|| Error::InvalidProfile(format!("cluster {} has no 24-hour profile", c.id)))?;
                let trace = simulate_day(spec, &scaled_day(spec, profile, services)?)?;
                Ok((c.id, trace.max_top_oil(), trace.max_hotspot(), daily_life_loss(&trace)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClusterOutcomes {
            services,
            max_top_oil: rows.iter().map(|r| (r.0, r.1)).collect(),
            max_hotspot: rows.iter().map(|r| (r.0, r.2)).collect(),
            daily_loss: rows.iter().map(|r| (r.0, r.3)).collect(),
        })
    }
}

pub fn per_cluster_max_top_oil(
    spec: &TransformerSpec,
    model: &ClusterModel,
    services: usize,
) -> Result<BTreeMap<usize, f64>> {
    Ok(ClusterOutcomes::compute(spec, model, services)?.max_top_oil)
}

/// One day observed at a transformer without interval metering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayQuery {
    pub date: NaiveDate,
    pub t_max: f64,
    pub t_min: f64,
    pub t_avg: f64,
    pub l_avg: f64,
    pub weekday: bool,
}

impl DayQuery {
    /// Encodes the fields the model's schema knows about; the rest of the
    /// schema stays unobserved.
    pub fn encode(&self, model: &ClusterModel) -> Result<PartialVector> {
        let numeric: BTreeMap<String, f64> = [
            ("t_max", self.t_max),
            ("t_min", self.t_min),
            ("t_avg", self.t_avg),
            ("l_avg", self.l_avg),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let labels: BTreeMap<String, String> =
            [("weekday".to_string(), if self.weekday { "Y" } else { "N" }.to_string())].into();
        encode_partial(&numeric, &labels, &model.schema, &model.norm_params)
    }
}

/// Schema features a [`DayQuery`] cannot supply.
pub fn unobserved_features(model: &ClusterModel) -> Vec<String> {
    let known: BTreeSet<&str> = ["t_max", "t_min", "t_avg", "l_avg", "weekday"].into();
    model
        .schema
        .features()
        .iter()
        .filter(|f| !known.contains(f.name.as_str()))
        .map(|f| f.name.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayEstimate {
    pub query: DayQuery,
    pub max_top_oil_c: f64,
    pub life_loss_days: f64,
    pub far_flag: bool,
}

/// Estimated maximum top-oil temperature and daily life loss for each query
/// day at a transformer serving `services` customers.
pub fn estimate_days(
    days: &[DayQuery],
    model: &ClusterModel,
    spec: &TransformerSpec,
    services: usize,
    guard: FarGuard,
) -> Result<Vec<DayEstimate>> {
    let missing = unobserved_features(model);
    if !missing.is_empty() {
        log::warn!(
            "query days lack {}; distances use the remaining features only",
            missing.join(", ")
        );
    }
    let outcomes = ClusterOutcomes::compute(spec, model, services)?;
    days.par_iter()
        .map(|day| {
            let query = day.encode(model)?;
            let top_oil = estimate_partial(&query, model, &outcomes.max_top_oil, guard)?;
            let loss = estimate_partial(&query, model, &outcomes.daily_loss, FarGuard::Lenient)?;
            Ok(DayEstimate {
                query: day.clone(),
                max_top_oil_c: top_oil.estimate,
                life_loss_days: loss.estimate,
                far_flag: top_oil.far_flag,
            })
        })
        .collect()
}

pub fn estimate_day_temperature(
    day: &DayQuery,
    model: &ClusterModel,
    services: usize,
    spec: &TransformerSpec,
    guard: FarGuard,
) -> Result<f64> {
    let values = per_cluster_max_top_oil(spec, model, services)?;
    Ok(estimate_partial(&day.encode(model)?, model, &values, guard)?.estimate)
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<DayQuery>> {
    let table = read_table(path.as_ref())?;
    table.expect_header(&QUERY_HEADER)?;
    table
        .rows
        .iter()
        .map(|(line, row)| {
            Ok(DayQuery {
                date: table.date(*line, row, 0)?,
                t_max: table.number(*line, row, 1)?,
                t_min: table.number(*line, row, 2)?,
                t_avg: table.number(*line, row, 3)?,
                l_avg: table.number(*line, row, 4)?,
                weekday: table.flag(*line, row, 5)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riskassess::tests::model_with_profiles;
    use crate::thermal::tests::spec_25kva;
    use crate::thermal::HOURS;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn map(pairs: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        pairs.iter().copied().collect()
    }

    fn three_level_model() -> ClusterModel {
        model_with_profiles(
            &[
                ([0.6; HOURS], [15.0; HOURS]),
                ([1.0; HOURS], [15.0; HOURS]),
                ([1.4; HOURS], [15.0; HOURS]),
            ],
            5,
        )
    }

    fn day(l_avg: f64) -> DayQuery {
        DayQuery {
            date: NaiveDate::from_ymd_opt(2016, 6, 1).unwrap(),
            t_max: 25.0,
            t_min: 10.0,
            t_avg: 17.0,
            l_avg,
            weekday: true,
        }
    }

    #[test]
    fn hand_normalized_weights() {
        let (est, w, exact) = inverse_distance_weights(
            &map(&[(1, 1.0), (2, 2.0), (3, 2.0)]),
            &map(&[(1, 100.0), (2, 110.0), (3, 120.0)]),
        )
        .unwrap();
        assert_abs_diff_eq!(est, 107.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w[&1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w[&2], 0.25, epsilon = 1e-12);
        assert_eq!(exact, None);

        let (est, _, _) =
            inverse_distance_weights(&map(&[(1, 0.3), (2, 0.3)]), &map(&[(1, 100.0), (2, 120.0)])).unwrap();
        assert_abs_diff_eq!(est, 110.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_distance_returns_that_value() {
        let (est, w, exact) =
            inverse_distance_weights(&map(&[(1, 0.0), (2, 1.0)]), &map(&[(1, 97.25), (2, 120.0)])).unwrap();
        assert_eq!(est, 97.25);
        assert_eq!(exact, Some(1));
        assert_eq!(w[&2], 0.0);
    }

    #[test]
    fn value_keys_must_cover_every_cluster() {
        let err = inverse_distance_weights(&map(&[(1, 1.0), (2, 1.0)]), &map(&[(1, 1.0)])).unwrap_err();
        assert!(matches!(err, Error::KeyMismatch(_)));
    }

    #[test]
    fn energy_to_average_load() {
        assert_eq!(avg_load_from_energy(&[24.0], 1).unwrap(), 1.0);
        assert_eq!(avg_load_from_energy(&[24.0; 10], 10).unwrap(), 1.0);
        assert_eq!(avg_load_from_energy(&[0.0; 4], 4).unwrap(), 0.0);
        assert!(matches!(avg_load_from_energy(&[], 0), Err(Error::ZeroServices)));
        assert!(avg_load_from_energy(&[1.0], 2).is_err());
    }

    #[test]
    fn centroid_queries_are_exact() {
        let model = three_level_model();
        let outcomes = ClusterOutcomes::compute(&spec_25kva(), &model, 15).unwrap();
        for (i, c) in model.clusters.iter().enumerate() {
            let query = day(model.norm_params.denormalize(0, c.centroid.continuous[0]));
            let r = estimate_partial(
                &query.encode(&model).unwrap(),
                &model,
                &outcomes.max_top_oil,
                FarGuard::Strict,
            )
            .unwrap();
            assert_eq!(r.estimate, outcomes.max_top_oil[&(i + 1)]);
        }
    }

    #[test]
    fn estimate_rises_with_average_load() {
        // with three or more clusters a convex value curve dips at interior centroids
        let model = model_with_profiles(&[([0.6; HOURS], [15.0; HOURS]), ([1.4; HOURS], [15.0; HOURS])], 5);
        let spec = spec_25kva();
        let lo = model.clusters[0].centroid.continuous[0];
        let hi = model.clusters[1].centroid.continuous[0];
        let mut previous = f64::NEG_INFINITY;
        for step in 0..=40 {
            let l = lo + (hi - lo) * step as f64 / 40.0;
            let t = estimate_day_temperature(&day(l), &model, 15, &spec, FarGuard::Lenient).unwrap();
            assert!(t >= previous - 1e-12, "estimate fell at l_avg {l}");
            previous = t;
        }
    }

    #[test]
    fn strict_guard_refuses_far_queries() {
        let model = three_level_model();
        let spec = spec_25kva();
        let far = day(50.0);
        let err = estimate_day_temperature(&far, &model, 15, &spec, FarGuard::Strict).unwrap_err();
        assert!(matches!(err, Error::FarFromAllClusters { .. }));
        let rows = estimate_days(&[far], &model, &spec, 15, FarGuard::Lenient).unwrap();
        assert!(rows[0].far_flag);
    }

    #[test]
    fn seven_queries_give_seven_rows() {
        let model = three_level_model();
        let days: Vec<DayQuery> = (0..7).map(|i| day(0.1 * i as f64)).collect();
        let rows = estimate_days(&days, &model, &spec_25kva(), 15, FarGuard::Lenient).unwrap();
        assert_eq!(rows.len(), 7);
        assert!(rows.iter().zip(&days).all(|(r, d)| &r.query == d));
    }

    #[test]
    fn query_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        std::fs::write(
            &path,
            "date,t_max_c,t_min_c,t_avg_c,l_avg_kva,weekday\n2016-06-01,21.53,8.12,14.20,0.97,Y\n",
        )
        .unwrap();
        let q = load_queries(&path).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].l_avg, 0.97);
        assert!(q[0].weekday);
        std::fs::write(
            &path,
            "date,t_max_c,t_min_c,t_avg_c,l_avg_kva,weekday\n2016-06-01,21.53,8.12,14.20,0.97,maybe\n",
        )
        .unwrap();
        assert!(matches!(load_queries(&path), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn convex_combination(
            pairs in prop::collection::vec((1e-6f64..10.0, -50.0f64..150.0), 1..12),
        ) {
            let distances: BTreeMap<usize, f64> = pairs.iter().enumerate().map(|(i, p)| (i + 1, p.0)).collect();
            let values: BTreeMap<usize, f64> = pairs.iter().enumerate().map(|(i, p)| (i + 1, p.1)).collect();
            let (est, w, _) = inverse_distance_weights(&distances, &values).unwrap();
            prop_assert!((w.values().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w.values().all(|v| *v >= 0.0));
            let lo = values.values().copied().fold(f64::INFINITY, f64::min);
            let hi = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(est >= lo - 1e-9 && est <= hi + 1e-9);
        }
    }
}
