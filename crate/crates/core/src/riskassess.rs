//! Loading thresholds, impact ranking and service-count limits derived from
//! cluster profiles.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aging::{daily_life_loss, economic_loss};
use crate::clustering::{month_cluster_matrix, ClusterModel, ClusterProfile, MonthClusterMatrix};
use crate::error::{Error, Result};
use crate::thermal::{check_limits, simulate_day, DayProfile, LimitVerdict, TransformerSpec, HOURS};

pub const DEFAULT_SCALE_UPPER: f64 = 16.0;
pub const DEFAULT_SCALE_TOLERANCE: f64 = 0.005;
pub const DEFAULT_BUDGET: f64 = 500.0;

/// Slack allowed when checking that study columns never decrease with N.
const MONOTONE_SLACK: f64 = 1e-9;

pub fn default_n_range() -> RangeInclusive<usize> {
    1..=40
}

/// Bracket and resolution of the peak-loading bisection, per unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSearch {
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        ThresholdSearch {
            lower: 0.0,
            upper: DEFAULT_SCALE_UPPER,
            tolerance: DEFAULT_SCALE_TOLERANCE,
        }
    }
}

impl ThresholdSearch {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lower.is_finite()
            && self.upper.is_finite()
            && self.lower >= 0.0
            && self.upper > self.lower
            && self.tolerance > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "threshold search needs 0 <= lower < upper and tolerance > 0, got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingLimit {
    TopOil,
    Hotspot,
    /// Both limits still hold at the top of the search bracket.
    ScaleCap,
}

impl BindingLimit {
    pub fn label(self) -> &'static str {
        match self {
            BindingLimit::TopOil => "top-oil",
            BindingLimit::Hotspot => "hotspot",
            BindingLimit::ScaleCap => "scale-cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub cluster_id: usize,
    pub max_avg_load_pu: f64,
    pub max_peak_load_pu: f64,
    pub binding_limit: BindingLimit,
    /// Peak temperatures at the threshold.
    pub top_oil_c: f64,
    pub hotspot_c: f64,
    /// 1 is the most restrictive cluster; 0 until ranked.
    pub impact_rank: usize,
}

fn profile_at_scale(shape: &[f64; HOURS], ambient: &[f64; HOURS], scale: f64) -> Result<DayProfile> {
    let load: Vec<f64> = shape.iter().map(|v| v * scale).collect();
    DayProfile::new(ambient, &load)
}

fn verdict_at(
    spec: &TransformerSpec,
    shape: &[f64; HOURS],
    ambient: &[f64; HOURS],
    scale: f64,
) -> Result<LimitVerdict> {
    let trace = simulate_day(spec, &profile_at_scale(shape, ambient, scale)?)?;
    Ok(check_limits(spec, &trace))
}

/// Largest peak per-unit loading of the profile's shape that keeps both
/// temperature limits. `load` may be in any unit; only its shape matters.
pub fn loading_threshold(
    spec: &TransformerSpec,
    cluster_id: usize,
    load: &[f64; HOURS],
    ambient: &[f64; HOURS],
    search: &ThresholdSearch,
) -> Result<ThresholdResult> {
    spec.validate()?;
    search.validate()?;
    let peak = load.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || load.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidProfile(format!(
            "cluster {cluster_id}: load profile must be nonnegative with a positive peak"
        )));
    }
    let shape = load.map(|v| v / peak);
    let mean_shape = shape.iter().sum::<f64>() / HOURS as f64;

    let at_lower = verdict_at(spec, &shape, ambient, search.lower)?;
    if !at_lower.within_limits {
        return Err(Error::NoFeasibleScale { cluster_id });
    }
    let at_upper = verdict_at(spec, &shape, ambient, search.upper)?;
    let (scale, verdict, binding) = if at_upper.within_limits {
        (search.upper, at_upper, BindingLimit::ScaleCap)
    } else {
        let (mut lo, mut hi) = (search.lower, search.upper);
        let mut lo_verdict = at_lower;
        let mut hi_verdict = at_upper;
        // halving the tolerance keeps lo + tolerance strictly past hi under rounding
        while hi - lo > 0.5 * search.tolerance {
            let mid = 0.5 * (lo + hi);
            let v = verdict_at(spec, &shape, ambient, mid)?;
            if v.within_limits {
                lo = mid;
                lo_verdict = v;
            } else {
                hi = mid;
                hi_verdict = v;
            }
        }
        let binding = if hi_verdict.top_oil_exceeded {
            BindingLimit::TopOil
        } else {
            BindingLimit::Hotspot
        };
        (lo, lo_verdict, binding)
    };

    Ok(ThresholdResult {
        cluster_id,
        max_avg_load_pu: scale * mean_shape,
        max_peak_load_pu: scale,
        binding_limit: binding,
        top_oil_c: verdict.worst_top_oil,
        hotspot_c: verdict.worst_hotspot,
        impact_rank: 0,
    })
}

/// Fills `impact_rank` by ascending peak threshold, ties broken by cluster
/// id. The output is ordered by cluster id.
pub fn rank_impact(mut results: Vec<ThresholdResult>) -> Vec<ThresholdResult> {
    results.sort_by(|a, b| {
        a.max_peak_load_pu
            .total_cmp(&b.max_peak_load_pu)
            .then(a.cluster_id.cmp(&b.cluster_id))
    });
    for (i, r) in results.iter_mut().enumerate() {
        r.impact_rank = i + 1;
    }
    results.sort_by_key(|r| r.cluster_id);
    results
}

fn profiles_of(model: &ClusterModel) -> Result<Vec<&ClusterProfile>> {
    model
        .clusters
        .iter()
        .map(|c| {
            model.profile(c.id).ok_or_else(|| {
                Error::InvalidProfile(format!(
                    "cluster {} has no 24-hour profile; the model was trained without hourly meter data",
                    c.id
                ))
            })
        })
        .collect()
}

/// Ranked thresholds for every cluster of the model.
pub fn cluster_thresholds(
    spec: &TransformerSpec,
    model: &ClusterModel,
    search: &ThresholdSearch,
) -> Result<Vec<ThresholdResult>> {
    let results = profiles_of(model)?
        .par_iter()
        .map(|p| loading_threshold(spec, p.cluster_id, &p.load_kva, &p.ambient_c, search))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_impact(results))
}

/// Transformer-level day for `services` customers sharing a cluster profile.
pub fn scaled_day(spec: &TransformerSpec, profile: &ClusterProfile, services: usize) -> Result<DayProfile> {
    let load: Vec<f64> = profile
        .load_kva
        .iter()
        .map(|kva| services as f64 * kva / spec.rated_kva)
        .collect();
    DayProfile::new(&profile.ambient_c, &load)
}

fn check_n_range(n_range: &RangeInclusive<usize>) -> Result<Vec<usize>> {
    let values: Vec<usize> = n_range.clone().collect();
    if values.is_empty() {
        return Err(Error::Config(format!(
            "service count range {}..{} is empty",
            n_range.start(),
            n_range.end()
        )));
    }
    Ok(values)
}

/// Simulated extremes and daily loss for every (cluster, N) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceGrid {
    pub n_values: Vec<usize>,
    pub cluster_ids: Vec<usize>,
    /// Indexed `[cluster][n]`.
    pub top_oil: Vec<Vec<f64>>,
    pub hotspot: Vec<Vec<f64>>,
    pub daily_loss: Vec<Vec<f64>>,
}

impl ServiceGrid {
    pub fn compute(spec: &TransformerSpec, model: &ClusterModel, n_range: RangeInclusive<usize>) -> Result<Self> {
        spec.validate()?;
        let n_values = check_n_range(&n_range)?;
        let profiles = profiles_of(model)?;
        let cells: Vec<(usize, usize)> = (0..profiles.len())
            .flat_map(|c| (0..n_values.len()).map(move |j| (c, j)))
            .collect();
        let results = cells
            .par_iter()
            .map(|&(c, j)| {
                let trace = simulate_day(spec, &scaled_day(spec, profiles[c], n_values[j])?)?;
                Ok((trace.max_top_oil(), trace.max_hotspot(), daily_life_loss(&trace)))
            })
            .collect::<Result<Vec<_>>>()?;

        let width = n_values.len();
        let column = |pick: fn(&(f64, f64, f64)) -> f64| -> Vec<Vec<f64>> {
            results
                .chunks(width)
                .map(|row| row.iter().map(pick).collect())
                .collect()
        };
        let grid = ServiceGrid {
            cluster_ids: profiles.iter().map(|p| p.cluster_id).collect(),
            top_oil: column(|r| r.0),
            hotspot: column(|r| r.1),
            daily_loss: column(|r| r.2),
            n_values,
        };
        grid.check_monotone()?;
        Ok(grid)
    }

    fn check_monotone(&self) -> Result<()> {
        for (name, table) in [
            ("top-oil", &self.top_oil),
            ("hotspot", &self.hotspot),
            ("daily loss", &self.daily_loss),
        ] {
            for (c, row) in table.iter().enumerate() {
                for j in 1..row.len() {
                    if row[j] < row[j - 1] - MONOTONE_SLACK * row[j - 1].abs().max(1.0) {
                        return Err(Error::Invariant(format!(
                            "{name} of cluster {} falls from {} to {} between N={} and N={}",
                            self.cluster_ids[c],
                            row[j - 1],
                            row[j],
                            self.n_values[j - 1],
                            self.n_values[j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn column_max(table: &[Vec<f64>], width: usize) -> Vec<f64> {
    (0..width)
        .map(|j| table.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureStudy {
    pub n_values: Vec<usize>,
    pub cluster_ids: Vec<usize>,
    pub top_oil: Vec<Vec<f64>>,
    pub hotspot: Vec<Vec<f64>>,
    /// Worst cluster per N.
    pub max_top_oil: Vec<f64>,
    pub max_hotspot: Vec<f64>,
    pub top_oil_limit: f64,
    pub hotspot_limit: f64,
    /// Largest N whose worst cluster keeps both limits; `None` if even the
    /// smallest N fails.
    pub max_services: Option<usize>,
}

impl TemperatureStudy {
    pub fn from_grid(spec: &TransformerSpec, grid: &ServiceGrid) -> Self {
        let width = grid.n_values.len();
        let max_top_oil = column_max(&grid.top_oil, width);
        let max_hotspot = column_max(&grid.hotspot, width);
        let max_services = (0..width)
            .filter(|&j| max_top_oil[j] <= spec.top_oil_limit && max_hotspot[j] <= spec.hotspot_limit)
            .map(|j| grid.n_values[j])
            .max();
        TemperatureStudy {
            n_values: grid.n_values.clone(),
            cluster_ids: grid.cluster_ids.clone(),
            top_oil: grid.top_oil.clone(),
            hotspot: grid.hotspot.clone(),
            max_top_oil,
            max_hotspot,
            top_oil_limit: spec.top_oil_limit,
            hotspot_limit: spec.hotspot_limit,
            max_services,
        }
    }
}

pub fn max_services_by_temperature(
    spec: &TransformerSpec,
    model: &ClusterModel,
    n_range: RangeInclusive<usize>,
) -> Result<TemperatureStudy> {
    let grid = ServiceGrid::compute(spec, model, n_range)?;
    Ok(TemperatureStudy::from_grid(spec, &grid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifeLossStudy {
    pub n_values: Vec<usize>,
    pub cluster_ids: Vec<usize>,
    /// Days per transformer spent in each cluster over the study window.
    pub member_days: Vec<f64>,
    /// Aging days per calendar day, `[cluster][n]`.
    pub daily_loss: Vec<Vec<f64>>,
    pub total_days: Vec<f64>,
    pub annual_days: Vec<f64>,
    pub economic_loss: Vec<f64>,
    pub years: f64,
    pub replacement_cost: f64,
    pub budget: f64,
    /// Largest N with economic loss within budget.
    pub max_services: Option<usize>,
}

impl LifeLossStudy {
    /// Totals, annual figures and economic loss from per-cluster daily
    /// losses and day counts.
    pub fn from_losses(
        n_values: Vec<usize>,
        cluster_ids: Vec<usize>,
        member_days: Vec<f64>,
        daily_loss: Vec<Vec<f64>>,
        years: f64,
        replacement_cost: f64,
        budget: f64,
    ) -> Result<Self> {
        if member_days.len() != cluster_ids.len()
            || daily_loss.len() != cluster_ids.len()
            || daily_loss.iter().any(|row| row.len() != n_values.len())
        {
            return Err(Error::KeyMismatch(format!(
                "{} clusters, {} day counts, loss rows of lengths {:?} for {} service counts",
                cluster_ids.len(),
                member_days.len(),
                daily_loss.iter().map(Vec::len).collect::<Vec<_>>(),
                n_values.len()
            )));
        }
        if !(years.is_finite() && years > 0.0) {
            return Err(Error::Config(format!("years must be > 0, got {years}")));
        }
        let total_days: Vec<f64> = (0..n_values.len())
            .map(|j| daily_loss.iter().zip(&member_days).map(|(row, d)| row[j] * d).sum())
            .collect();
        let annual_days: Vec<f64> = total_days.iter().map(|t| t / years).collect();
        let economic: Vec<f64> = annual_days
            .iter()
            .map(|a| economic_loss(*a, replacement_cost))
            .collect();
        let max_services = (0..n_values.len())
            .filter(|&j| economic[j] <= budget)
            .map(|j| n_values[j])
            .max();
        Ok(LifeLossStudy {
            n_values,
            cluster_ids,
            member_days,
            daily_loss,
            total_days,
            annual_days,
            economic_loss: economic,
            years,
            replacement_cost,
            budget,
            max_services,
        })
    }

    pub fn from_grid(
        spec: &TransformerSpec,
        model: &ClusterModel,
        grid: &ServiceGrid,
        budget: f64,
        years: f64,
    ) -> Result<Self> {
        let days: BTreeMap<usize, f64> = model.member_day_counts();
        let member_days = grid
            .cluster_ids
            .iter()
            .map(|id| {
                days.get(id)
                    .copied()
                    .ok_or_else(|| Error::KeyMismatch(format!("no day count for cluster {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_losses(
            grid.n_values.clone(),
            grid.cluster_ids.clone(),
            member_days,
            grid.daily_loss.clone(),
            years,
            spec.replacement_cost,
            budget,
        )
    }
}

pub fn max_services_by_life(
    spec: &TransformerSpec,
    model: &ClusterModel,
    n_range: RangeInclusive<usize>,
    annual_budget: f64,
    years: f64,
) -> Result<LifeLossStudy> {
    let grid = ServiceGrid::compute(spec, model, n_range)?;
    LifeLossStudy::from_grid(spec, model, &grid, annual_budget, years)
}

/// Study window in years implied by the model's member dates.
pub fn model_years(model: &ClusterModel) -> f64 {
    model.distinct_dates() as f64 / 365.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessOptions {
    pub search: ThresholdSearch,
    pub n_range: RangeInclusive<usize>,
    pub budget: f64,
    /// Defaults to the span of the model's member dates.
    pub years: Option<f64>,
}

impl Default for AssessOptions {
    fn default() -> Self {
        AssessOptions {
            search: ThresholdSearch::default(),
            n_range: default_n_range(),
            budget: DEFAULT_BUDGET,
            years: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub thresholds: Vec<ThresholdResult>,
    pub months: MonthClusterMatrix,
    pub temperature: TemperatureStudy,
    pub life: LifeLossStudy,
}

/// Thresholds, month distribution and both service-count studies.
pub fn assess(spec: &TransformerSpec, model: &ClusterModel, options: &AssessOptions) -> Result<AssessmentReport> {
    let years = options.years.unwrap_or_else(|| model_years(model));
    let thresholds = cluster_thresholds(spec, model, &options.search)?;
    let grid = ServiceGrid::compute(spec, model, options.n_range.clone())?;
    Ok(AssessmentReport {
        thresholds,
        months: month_cluster_matrix(model),
        temperature: TemperatureStudy::from_grid(spec, &grid),
        life: LifeLossStudy::from_grid(spec, model, &grid, options.budget, years)?,
    })
}
