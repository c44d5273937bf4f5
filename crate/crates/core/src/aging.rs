//! Insulation aging from hottest-spot temperature, accumulated life loss,
//! and the equivalent economic loss of that life.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::{ThermalTrace, HOURS};

/// Normal insulation life in days at the 110 °C reference hottest-spot.
pub const NORMAL_LIFE_DAYS: f64 = 7500.0;

/// Arrhenius constant of the aging acceleration factor, K.
const AGING_CONSTANT: f64 = 15000.0;
/// Reference hottest-spot in kelvin (110 °C).
const REFERENCE_KELVIN: f64 = 383.0;

/// Aging acceleration factor relative to a 110 °C hottest spot.
pub fn aging_acceleration(hotspot_c: f64) -> f64 {
    (AGING_CONSTANT / REFERENCE_KELVIN - AGING_CONSTANT / (hotspot_c + 273.0)).exp()
}

/// Effective aging days per calendar day: the mean of the hourly factors.
pub fn equivalent_aging(hourly_faa: &[f64; HOURS]) -> f64 {
    hourly_faa.iter().sum::<f64>() / HOURS as f64
}

pub fn hourly_aging(trace: &ThermalTrace) -> [f64; HOURS] {
    trace.hotspot.map(aging_acceleration)
}

/// Life loss in days per calendar day for one simulated day.
pub fn daily_life_loss(trace: &ThermalTrace) -> f64 {
    equivalent_aging(&hourly_aging(trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifeLoss {
    pub total_days: f64,
    pub annual_days: f64,
}

/// Σ loss × days over clusters, and its per-year average.
pub fn accumulate_life_loss(
    per_cluster_daily_loss: &BTreeMap<usize, f64>,
    member_day_counts: &BTreeMap<usize, f64>,
    years: f64,
) -> Result<LifeLoss> {
    if !per_cluster_daily_loss.keys().eq(member_day_counts.keys()) {
        return Err(Error::KeyMismatch(format!(
            "losses cover {:?}, day counts cover {:?}",
            per_cluster_daily_loss.keys().collect::<Vec<_>>(),
            member_day_counts.keys().collect::<Vec<_>>()
        )));
    }
    if !(years.is_finite() && years > 0.0) {
        return Err(Error::Config(format!("years must be > 0, got {years}")));
    }
    let total_days = per_cluster_daily_loss
        .iter()
        .map(|(id, loss)| loss * member_day_counts[id])
        .sum::<f64>();
    Ok(LifeLoss {
        total_days,
        annual_days: total_days / years,
    })
}

/// Yearly cost of consumed insulation life.
pub fn economic_loss(annual_loss_days: f64, replacement_cost: f64) -> f64 {
    annual_loss_days / NORMAL_LIFE_DAYS * replacement_cost
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingResult {
    pub hourly_faa: [f64; HOURS],
    pub daily_feqa: f64,
    pub life_loss_days: f64,
    pub annual_loss_days: f64,
    pub economic_loss: f64,
}

impl AgingResult {
    /// Aging of a trace repeated for `window_days` calendar days spread over `years`.
    pub fn from_trace(trace: &ThermalTrace, window_days: f64, years: f64, replacement_cost: f64) -> Result<Self> {
        if !(years.is_finite() && years > 0.0) {
            return Err(Error::Config(format!("years must be > 0, got {years}")));
        }
        let hourly_faa = hourly_aging(trace);
        let daily_feqa = equivalent_aging(&hourly_faa);
        let life_loss_days = daily_feqa * window_days;
        let annual_loss_days = life_loss_days / years;
        Ok(AgingResult {
            hourly_faa,
            daily_feqa,
            life_loss_days,
            annual_loss_days,
            economic_loss: economic_loss(annual_loss_days, replacement_cost),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn acceleration_anchors() {
        assert_relative_eq!(aging_acceleration(110.0), 1.0, max_relative = 1e-12);
        // exp(15000/383 - 15000/393), exp(15000/383 - 15000/373)
        assert_relative_eq!(aging_acceleration(120.0), 2.7089251438281656, max_relative = 1e-10);
        assert_relative_eq!(aging_acceleration(100.0), 0.34994252573193724, max_relative = 1e-10);
    }

    #[test]
    fn acceleration_is_strictly_increasing() {
        let mut prev = aging_acceleration(-40.0);
        for t in -39..=250 {
            let next = aging_acceleration(t as f64);
            assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn equivalent_aging_is_the_mean() {
        assert_eq!(equivalent_aging(&[1.0; HOURS]), 1.0);
        assert_eq!(equivalent_aging(&[2.0; HOURS]), 2.0);
        let mut split = [0.5; HOURS];
        split[12..].fill(1.5);
        assert_abs_diff_eq!(equivalent_aging(&split), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn life_loss_accumulation() {
        let losses = BTreeMap::from([(1, 1.0)]);
        let days = BTreeMap::from([(1, 365.0)]);
        let out = accumulate_life_loss(&losses, &days, 1.0).unwrap();
        assert_eq!((out.total_days, out.annual_days), (365.0, 365.0));

        let days = BTreeMap::from([(2, 365.0)]);
        assert!(matches!(
            accumulate_life_loss(&losses, &days, 1.0),
            Err(Error::KeyMismatch(_))
        ));
    }

    #[test]
    fn economic_loss_values() {
        assert_abs_diff_eq!(economic_loss(684.0, 5000.0), 456.0, epsilon = 1e-9);
        assert_abs_diff_eq!(economic_loss(3911.9, 5000.0), 2607.9333, epsilon = 1e-3);
        assert_eq!(economic_loss(7500.0, 4321.0), 4321.0);
        assert_eq!(economic_loss(2.0 * 684.0, 5000.0), 2.0 * economic_loss(684.0, 5000.0));
        assert_eq!(economic_loss(684.0, 10000.0), 2.0 * economic_loss(684.0, 5000.0));
    }

    #[test]
    fn aging_result_identities() {
        let mut trace = ThermalTrace {
            top_oil: [80.0; HOURS],
            hotspot: [110.0; HOURS],
            top_oil_rise: [0.0; HOURS],
            hotspot_rise: [0.0; HOURS],
            iterations: 2,
        };
        trace.hotspot[18] = 130.0;
        let r = AgingResult::from_trace(&trace, 365.0, 1.0, 5000.0).unwrap();
        assert!(r.hourly_faa.iter().all(|&f| f > 0.0));
        assert_eq!(r.daily_feqa, equivalent_aging(&r.hourly_faa));
        assert_eq!(r.economic_loss, r.annual_loss_days / 7500.0 * 5000.0);
    }
}
