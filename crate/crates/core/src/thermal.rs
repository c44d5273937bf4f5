//! Top-oil and winding hottest-spot temperature model for ONAN distribution
//! transformers (IEEE C57.91 exponential transient form), with the cyclic
//! 24-hour steady-state iteration.
//!
//! Each hour's rise relaxes exponentially from the previous hour's rise
//! toward the ultimate rise implied by that hour's load. Hour 1 starts from
//! a cold guess; the hour-24 result is fed back into hour 1 and the day is
//! swept again until no hourly rise moves by more than
//! [`CONVERGENCE_TOLERANCE`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS: usize = 24;

/// Largest hourly-rise change (°C) between consecutive sweeps accepted as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 0.01;

pub const MAX_SWEEPS: usize = 200;

/// Simulation timestep in hours.
pub const STEP_HOURS: f64 = 1.0;

pub const DEFAULT_EXPONENT: f64 = 0.8;
pub const DEFAULT_TOP_OIL_LIMIT_C: f64 = 120.0;
pub const DEFAULT_HOTSPOT_LIMIT_C: f64 = 200.0;

fn default_exponent() -> f64 {
    DEFAULT_EXPONENT
}

fn default_top_oil_limit() -> f64 {
    DEFAULT_TOP_OIL_LIMIT_C
}

fn default_hotspot_limit() -> f64 {
    DEFAULT_HOTSPOT_LIMIT_C
}

/// Nameplate and thermal constants of one transformer.
///
/// The serialized field names are the ones used by spec files on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerSpec {
    pub rated_kva: f64,
    /// Top-oil rise over ambient at rated load, °C.
    #[serde(rename = "top_oil_rise_rated_c")]
    pub top_oil_rise_rated: f64,
    /// Hottest-spot rise over top-oil at rated load, °C.
    #[serde(rename = "hotspot_differential_c")]
    pub hotspot_differential: f64,
    /// Load loss at rated load over no-load loss.
    pub loss_ratio: f64,
    #[serde(rename = "oil_time_constant_h")]
    pub oil_time_constant: f64,
    #[serde(rename = "winding_time_constant_h")]
    pub winding_time_constant: f64,
    #[serde(default = "default_exponent")]
    pub exponent_n: f64,
    #[serde(default = "default_exponent")]
    pub exponent_m: f64,
    #[serde(rename = "top_oil_limit_c", default = "default_top_oil_limit")]
    pub top_oil_limit: f64,
    #[serde(rename = "hotspot_limit_c", default = "default_hotspot_limit")]
    pub hotspot_limit: f64,
    /// Purchase plus installation cost.
    pub replacement_cost: f64,
}

impl TransformerSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rated_kva", self.rated_kva),
            ("top_oil_rise_rated_c", self.top_oil_rise_rated),
            ("hotspot_differential_c", self.hotspot_differential),
            ("loss_ratio", self.loss_ratio),
            ("oil_time_constant_h", self.oil_time_constant),
            ("winding_time_constant_h", self.winding_time_constant),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidSpec(format!("{name} must be > 0, got {value}")));
            }
        }
        for (name, value) in [("exponent_n", self.exponent_n), ("exponent_m", self.exponent_m)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::InvalidSpec(format!("{name} must be in (0, 1], got {value}")));
            }
        }
        if !(self.top_oil_limit.is_finite() && self.hotspot_limit.is_finite())
            || self.top_oil_limit >= self.hotspot_limit
        {
            return Err(Error::InvalidSpec(format!(
                "top_oil_limit_c ({}) must be below hotspot_limit_c ({})",
                self.top_oil_limit, self.hotspot_limit
            )));
        }
        if !(self.replacement_cost.is_finite() && self.replacement_cost >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "replacement_cost must be >= 0, got {}",
                self.replacement_cost
            )));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: TransformerSpec = serde_json::from_str(text).map_err(|e| Error::json("<spec>", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: TransformerSpec = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Hourly ambient temperature and per-unit load for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayProfile {
    ambient: [f64; HOURS],
    load_pu: [f64; HOURS],
}

impl DayProfile {
    pub fn new(ambient: &[f64], load_pu: &[f64]) -> Result<Self> {
        if ambient.len() != HOURS || load_pu.len() != HOURS {
            return Err(Error::InvalidProfile(format!(
                "expected {HOURS} hourly values, got {} ambient and {} load",
                ambient.len(),
                load_pu.len()
            )));
        }
        if let Some(bad) = ambient.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidProfile(format!("non-finite ambient {bad}")));
        }
        if let Some(bad) = load_pu.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::InvalidProfile(format!("load ratio must be >= 0, got {bad}")));
        }
        let mut profile = DayProfile {
            ambient: [0.0; HOURS],
            load_pu: [0.0; HOURS],
        };
        profile.ambient.copy_from_slice(ambient);
        profile.load_pu.copy_from_slice(load_pu);
        Ok(profile)
    }

    pub fn constant(ambient: f64, load_pu: f64) -> Result<Self> {
        Self::new(&[ambient; HOURS], &[load_pu; HOURS])
    }

    pub fn ambient(&self) -> &[f64; HOURS] {
        &self.ambient
    }

    pub fn load_pu(&self) -> &[f64; HOURS] {
        &self.load_pu
    }

    /// Same ambient, load multiplied pointwise by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let load: Vec<f64> = self.load_pu.iter().map(|k| k * factor).collect();
        Self::new(&self.ambient, &load)
    }
}

/// Converged 24-hour temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalTrace {
    pub top_oil: [f64; HOURS],
    pub hotspot: [f64; HOURS],
    pub top_oil_rise: [f64; HOURS],
    pub hotspot_rise: [f64; HOURS],
    pub iterations: usize,
}

impl ThermalTrace {
    pub fn max_top_oil(&self) -> f64 {
        self.top_oil.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_hotspot(&self) -> f64 {
        self.hotspot.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Steady-state top-oil rise over ambient for a sustained per-unit load.
pub fn ultimate_top_oil_rise(spec: &TransformerSpec, k_u: f64) -> f64 {
    let r = spec.loss_ratio;
    spec.top_oil_rise_rated * ((k_u * k_u * r + 1.0) / (r + 1.0)).powf(spec.exponent_n)
}

/// Steady-state hottest-spot rise over top-oil for a sustained per-unit load.
pub fn ultimate_hotspot_rise(spec: &TransformerSpec, k_u: f64) -> f64 {
    spec.hotspot_differential * k_u.powf(2.0 * spec.exponent_m)
}

/// First-order relaxation from `initial_rise` toward `ultimate_rise` over `dt` hours.
pub fn exponential_step(initial_rise: f64, ultimate_rise: f64, time_constant: f64, dt: f64) -> f64 {
    (ultimate_rise - initial_rise) * (1.0 - (-dt / time_constant).exp()) + initial_rise
}

/// Converged daily cycle starting from a 0 °C rise at hour 1.
pub fn simulate_day(spec: &TransformerSpec, profile: &DayProfile) -> Result<ThermalTrace> {
    simulate_day_from(spec, profile, 0.0, 0.0)
}

/// Converged daily cycle from arbitrary hour-1 initial rises.
pub fn simulate_day_from(
    spec: &TransformerSpec,
    profile: &DayProfile,
    initial_top_oil_rise: f64,
    initial_hotspot_rise: f64,
) -> Result<ThermalTrace> {
    let mut oil_ultimate = [0.0; HOURS];
    let mut winding_ultimate = [0.0; HOURS];
    for (h, &k) in profile.load_pu.iter().enumerate() {
        oil_ultimate[h] = ultimate_top_oil_rise(spec, k);
        winding_ultimate[h] = ultimate_hotspot_rise(spec, k);
    }

    let mut oil = [0.0; HOURS];
    let mut winding = [0.0; HOURS];
    let (mut oil_start, mut winding_start) = (initial_top_oil_rise, initial_hotspot_rise);
    let mut last_change = f64::INFINITY;

    for sweep in 1..=MAX_SWEEPS {
        let mut change: f64 = 0.0;
        let (mut oil_prev, mut winding_prev) = (oil_start, winding_start);
        for h in 0..HOURS {
            let o = exponential_step(oil_prev, oil_ultimate[h], spec.oil_time_constant, STEP_HOURS);
            let w = exponential_step(
                winding_prev,
                winding_ultimate[h],
                spec.winding_time_constant,
                STEP_HOURS,
            );
            change = change.max((o - oil[h]).abs()).max((w - winding[h]).abs());
            oil[h] = o;
            winding[h] = w;
            oil_prev = o;
            winding_prev = w;
        }
        if !change.is_finite() {
            break;
        }
        // sweep 1 has no predecessor to compare against
        if sweep > 1 && change < CONVERGENCE_TOLERANCE {
            return Ok(assemble(profile, oil, winding, sweep));
        }
        last_change = change;
        oil_start = oil[HOURS - 1];
        winding_start = winding[HOURS - 1];
    }
    Err(Error::NonConvergence {
        sweeps: MAX_SWEEPS,
        last_change,
    })
}

fn assemble(
    profile: &DayProfile,
    top_oil_rise: [f64; HOURS],
    hotspot_rise: [f64; HOURS],
    iterations: usize,
) -> ThermalTrace {
    let mut top_oil = [0.0; HOURS];
    let mut hotspot = [0.0; HOURS];
    for h in 0..HOURS {
        top_oil[h] = profile.ambient[h] + top_oil_rise[h];
        hotspot[h] = top_oil[h] + hotspot_rise[h];
    }
    ThermalTrace {
        top_oil,
        hotspot,
        top_oil_rise,
        hotspot_rise,
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitVerdict {
    pub within_limits: bool,
    pub worst_top_oil: f64,
    pub worst_hotspot: f64,
    pub top_oil_exceeded: bool,
    pub hotspot_exceeded: bool,
}

/// Compares the trace peaks to the spec's temperature limits (inclusive).
pub fn check_limits(spec: &TransformerSpec, trace: &ThermalTrace) -> LimitVerdict {
    let worst_top_oil = trace.max_top_oil();
    let worst_hotspot = trace.max_hotspot();
    let top_oil_exceeded = worst_top_oil > spec.top_oil_limit;
    let hotspot_exceeded = worst_hotspot > spec.hotspot_limit;
    LimitVerdict {
        within_limits: !top_oil_exceeded && !hotspot_exceeded,
        worst_top_oil,
        worst_hotspot,
        top_oil_exceeded,
        hotspot_exceeded,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn spec_25kva() -> TransformerSpec {
        TransformerSpec {
            rated_kva: 25.0,
            top_oil_rise_rated: 55.0,
            hotspot_differential: 25.0,
            loss_ratio: 4.0,
            oil_time_constant: 3.0,
            winding_time_constant: 0.1,
            exponent_n: 0.8,
            exponent_m: 0.8,
            top_oil_limit: 120.0,
            hotspot_limit: 200.0,
            replacement_cost: 5000.0,
        }
    }

    #[test]
    fn ultimate_top_oil_rise_values() {
        let spec = spec_25kva();
        assert_abs_diff_eq!(ultimate_top_oil_rise(&spec, 1.0), 55.0, epsilon = 1e-12);
        // 55 * (1/5)^0.8 and 55 * (17/5)^0.8, evaluated independently.
        assert_abs_diff_eq!(ultimate_top_oil_rise(&spec, 0.0), 15.177026276073363, epsilon = 1e-9);
        assert_abs_diff_eq!(ultimate_top_oil_rise(&spec, 2.0), 146.4016000147755, epsilon = 1e-9);
    }

    #[test]
    fn ultimate_hotspot_rise_values() {
        let spec = spec_25kva();
        assert_abs_diff_eq!(ultimate_hotspot_rise(&spec, 1.0), 25.0, epsilon = 1e-12);
        assert_eq!(ultimate_hotspot_rise(&spec, 0.0), 0.0);
        assert_abs_diff_eq!(ultimate_hotspot_rise(&spec, 2.0), 75.78582832551992, epsilon = 1e-9);
    }

    #[test]
    fn exponential_step_values() {
        assert_abs_diff_eq!(exponential_step(55.0, 55.0, 3.0, 1.0), 55.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exponential_step(0.0, 55.0, 3.0, 1.0), 15.59077791844159, epsilon = 1e-9);
        assert!(exponential_step(0.0, 55.0, 1e12, 1.0) < 1e-9);
    }

    #[test]
    fn rated_load_fixed_point() {
        let spec = spec_25kva();
        let trace = simulate_day(&spec, &DayProfile::constant(20.0, 1.0).unwrap()).unwrap();
        assert!(trace.iterations <= MAX_SWEEPS);
        for h in 0..HOURS {
            assert_abs_diff_eq!(trace.top_oil[h], 75.0, epsilon = 0.1);
            assert_abs_diff_eq!(trace.hotspot[h], 100.0, epsilon = 0.1);
        }
    }

    #[test]
    fn zero_load_has_no_hotspot_rise() {
        let spec = spec_25kva();
        let trace = simulate_day(&spec, &DayProfile::constant(20.0, 0.0).unwrap()).unwrap();
        for h in 0..HOURS {
            assert_eq!(trace.hotspot[h], trace.top_oil[h]);
        }
    }

    #[test]
    fn one_more_sweep_is_a_no_op() {
        let spec = spec_25kva();
        let load: Vec<f64> = (0..HOURS)
            .map(|h| 0.6 + 0.9 * (std::f64::consts::PI * (h as f64 - 6.0) / 12.0).sin().max(0.0))
            .collect();
        let ambient: Vec<f64> = (0..HOURS)
            .map(|h| 15.0 + 6.0 * ((h as f64 - 9.0) / 24.0 * std::f64::consts::TAU).sin())
            .collect();
        let profile = DayProfile::new(&ambient, &load).unwrap();
        let trace = simulate_day(&spec, &profile).unwrap();

        // Independent single sweep, written out from the transient formula.
        let mut oil = trace.top_oil_rise[HOURS - 1];
        let mut wind = trace.hotspot_rise[HOURS - 1];
        for (h, &k) in load.iter().enumerate() {
            let oil_u = 55.0 * ((k * k * 4.0 + 1.0) / 5.0f64).powf(0.8);
            let wind_u = 25.0 * k.powf(1.6);
            oil = oil_u + (oil - oil_u) * (-1.0f64 / 3.0).exp();
            wind = wind_u + (wind - wind_u) * (-1.0f64 / 0.1).exp();
            assert_abs_diff_eq!(oil, trace.top_oil_rise[h], epsilon = CONVERGENCE_TOLERANCE);
            assert_abs_diff_eq!(wind, trace.hotspot_rise[h], epsilon = CONVERGENCE_TOLERANCE);
        }
    }

    #[test]
    fn start_value_does_not_matter() {
        let spec = TransformerSpec {
            oil_time_constant: 8.0,
            ..spec_25kva()
        };
        let load: Vec<f64> = (0..HOURS).map(|h| 0.5 + h as f64 / 20.0).collect();
        let profile = DayProfile::new(&[10.0; HOURS], &load).unwrap();
        let cold = simulate_day_from(&spec, &profile, 0.0, 0.0).unwrap();
        let hot = simulate_day_from(&spec, &profile, 50.0, 50.0).unwrap();
        for h in 0..HOURS {
            assert_abs_diff_eq!(cold.top_oil[h], hot.top_oil[h], epsilon = 2.0 * CONVERGENCE_TOLERANCE);
            assert_abs_diff_eq!(cold.hotspot[h], hot.hotspot[h], epsilon = 2.0 * CONVERGENCE_TOLERANCE);
        }
    }

    #[test]
    fn assembly_identities_are_exact() {
        let spec = spec_25kva();
        let load: Vec<f64> = (0..HOURS).map(|h| (h % 7) as f64 * 0.3).collect();
        let ambient: Vec<f64> = (0..HOURS).map(|h| -5.0 + h as f64).collect();
        let profile = DayProfile::new(&ambient, &load).unwrap();
        let t = simulate_day(&spec, &profile).unwrap();
        for (h, a) in ambient.iter().enumerate() {
            assert_eq!(t.top_oil[h], a + t.top_oil_rise[h]);
            assert_eq!(t.hotspot[h], t.top_oil[h] + t.hotspot_rise[h]);
            assert!(t.hotspot[h] >= t.top_oil[h]);
        }
    }

    #[test]
    fn absurd_time_constant_fails_to_converge() {
        let spec = TransformerSpec {
            oil_time_constant: 2000.0,
            ..spec_25kva()
        };
        let err = simulate_day(&spec, &DayProfile::constant(20.0, 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { sweeps: MAX_SWEEPS, .. }));
    }

    fn trace_with_peaks(top: f64, hot: f64) -> ThermalTrace {
        let mut top_oil = [top - 10.0; HOURS];
        let mut hotspot = [hot - 10.0; HOURS];
        top_oil[17] = top;
        hotspot[18] = hot;
        ThermalTrace {
            top_oil,
            hotspot,
            top_oil_rise: [0.0; HOURS],
            hotspot_rise: [0.0; HOURS],
            iterations: 1,
        }
    }

    #[test]
    fn limit_checks() {
        let spec = spec_25kva();
        let ok = check_limits(&spec, &trace_with_peaks(116.0, 180.0));
        assert!(ok.within_limits);
        let hot = check_limits(&spec, &trace_with_peaks(125.0, 180.0));
        assert!(!hot.within_limits && hot.top_oil_exceeded && !hot.hotspot_exceeded);
        assert_eq!(hot.worst_top_oil, 125.0);
        assert!(check_limits(&spec, &trace_with_peaks(120.0, 200.0)).within_limits);
        assert!(!check_limits(&spec, &trace_with_peaks(119.0, 200.5)).within_limits);
    }

    #[test]
    fn spec_json_defaults_and_validation() {
        let spec = TransformerSpec::from_json_str(
            r#"{"rated_kva": 25, "top_oil_rise_rated_c": 55, "hotspot_differential_c": 25,
                "loss_ratio": 4, "oil_time_constant_h": 3, "winding_time_constant_h": 0.1,
                "replacement_cost": 5000}"#,
        )
        .unwrap();
        assert_eq!(spec, spec_25kva());

        let bad = TransformerSpec {
            top_oil_limit: 210.0,
            ..spec_25kva()
        };
        assert!(bad.validate().is_err());
        let bad = TransformerSpec {
            exponent_n: 1.2,
            ..spec_25kva()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(DayProfile::new(&[0.0; 23], &[0.0; 24]).is_err());
        let mut load = [1.0; HOURS];
        load[3] = -0.1;
        assert!(DayProfile::new(&[0.0; HOURS], &load).is_err());
    }
}
