//! Seeded synthetic weather, calendar and meter files.
//!
//! Ambient temperature is a seasonal cosine (coldest mid-January) plus a
//! diurnal cosine (warmest mid-afternoon), an AR(1) daily anomaly and hourly
//! noise. Service load is a per-service scale times a base level with
//! morning/evening peaks, heating and cooling terms linear in the distance of
//! the hour's temperature from balance points, a non-working-day factor and
//! hourly noise.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::HOURS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterFormat {
    Hourly,
    DailyEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub services: usize,
    pub start_date: NaiveDate,
    pub days: usize,
    pub meter_format: MeterFormat,

    pub mean_temp_c: f64,
    pub seasonal_amplitude_c: f64,
    pub diurnal_amplitude_c: f64,
    pub daily_anomaly_std_c: f64,
    pub hourly_noise_std_c: f64,

    pub base_kw: f64,
    /// Relative spread of the per-service load scale, uniform in ±spread.
    pub service_spread: f64,
    /// Relative height of the morning and evening peaks.
    pub diurnal_load_amplitude: f64,
    pub heating_kw_per_c: f64,
    pub heating_balance_c: f64,
    pub cooling_kw_per_c: f64,
    pub cooling_balance_c: f64,
    /// Load multiplier on weekends and holidays.
    pub weekend_factor: f64,
    pub load_noise_std_kw: f64,
    /// Statutory holidays as (month, day).
    pub holidays: Vec<(u32, u32)>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            services: 20,
            start_date: NaiveDate::from_ymd_opt(2014, 1, 1).expect("valid date"),
            days: 730,
            meter_format: MeterFormat::Hourly,
            mean_temp_c: 4.0,
            seasonal_amplitude_c: 14.0,
            diurnal_amplitude_c: 5.0,
            daily_anomaly_std_c: 2.5,
            hourly_noise_std_c: 0.5,
            base_kw: 1.1,
            service_spread: 0.25,
            diurnal_load_amplitude: 0.6,
            heating_kw_per_c: 0.025,
            heating_balance_c: 12.0,
            cooling_kw_per_c: 0.09,
            cooling_balance_c: 21.0,
            weekend_factor: 1.15,
            load_noise_std_kw: 0.08,
            holidays: vec![(1, 1), (7, 1), (9, 7), (12, 25), (12, 26)],
        }
    }
}

impl SynthConfig {
    /// No noise and no temperature, time-of-day or day-type coupling.
    pub fn flat_load(self) -> Self {
        SynthConfig {
            diurnal_load_amplitude: 0.0,
            heating_kw_per_c: 0.0,
            cooling_kw_per_c: 0.0,
            weekend_factor: 1.0,
            load_noise_std_kw: 0.0,
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        if self.services == 0 || self.days == 0 {
            return Err(Error::Config("synthetic services and days must be > 0".into()));
        }
        for (name, v) in [
            ("daily_anomaly_std_c", self.daily_anomaly_std_c),
            ("hourly_noise_std_c", self.hourly_noise_std_c),
            ("load_noise_std_kw", self.load_noise_std_kw),
            ("base_kw", self.base_kw),
            ("weekend_factor", self.weekend_factor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.service_spread) {
            return Err(Error::Config("service_spread must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// CSV text of the three generated files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthTables {
    pub weather: String,
    pub meter: String,
    pub calendar: String,
}

/// Morning (~7h) and evening (~19h) peaks, normalized to a daily mean of 1.
fn load_shape(amplitude: f64) -> [f64; HOURS] {
    let bump = |h: f64, centre: f64, width: f64| (-(h - centre).powi(2) / (2.0 * width * width)).exp();
    let raw: [f64; HOURS] = std::array::from_fn(|h| {
        let h = h as f64;
        1.0 + amplitude * (0.6 * bump(h, 7.5, 1.5) + bump(h, 19.0, 2.0) - 0.4 * bump(h, 3.5, 2.0))
    });
    let mean = raw.iter().sum::<f64>() / HOURS as f64;
    raw.map(|v| (v / mean).max(0.0))
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("validated standard deviation")
}

pub fn synth_tables(seed: u64, config: &SynthConfig) -> Result<SynthTables> {
    config.validate()?;
    let dates: Vec<NaiveDate> = config.start_date.iter_days().take(config.days).collect();
    if dates.len() != config.days {
        return Err(Error::Config("date range overflows the calendar".into()));
    }

    let mut weather_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut load_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66_D1CE_5EED);

    let anomaly_noise = normal(config.daily_anomaly_std_c);
    let hourly_noise = normal(config.hourly_noise_std_c);
    let mut anomaly = 0.0;
    let mut temps: Vec<[f64; HOURS]> = Vec::with_capacity(dates.len());
    for date in &dates {
        anomaly = 0.7 * anomaly + anomaly_noise.sample(&mut weather_rng);
        let season = -(2.0 * PI * (date.ordinal0() as f64 - 15.0) / 365.25).cos();
        let day: [f64; HOURS] = std::array::from_fn(|h| {
            let diurnal = -(2.0 * PI * (h as f64 - 3.0) / HOURS as f64).cos();
            let t = config.mean_temp_c
                + config.seasonal_amplitude_c * season
                + config.diurnal_amplitude_c * diurnal
                + anomaly
                + hourly_noise.sample(&mut weather_rng);
            t.clamp(-60.0, 60.0)
        });
        temps.push(day);
    }

    let working: Vec<bool> = dates
        .iter()
        .map(|d| {
            let weekday = !matches!(d.weekday(), Weekday::Sat | Weekday::Sun);
            (weekday, config.holidays.contains(&(d.month(), d.day())))
        })
        .map(|(weekday, holiday)| weekday && !holiday)
        .collect();

    let mut weather = String::from("date,hour,temp_c\n");
    for (date, day) in dates.iter().zip(&temps) {
        for (h, t) in day.iter().enumerate() {
            writeln!(weather, "{date},{h},{t:.2}").expect("string write");
        }
    }

    let mut calendar = String::from("date,is_weekday,is_holiday\n");
    for date in &dates {
        let weekday = !matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let holiday = config.holidays.contains(&(date.month(), date.day()));
        let yn = |b: bool| if b { 'Y' } else { 'N' };
        writeln!(calendar, "{date},{},{}", yn(weekday), yn(holiday)).expect("string write");
    }

    let shape = load_shape(config.diurnal_load_amplitude);
    let load_noise = normal(config.load_noise_std_kw);
    let mut meter = match config.meter_format {
        MeterFormat::Hourly => String::from("service_id,date,hour,kw\n"),
        MeterFormat::DailyEnergy => String::from("service_id,date,energy_kwh\n"),
    };
    for s in 0..config.services {
        let id = format!("S{:03}", s + 1);
        let scale = 1.0 + config.service_spread * load_rng.random_range(-1.0..=1.0);
        for ((date, day), &work) in dates.iter().zip(&temps).zip(&working) {
            let day_factor = if work { 1.0 } else { config.weekend_factor };
            let mut energy = 0.0;
            for h in 0..HOURS {
                let t = day[h];
                let thermal = config.heating_kw_per_c * (config.heating_balance_c - t).max(0.0)
                    + config.cooling_kw_per_c * (t - config.cooling_balance_c).max(0.0);
                let kw = (scale * (config.base_kw * shape[h] * day_factor + thermal)
                    + load_noise.sample(&mut load_rng))
                .max(0.0);
                match config.meter_format {
                    MeterFormat::Hourly => writeln!(meter, "{id},{date},{h},{kw:.3}").expect("string write"),
                    MeterFormat::DailyEnergy => energy += kw,
                }
            }
            if config.meter_format == MeterFormat::DailyEnergy {
                writeln!(meter, "{id},{date},{energy:.3}").expect("string write");
            }
        }
    }

    Ok(SynthTables {
        weather,
        meter,
        calendar,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFiles {
    pub weather: PathBuf,
    pub meter: PathBuf,
    pub calendar: PathBuf,
}

/// Writes `weather.csv`, `meter.csv` and `calendar.csv` into `out_dir`.
pub fn synth_dataset(seed: u64, config: &SynthConfig, out_dir: &Path) -> Result<SynthFiles> {
    let tables = synth_tables(seed, config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = SynthFiles {
        weather: out_dir.join("weather.csv"),
        meter: out_dir.join("meter.csv"),
        calendar: out_dir.join("calendar.csv"),
    };
    for (path, text) in [
        (&files.weather, &tables.weather),
        (&files.meter, &tables.meter),
        (&files.calendar, &tables.calendar),
    ] {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(files)
}
