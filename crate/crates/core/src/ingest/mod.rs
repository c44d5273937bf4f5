//! Weather, calendar and meter CSV ingestion into per-service, per-day
//! records, plus a seeded synthetic generator producing the same files.
//!
//! File formats (UTF-8, comma separated, header row mandatory, ISO dates):
//!
//! - `weather.csv`: `date,hour,temp_c` with hour 0-23
//! - `meter.csv`: `service_id,date,hour,kw` (interval meters) or
//!   `service_id,date,energy_kwh` (cumulative revenue meters)
//! - `calendar.csv`: `date,is_weekday,is_holiday` with `Y`/`N` flags
//!
//! Readings are local standard time. A day with at most
//! [`MAX_INTERPOLATED_HOURS`] missing hours is linearly filled and flagged;
//! with more missing it is dropped. A repeated hour (DST fall-back) keeps the
//! first reading and is flagged.

mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::clustering::MemberRef;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureSchema, FeatureVector};
use crate::thermal::HOURS;

pub use synth::{synth_dataset, synth_tables, MeterFormat, SynthConfig, SynthTables};

pub const MAX_INTERPOLATED_HOURS: usize = 2;

pub const WEATHER_HEADER: [&str; 3] = ["date", "hour", "temp_c"];
pub const METER_HOURLY_HEADER: [&str; 4] = ["service_id", "date", "hour", "kw"];
pub const METER_ENERGY_HEADER: [&str; 3] = ["service_id", "date", "energy_kwh"];
pub const CALENDAR_HEADER: [&str; 3] = ["date", "is_weekday", "is_holiday"];

const TEMPERATURE_RANGE: (f64, f64) = (-60.0, 60.0);

/// Raw 24-hour load (kVA) and ambient (°C) for one service-day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDay {
    pub load_kva: [f64; HOURS],
    pub ambient_c: [f64; HOURS],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Weather,
    Meter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFlag {
    Interpolated { source: Source, hours: Vec<u8> },
    DuplicateHour { source: Source, hour: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Fill up to [`MAX_INTERPOLATED_HOURS`] missing hours, drop days with more.
    Interpolate,
    /// Any incomplete day is an error.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub gap_policy: GapPolicy,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            gap_policy: GapPolicy::Interpolate,
        }
    }
}

/// Daily summary of one service on one date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub service_id: String,
    pub date: NaiveDate,
    pub t_max: f64,
    pub t_min: f64,
    pub t_avg: f64,
    /// Absent for energy-only meters.
    pub l_max: Option<f64>,
    pub l_min: Option<f64>,
    pub l_avg: f64,
    /// Working day that is not a statutory holiday.
    pub weekday: bool,
    pub profile: Option<RawDay>,
    pub flags: Vec<DataFlag>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<DailyRecord>,
    pub dropped_days: usize,
}

impl Dataset {
    pub fn service_count(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.service_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn date_count(&self) -> usize {
        self.records.iter().map(|r| r.date).collect::<BTreeSet<_>>().len()
    }

    /// Builds feature vectors for `schema`. Supported names: numeric `t_max`,
    /// `t_min`, `t_avg`, `l_max`, `l_min`, `l_avg`; nominal `weekday` with
    /// statuses `Y` and `N`.
    pub fn feature_vectors(&self, schema: &FeatureSchema) -> Result<Vec<FeatureVector>> {
        if let Some(f) = schema.ordinal().first() {
            return Err(Error::SchemaMismatch(format!(
                "input files carry no data for ordinal feature `{}`",
                f.name
            )));
        }
        for f in schema.nominal() {
            if f.name != "weekday" {
                return Err(Error::SchemaMismatch(format!(
                    "no data for nominal feature `{}`",
                    f.name
                )));
            }
            for s in ["Y", "N"] {
                if !f.statuses.iter().any(|x| x == s) {
                    return Err(Error::SchemaMismatch(format!("`weekday` must list status {s}")));
                }
            }
        }
        self.records
            .iter()
            .map(|r| {
                let numeric = schema
                    .numeric()
                    .iter()
                    .map(|f| numeric_feature(r, &f.name))
                    .collect::<Result<Vec<_>>>()?;
                let nominal = schema
                    .nominal()
                    .iter()
                    .map(|_| if r.weekday { "Y" } else { "N" }.to_string())
                    .collect();
                Ok(FeatureVector {
                    service_id: r.service_id.clone(),
                    date: r.date,
                    numeric,
                    ordinal: Vec::new(),
                    nominal,
                })
            })
            .collect()
    }

    pub fn raw_profiles(&self) -> BTreeMap<MemberRef, RawDay> {
        self.records
            .iter()
            .filter_map(|r| {
                r.profile.as_ref().map(|p| {
                    (
                        MemberRef {
                            service_id: r.service_id.clone(),
                            date: r.date,
                        },
                        p.clone(),
                    )
                })
            })
            .collect()
    }
}

fn numeric_feature(r: &DailyRecord, name: &str) -> Result<f64> {
    let missing = || {
        Error::SchemaMismatch(format!(
            "`{name}` needs hourly readings; {} on {} has daily energy only",
            r.service_id, r.date
        ))
    };
    match name {
        "t_max" => Ok(r.t_max),
        "t_min" => Ok(r.t_min),
        "t_avg" => Ok(r.t_avg),
        "l_avg" => Ok(r.l_avg),
        "l_max" => r.l_max.ok_or_else(missing),
        "l_min" => r.l_min.ok_or_else(missing),
        other => Err(Error::SchemaMismatch(format!("no data for numeric feature `{other}`"))),
    }
}

/// Checks a schema can be built from ingested files without touching data.
pub fn supported_schema(schema: &FeatureSchema) -> Result<()> {
    for f in schema.features() {
        let ok = match f.kind {
            FeatureKind::Numeric => ["t_max", "t_min", "t_avg", "l_max", "l_min", "l_avg"].contains(&f.name.as_str()),
            FeatureKind::Nominal => f.name == "weekday",
            FeatureKind::Ordinal => false,
        };
        if !ok {
            return Err(Error::SchemaMismatch(format!("no input data for feature `{}`", f.name)));
        }
    }
    Ok(())
}

pub(crate) fn parse_error(path: &Path, line: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

pub(crate) struct Table {
    pub(crate) path: PathBuf,
    pub(crate) header: Vec<String>,
    pub(crate) rows: Vec<(u64, csv::StringRecord)>,
}

pub(crate) fn read_table(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, "", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, "", e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        rows.push((line, row));
    }
    Ok(Table {
        path: path.to_path_buf(),
        header,
        rows,
    })
}

impl Table {
    pub(crate) fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header != expected {
            return Err(parse_error(
                &self.path,
                1,
                "",
                format!(
                    "header must be `{}`, found `{}`",
                    expected.join(","),
                    self.header.join(",")
                ),
            ));
        }
        Ok(())
    }

    pub(crate) fn field<'a>(&self, line: u64, row: &'a csv::StringRecord, col: usize) -> Result<&'a str> {
        row.get(col)
            .ok_or_else(|| parse_error(&self.path, line, &self.header[col], "missing value"))
    }

    pub(crate) fn date(&self, line: u64, row: &csv::StringRecord, col: usize) -> Result<NaiveDate> {
        let s = self.field(line, row, col)?;
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map_err(|e| parse_error(&self.path, line, &self.header[col], format!("`{s}`: {e}")))
    }

    pub(crate) fn hour(&self, line: u64, row: &csv::StringRecord, col: usize) -> Result<usize> {
        let s = self.field(line, row, col)?;
        match s.parse::<usize>() {
            Ok(h) if h < HOURS => Ok(h),
            _ => Err(parse_error(
                &self.path,
                line,
                &self.header[col],
                format!("`{s}` is not an hour 0-23"),
            )),
        }
    }

    pub(crate) fn number(&self, line: u64, row: &csv::StringRecord, col: usize) -> Result<f64> {
        let s = self.field(line, row, col)?;
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_error(&self.path, line, &self.header[col], format!("`{s}` is not a number")))
    }

    pub(crate) fn flag(&self, line: u64, row: &csv::StringRecord, col: usize) -> Result<bool> {
        match self.field(line, row, col)? {
            "Y" => Ok(true),
            "N" => Ok(false),
            s => Err(parse_error(
                &self.path,
                line,
                &self.header[col],
                format!("`{s}` is not Y or N"),
            )),
        }
    }
}

type HourSlots = [Option<f64>; HOURS];

#[derive(Default)]
struct PartialDay {
    slots: HourSlots,
    flags: Vec<DataFlag>,
}

impl PartialDay {
    fn set(&mut self, hour: usize, value: f64, source: Source) {
        if self.slots[hour].is_some() {
            self.flags.push(DataFlag::DuplicateHour {
                source,
                hour: hour as u8,
            });
        } else {
            self.slots[hour] = Some(value);
        }
    }
}

#[allow(clippy::large_enum_variant)]
enum Completed {
    Full([f64; HOURS], Vec<DataFlag>),
    Dropped(usize),
}

/// Fills short gaps by linear interpolation between the nearest present
/// hours (flat at the day's edges).
fn complete_day(day: PartialDay, source: Source, policy: GapPolicy) -> std::result::Result<Completed, usize> {
    let present: Vec<usize> = (0..HOURS).filter(|&h| day.slots[h].is_some()).collect();
    let missing = HOURS - present.len();
    let mut flags = day.flags;
    if missing == 0 {
        return Ok(Completed::Full(day.slots.map(|v| v.unwrap_or_default()), flags));
    }
    if policy == GapPolicy::Strict {
        return Err(present.len());
    }
    if missing > MAX_INTERPOLATED_HOURS {
        return Ok(Completed::Dropped(present.len()));
    }
    let mut values = [0.0; HOURS];
    let mut filled = Vec::new();
    for (h, value) in values.iter_mut().enumerate() {
        if let Some(v) = day.slots[h] {
            *value = v;
            continue;
        }
        let before = present.iter().rev().find(|&&p| p < h);
        let after = present.iter().find(|&&p| p > h);
        *value = match (before, after) {
            (Some(&a), Some(&b)) => {
                let (va, vb) = (day.slots[a].unwrap_or_default(), day.slots[b].unwrap_or_default());
                va + (vb - va) * (h - a) as f64 / (b - a) as f64
            }
            (Some(&a), None) => day.slots[a].unwrap_or_default(),
            (None, Some(&b)) => day.slots[b].unwrap_or_default(),
            (None, None) => unreachable!("at least one hour present"),
        };
        filled.push(h as u8);
    }
    flags.push(DataFlag::Interpolated { source, hours: filled });
    Ok(Completed::Full(values, flags))
}

fn summarize(values: &[f64; HOURS]) -> (f64, f64, f64) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let avg = (values.iter().sum::<f64>() / HOURS as f64).clamp(min, max);
    (max, min, avg)
}

enum MeterDays {
    Hourly(BTreeMap<(String, NaiveDate), PartialDay>),
    Energy(BTreeMap<(String, NaiveDate), f64>),
}

fn read_weather(path: &Path) -> Result<BTreeMap<NaiveDate, PartialDay>> {
    let t = read_table(path)?;
    t.expect_header(&WEATHER_HEADER)?;
    let mut days: BTreeMap<NaiveDate, PartialDay> = BTreeMap::new();
    for (line, row) in &t.rows {
        let date = t.date(*line, row, 0)?;
        let hour = t.hour(*line, row, 1)?;
        let temp = t.number(*line, row, 2)?;
        if !(TEMPERATURE_RANGE.0..=TEMPERATURE_RANGE.1).contains(&temp) {
            return Err(parse_error(path, *line, "temp_c", format!("{temp} outside [-60, 60]")));
        }
        days.entry(date).or_default().set(hour, temp, Source::Weather);
    }
    Ok(days)
}

fn read_meter(path: &Path) -> Result<MeterDays> {
    let t = read_table(path)?;
    if t.header == METER_HOURLY_HEADER {
        let mut days: BTreeMap<(String, NaiveDate), PartialDay> = BTreeMap::new();
        for (line, row) in &t.rows {
            let service = t.field(*line, row, 0)?.to_string();
            let date = t.date(*line, row, 1)?;
            let hour = t.hour(*line, row, 2)?;
            let kw = t.number(*line, row, 3)?;
            if kw < 0.0 {
                return Err(parse_error(path, *line, "kw", format!("negative reading {kw}")));
            }
            days.entry((service, date)).or_default().set(hour, kw, Source::Meter);
        }
        Ok(MeterDays::Hourly(days))
    } else if t.header == METER_ENERGY_HEADER {
        let mut days = BTreeMap::new();
        for (line, row) in &t.rows {
            let service = t.field(*line, row, 0)?.to_string();
            let date = t.date(*line, row, 1)?;
            let kwh = t.number(*line, row, 2)?;
            if kwh < 0.0 {
                return Err(parse_error(path, *line, "energy_kwh", format!("negative energy {kwh}")));
            }
            if days.insert((service.clone(), date), kwh).is_some() {
                return Err(parse_error(
                    path,
                    *line,
                    "date",
                    format!("duplicate reading for {service} {date}"),
                ));
            }
        }
        Ok(MeterDays::Energy(days))
    } else {
        Err(parse_error(
            path,
            1,
            "",
            format!(
                "header must be `{}` or `{}`, found `{}`",
                METER_HOURLY_HEADER.join(","),
                METER_ENERGY_HEADER.join(","),
                t.header.join(",")
            ),
        ))
    }
}

fn is_working_day(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

fn read_calendar(path: &Path) -> Result<BTreeMap<NaiveDate, bool>> {
    let t = read_table(path)?;
    t.expect_header(&CALENDAR_HEADER)?;
    let mut days = BTreeMap::new();
    for (line, row) in &t.rows {
        let date = t.date(*line, row, 0)?;
        let is_weekday = t.flag(*line, row, 1)?;
        let is_holiday = t.flag(*line, row, 2)?;
        if !is_holiday && is_weekday != is_working_day(date) {
            return Err(parse_error(
                path,
                *line,
                "is_weekday",
                format!("{date} is a {}", date.weekday()),
            ));
        }
        days.insert(date, is_weekday && !is_holiday);
    }
    Ok(days)
}

pub fn load_dataset(weather: impl AsRef<Path>, meter: impl AsRef<Path>, calendar: impl AsRef<Path>) -> Result<Dataset> {
    load_dataset_with(weather, meter, calendar, &IngestOptions::default())
}

pub fn load_dataset_with(
    weather: impl AsRef<Path>,
    meter: impl AsRef<Path>,
    calendar: impl AsRef<Path>,
    options: &IngestOptions,
) -> Result<Dataset> {
    let (weather, meter, calendar) = (weather.as_ref(), meter.as_ref(), calendar.as_ref());
    let calendar_days = read_calendar(calendar)?;
    let mut dropped_days = 0;

    let mut weather_days = BTreeMap::new();
    for (date, partial) in read_weather(weather)? {
        match complete_day(partial, Source::Weather, options.gap_policy) {
            Ok(Completed::Full(values, flags)) => {
                weather_days.insert(date, (values, flags));
            }
            Ok(Completed::Dropped(present)) => {
                log::warn!("{}: dropping {date}, only {present} of 24 hours", weather.display());
                dropped_days += 1;
            }
            Err(present) => {
                return Err(Error::Gap {
                    path: weather.to_path_buf(),
                    service: "weather".into(),
                    date,
                    present,
                })
            }
        }
    }

    let mut records = Vec::new();
    let mut push = |service: String, date: NaiveDate, load: LoadDay, mut flags: Vec<DataFlag>| {
        let (Some((ambient, weather_flags)), Some(&weekday)) = (weather_days.get(&date), calendar_days.get(&date))
        else {
            return;
        };
        let (t_max, t_min, t_avg) = summarize(ambient);
        flags.extend(weather_flags.iter().cloned());
        let (l_max, l_min, l_avg, profile) = match load {
            LoadDay::Hourly(kw) => {
                let (max, min, avg) = summarize(&kw);
                (
                    Some(max),
                    Some(min),
                    avg,
                    Some(RawDay {
                        load_kva: kw,
                        ambient_c: *ambient,
                    }),
                )
            }
            LoadDay::Energy(kwh) => (None, None, kwh / HOURS as f64, None),
        };
        records.push(DailyRecord {
            service_id: service,
            date,
            t_max,
            t_min,
            t_avg,
            l_max,
            l_min,
            l_avg,
            weekday,
            profile,
            flags,
        });
    };

    match read_meter(meter)? {
        MeterDays::Hourly(days) => {
            for ((service, date), partial) in days {
                match complete_day(partial, Source::Meter, options.gap_policy) {
                    Ok(Completed::Full(kw, flags)) => push(service, date, LoadDay::Hourly(kw), flags),
                    Ok(Completed::Dropped(present)) => {
                        log::warn!(
                            "{}: dropping {service} {date}, only {present} of 24 hours",
                            meter.display()
                        );
                        dropped_days += 1;
                    }
                    Err(present) => {
                        return Err(Error::Gap {
                            path: meter.to_path_buf(),
                            service,
                            date,
                            present,
                        })
                    }
                }
            }
        }
        MeterDays::Energy(days) => {
            for ((service, date), kwh) in days {
                push(service, date, LoadDay::Energy(kwh), Vec::new());
            }
        }
    }

    if records.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let dataset = Dataset { records, dropped_days };
    let dates = dataset.date_count();
    if dates < 730 {
        log::warn!("dataset covers {dates} days; multiple years are recommended");
    }
    Ok(dataset)
}

enum LoadDay {
    Hourly([f64; HOURS]),
    Energy(f64),
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;
    use std::fs;

    struct Files {
        _dir: tempfile::TempDir,
        weather: PathBuf,
        meter: PathBuf,
        calendar: PathBuf,
    }

    fn write_files(weather: &str, meter: &str, calendar: &str) -> Files {
        let dir = tempfile::tempdir().unwrap();
        let w = dir.path().join("weather.csv");
        let m = dir.path().join("meter.csv");
        let c = dir.path().join("calendar.csv");
        fs::write(&w, weather).unwrap();
        fs::write(&m, meter).unwrap();
        fs::write(&c, calendar).unwrap();
        Files {
            _dir: dir,
            weather: w,
            meter: m,
            calendar: c,
        }
    }

    fn dates() -> Vec<NaiveDate> {
        // Thu, Fri, Sat
        (1..=3).map(|d| NaiveDate::from_ymd_opt(2015, 1, d).unwrap()).collect()
    }

    fn weather_csv(skip: &[(usize, usize)]) -> String {
        let mut s = "date,hour,temp_c\n".to_string();
        for (d, date) in dates().iter().enumerate() {
            for h in 0..HOURS {
                if !skip.contains(&(d, h)) {
                    writeln!(s, "{date},{h},{:.1}", -10.0 + h as f64 * 0.5 + d as f64).unwrap();
                }
            }
        }
        s
    }

    fn meter_csv(services: &[&str], skip: &[(usize, usize)]) -> String {
        let mut s = "service_id,date,hour,kw\n".to_string();
        for (i, svc) in services.iter().enumerate() {
            for (d, date) in dates().iter().enumerate() {
                for h in 0..HOURS {
                    if !skip.contains(&(d, h)) {
                        writeln!(s, "{svc},{date},{h},{:.2}", 1.0 + i as f64 + h as f64 * 0.1).unwrap();
                    }
                }
            }
        }
        s
    }

    const CALENDAR: &str = "date,is_weekday,is_holiday\n2015-01-01,Y,Y\n2015-01-02,Y,N\n2015-01-03,N,N\n";

    #[test]
    fn complete_files_give_one_record_per_service_day() {
        let f = write_files(&weather_csv(&[]), &meter_csv(&["A", "B"], &[]), CALENDAR);
        let ds = load_dataset(&f.weather, &f.meter, &f.calendar).unwrap();
        assert_eq!(ds.records.len(), 6);
        assert_eq!(ds.service_count(), 2);
        let first = &ds.records[0];
        assert_eq!(first.service_id, "A");
        assert!(!first.weekday, "holiday counts as non-weekday");
        assert!(ds.records[1].weekday);
        assert!(!ds.records[2].weekday);
        assert_eq!(first.t_min, -10.0);
        assert_eq!(first.t_max, 1.5);
        for r in &ds.records {
            assert!(r.t_min <= r.t_avg && r.t_avg <= r.t_max);
            let (lmin, lmax) = (r.l_min.unwrap(), r.l_max.unwrap());
            assert!(lmin <= r.l_avg && r.l_avg <= lmax);
            assert!(r.flags.is_empty());
        }
        let fv = ds.feature_vectors(&FeatureSchema::default()).unwrap();
        assert_eq!(fv[0].nominal, vec!["N".to_string()]);
        assert_eq!(ds.raw_profiles().len(), 6);
    }

    #[test]
    fn short_gap_is_interpolated_and_flagged() {
        let f = write_files(&weather_csv(&[]), &meter_csv(&["A"], &[(1, 5)]), CALENDAR);
        let ds = load_dataset(&f.weather, &f.meter, &f.calendar).unwrap();
        assert_eq!(ds.records.len(), 3);
        let r = &ds.records[1];
        assert_eq!(
            r.flags,
            vec![DataFlag::Interpolated {
                source: Source::Meter,
                hours: vec![5]
            }]
        );
        let p = r.profile.as_ref().unwrap();
        assert!((p.load_kva[5] - 1.5).abs() < 1e-12);

        let strict = IngestOptions {
            gap_policy: GapPolicy::Strict,
        };
        let err = load_dataset_with(&f.weather, &f.meter, &f.calendar, &strict).unwrap_err();
        assert!(matches!(err, Error::Gap { present: 23, .. }));
    }

    #[test]
    fn long_gap_drops_the_day() {
        let f = write_files(
            &weather_csv(&[(2, 0), (2, 1), (2, 2)]),
            &meter_csv(&["A"], &[]),
            CALENDAR,
        );
        let ds = load_dataset(&f.weather, &f.meter, &f.calendar).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.dropped_days, 1);
    }

    #[test]
    fn edge_gap_and_duplicate_hour() {
        let mut weather = weather_csv(&[(0, 0)]);
        weather.push_str("2015-01-02,3,30.0\n");
        let f = write_files(&weather, &meter_csv(&["A"], &[]), CALENDAR);
        let ds = load_dataset(&f.weather, &f.meter, &f.calendar).unwrap();
        let day0 = &ds.records[0];
        assert_eq!(day0.profile.as_ref().unwrap().ambient_c[0], -9.5);
        let day1 = &ds.records[1];
        assert!(day1.flags.contains(&DataFlag::DuplicateHour {
            source: Source::Weather,
            hour: 3
        }));
        assert_eq!(day1.profile.as_ref().unwrap().ambient_c[3], -7.5);
    }

    #[test]
    fn energy_meters_give_average_load_only() {
        let meter = "service_id,date,energy_kwh\nA,2015-01-01,24\nA,2015-01-02,48\nB,2015-01-02,0\n";
        let f = write_files(&weather_csv(&[]), meter, CALENDAR);
        let ds = load_dataset(&f.weather, &f.meter, &f.calendar).unwrap();
        assert_eq!(ds.records.len(), 3);
        assert_eq!(ds.records[0].l_avg, 1.0);
        assert_eq!(ds.records[1].l_avg, 2.0);
        assert!(ds.records[0].profile.is_none());
        let with_peak = FeatureSchema::new(vec![crate::features::FeatureDef::numeric("l_max")]).unwrap();
        assert!(ds.feature_vectors(&with_peak).is_err());
    }

    #[test]
    fn parse_errors_name_line_and_column() {
        let mut weather = weather_csv(&[]);
        weather.push_str("2015-01-04,7,warm\n");
        let f = write_files(&weather, &meter_csv(&["A"], &[]), CALENDAR);
        match load_dataset(&f.weather, &f.meter, &f.calendar).unwrap_err() {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 74);
                assert_eq!(column, "temp_c");
            }
            e => panic!("unexpected {e}"),
        }

        let f = write_files("date,hr,temp_c\n", &meter_csv(&["A"], &[]), CALENDAR);
        assert!(matches!(
            load_dataset(&f.weather, &f.meter, &f.calendar),
            Err(Error::Parse { line: 1, .. })
        ));

        let bad_cal = "date,is_weekday,is_holiday\n2015-01-03,Y,N\n";
        let f = write_files(&weather_csv(&[]), &meter_csv(&["A"], &[]), bad_cal);
        assert!(matches!(
            load_dataset(&f.weather, &f.meter, &f.calendar),
            Err(Error::Parse { .. })
        ));

        let negative = "service_id,date,hour,kw\nA,2015-01-01,0,-1\n";
        let f = write_files(&weather_csv(&[]), negative, CALENDAR);
        assert!(matches!(
            load_dataset(&f.weather, &f.meter, &f.calendar),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn disjoint_coverage_is_an_error() {
        let cal = "date,is_weekday,is_holiday\n2016-01-01,Y,Y\n";
        let f = write_files(&weather_csv(&[]), &meter_csv(&["A"], &[]), cal);
        assert!(matches!(
            load_dataset(&f.weather, &f.meter, &f.calendar),
            Err(Error::EmptyIntersection)
        ));
    }
}
