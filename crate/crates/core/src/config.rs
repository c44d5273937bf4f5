//! Run configuration: a JSON file whose values command-line flags override.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::ingest::{GapPolicy, SynthConfig};
use crate::riskassess::{ThresholdSearch, DEFAULT_BUDGET};

/// Inclusive range of service counts, written `A..B` (or `A..=B`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ServiceRange {
    pub first: usize,
    pub last: usize,
}

impl ServiceRange {
    pub fn to_range(self) -> RangeInclusive<usize> {
        self.first..=self.last
    }
}

impl Default for ServiceRange {
    fn default() -> Self {
        ServiceRange { first: 1, last: 40 }
    }
}

impl FromStr for ServiceRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("`{s}` is not a range A..B with 1 <= A <= B"));
        let (a, b) = s.split_once("..").ok_or_else(bad)?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let first: usize = a.trim().parse().map_err(|_| bad())?;
        let last: usize = b.trim().parse().map_err(|_| bad())?;
        if first == 0 || first > last {
            return Err(bad());
        }
        Ok(ServiceRange { first, last })
    }
}

impl TryFrom<String> for ServiceRange {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ServiceRange> for String {
    fn from(r: ServiceRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for ServiceRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory holding `weather.csv`, `meter.csv` and `calendar.csv`.
    pub data: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub meter: Option<PathBuf>,
    pub calendar: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub query: Option<PathBuf>,
    pub out: PathBuf,

    pub seed: u64,
    pub threads: Option<usize>,
    pub k: usize,
    pub restarts: usize,
    pub features: FeatureSchema,
    pub gap_policy: GapPolicy,

    pub n_range: ServiceRange,
    pub budget: f64,
    pub years: Option<f64>,
    pub search: ThresholdSearch,
    pub chart: bool,

    pub strict: bool,
    pub services: Option<usize>,

    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            weather: None,
            meter: None,
            calendar: None,
            spec: None,
            model: None,
            query: None,
            out: PathBuf::from("out"),
            seed: 0,
            threads: None,
            k: 10,
            restarts: 1,
            features: FeatureSchema::default(),
            gap_policy: GapPolicy::Interpolate,
            n_range: ServiceRange::default(),
            budget: DEFAULT_BUDGET,
            years: None,
            search: ThresholdSearch::default(),
            chart: false,
            strict: false,
            services: None,
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.data,
            &mut config.weather,
            &mut config.meter,
            &mut config.calendar,
            &mut config.spec,
            &mut config.model,
            &mut config.query,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if config.out.is_relative() {
            config.out = base.join(&config.out);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(Error::Config(format!("budget must be >= 0, got {}", self.budget)));
        }
        if let Some(y) = self.years {
            if !(y.is_finite() && y > 0.0) {
                return Err(Error::Config(format!("years must be > 0, got {y}")));
            }
        }
        if self.services == Some(0) {
            return Err(Error::ZeroServices);
        }
        self.search.validate()
    }

    /// Weather, meter and calendar paths, from explicit entries or the data
    /// directory.
    pub fn dataset_paths(&self) -> Result<(PathBuf, PathBuf, PathBuf)> {
        let pick = |explicit: &Option<PathBuf>, name: &str| -> Result<PathBuf> {
            explicit
                .clone()
                .or_else(|| self.data.as_ref().map(|d| d.join(name)))
                .ok_or_else(|| Error::Config(format!("no path for {name}; pass --data or the individual file flag")))
        };
        Ok((
            pick(&self.weather, "weather.csv")?,
            pick(&self.meter, "meter.csv")?,
            pick(&self.calendar, "calendar.csv")?,
        ))
    }

    pub fn require(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
        let p = path
            .clone()
            .ok_or_else(|| Error::Config(format!("{flag} is required")))?;
        if !p.exists() {
            return Err(Error::Config(format!("{flag} {} does not exist", p.display())));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse_inclusively() {
        assert_eq!("19..23".parse::<ServiceRange>().unwrap().to_range(), 19..=23);
        assert_eq!("5..=5".parse::<ServiceRange>().unwrap().to_range(), 5..=5);
        for bad in ["5..1", "0..3", "abc", "3"] {
            assert!(bad.parse::<ServiceRange>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_paths_resolve_against_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"data": "inputs", "k": 4, "n_range": "10..20", "out": "/abs"}"#,
        )
        .unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.data.unwrap(), dir.path().join("inputs"));
        assert_eq!(c.out, PathBuf::from("/abs"));
        assert_eq!(c.k, 4);
        assert_eq!(c.n_range.to_range(), 10..=20);
        assert_eq!(c.budget, DEFAULT_BUDGET);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"kk": 4}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(Error::Json { .. })));
    }

    #[test]
    fn validation_catches_bad_numbers() {
        let bad = RunConfig {
            k: 0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            budget: -1.0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
