//! Feature schema, ordinal encoding, Min-Max normalization and the weighted
//! mixed-type dissimilarity used by clustering and estimation.
//!
//! Continuous components (normalized numeric features followed by encoded
//! ordinal features) contribute `w (x - y)^2`; nominal components contribute
//! `w` on a status mismatch and nothing on a match.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Ordinal,
    Nominal,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    /// Ordered statuses for ordinal features; allowed labels for nominal ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub statuses: Vec<String>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

impl FeatureDef {
    pub fn numeric(name: &str) -> Self {
        FeatureDef {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            statuses: Vec::new(),
            weight: 1.0,
        }
    }

    pub fn ordinal(name: &str, statuses: &[&str]) -> Self {
        FeatureDef {
            name: name.to_string(),
            kind: FeatureKind::Ordinal,
            statuses: statuses.iter().map(|s| s.to_string()).collect(),
            weight: 1.0,
        }
    }

    pub fn nominal(name: &str, statuses: &[&str]) -> Self {
        FeatureDef {
            name: name.to_string(),
            kind: FeatureKind::Nominal,
            statuses: statuses.iter().map(|s| s.to_string()).collect(),
            weight: 1.0,
        }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    fn status_index(&self, label: &str) -> Result<usize> {
        self.statuses.iter().position(|s| s == label).ok_or_else(|| {
            Error::SchemaMismatch(format!(
                "`{label}` is not a status of `{}` (expected one of {:?})",
                self.name, self.statuses
            ))
        })
    }
}

/// Ordered features grouped numeric, then ordinal, then nominal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureDef>", into = "Vec<FeatureDef>")]
pub struct FeatureSchema {
    features: Vec<FeatureDef>,
    numeric_len: usize,
    ordinal_len: usize,
}

impl TryFrom<Vec<FeatureDef>> for FeatureSchema {
    type Error = Error;

    fn try_from(features: Vec<FeatureDef>) -> Result<Self> {
        FeatureSchema::new(features)
    }
}

impl From<FeatureSchema> for Vec<FeatureDef> {
    fn from(schema: FeatureSchema) -> Self {
        schema.features
    }
}

impl Default for FeatureSchema {
    /// Daily max/min/mean temperature and mean load, plus weekday.
    fn default() -> Self {
        FeatureSchema::new(vec![
            FeatureDef::numeric("t_max"),
            FeatureDef::numeric("t_min"),
            FeatureDef::numeric("t_avg"),
            FeatureDef::numeric("l_avg"),
            FeatureDef::nominal("weekday", &["Y", "N"]),
        ])
        .expect("default schema is valid")
    }
}

impl FeatureSchema {
    pub fn new(mut features: Vec<FeatureDef>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSchema("no features".into()));
        }
        let mut names = BTreeSet::new();
        for f in &features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature `{}`", f.name)));
            }
            if !(f.weight.is_finite() && f.weight >= 0.0) {
                return Err(Error::InvalidSchema(format!(
                    "weight of `{}` must be >= 0, got {}",
                    f.name, f.weight
                )));
            }
            match f.kind {
                FeatureKind::Numeric if !f.statuses.is_empty() => {
                    return Err(Error::InvalidSchema(format!(
                        "numeric feature `{}` cannot list statuses",
                        f.name
                    )));
                }
                FeatureKind::Ordinal | FeatureKind::Nominal => {
                    if f.statuses.is_empty() {
                        return Err(Error::InvalidSchema(format!("`{}` has no statuses", f.name)));
                    }
                    let unique: BTreeSet<_> = f.statuses.iter().collect();
                    if unique.len() != f.statuses.len() {
                        return Err(Error::InvalidSchema(format!("`{}` repeats a status", f.name)));
                    }
                }
                FeatureKind::Numeric => {}
            }
        }
        features.sort_by_key(|f| f.kind);
        let numeric_len = features.iter().filter(|f| f.kind == FeatureKind::Numeric).count();
        let ordinal_len = features.iter().filter(|f| f.kind == FeatureKind::Ordinal).count();
        Ok(FeatureSchema {
            features,
            numeric_len,
            ordinal_len,
        })
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn numeric(&self) -> &[FeatureDef] {
        &self.features[..self.numeric_len]
    }

    pub fn ordinal(&self) -> &[FeatureDef] {
        &self.features[self.numeric_len..self.numeric_len + self.ordinal_len]
    }

    pub fn nominal(&self) -> &[FeatureDef] {
        &self.features[self.numeric_len + self.ordinal_len..]
    }

    /// Numeric plus ordinal features, in encoded-vector order.
    pub fn continuous(&self) -> &[FeatureDef] {
        &self.features[..self.numeric_len + self.ordinal_len]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.weight).collect()
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureDef> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Same schema with every weight multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Result<Self> {
        let features = self
            .features
            .iter()
            .cloned()
            .map(|f| {
                let w = f.weight * factor;
                f.weighted(w)
            })
            .collect();
        FeatureSchema::new(features)
    }

    /// Weighted dissimilarity without shape checks; callers guarantee alignment.
    pub fn dissimilarity(&self, x: &EncodedVector, y: &EncodedVector) -> f64 {
        let mut d = 0.0;
        for ((f, a), b) in self.continuous().iter().zip(&x.continuous).zip(&y.continuous) {
            let diff = a - b;
            d += f.weight * diff * diff;
        }
        for ((f, a), b) in self.nominal().iter().zip(&x.nominal).zip(&y.nominal) {
            if a != b {
                d += f.weight;
            }
        }
        d
    }

    /// Dissimilarity over the features present in `x` only.
    pub fn partial_dissimilarity(&self, x: &PartialVector, y: &EncodedVector) -> f64 {
        let mut d = 0.0;
        for ((f, a), b) in self.continuous().iter().zip(&x.continuous).zip(&y.continuous) {
            if let Some(a) = a {
                let diff = a - b;
                d += f.weight * diff * diff;
            }
        }
        for ((f, a), b) in self.nominal().iter().zip(&x.nominal).zip(&y.nominal) {
            if matches!(a, Some(a) if a != b) {
                d += f.weight;
            }
        }
        d
    }

    fn check_encoded(&self, v: &EncodedVector) -> Result<()> {
        if v.continuous.len() != self.numeric_len + self.ordinal_len || v.nominal.len() != self.nominal().len() {
            return Err(Error::SchemaMismatch(format!(
                "vector has {} continuous / {} nominal components, schema expects {} / {}",
                v.continuous.len(),
                v.nominal.len(),
                self.numeric_len + self.ordinal_len,
                self.nominal().len()
            )));
        }
        for (f, &s) in self.nominal().iter().zip(&v.nominal) {
            if s as usize >= f.statuses.len() {
                return Err(Error::SchemaMismatch(format!(
                    "status index {s} out of range for `{}`",
                    f.name
                )));
            }
        }
        Ok(())
    }
}

/// One service-day in raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub service_id: String,
    pub date: NaiveDate,
    pub numeric: Vec<f64>,
    /// Already encoded with [`encode_ordinal`].
    pub ordinal: Vec<f64>,
    pub nominal: Vec<String>,
}

impl FeatureVector {
    pub fn check(&self, schema: &FeatureSchema) -> Result<()> {
        if self.numeric.len() != schema.numeric().len()
            || self.ordinal.len() != schema.ordinal().len()
            || self.nominal.len() != schema.nominal().len()
        {
            return Err(Error::SchemaMismatch(format!(
                "record {} {} has {}/{}/{} numeric/ordinal/nominal values, schema expects {}/{}/{}",
                self.service_id,
                self.date,
                self.numeric.len(),
                self.ordinal.len(),
                self.nominal.len(),
                schema.numeric().len(),
                schema.ordinal().len(),
                schema.nominal().len()
            )));
        }
        if let Some(v) = self.ordinal.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::SchemaMismatch(format!("ordinal value {v} outside (0, 1)")));
        }
        Ok(())
    }
}

/// Maps status `index` (1-based) of `count` ordered statuses into (0, 1).
pub fn encode_ordinal(index: usize, count: usize) -> Result<f64> {
    if index == 0 || index > count {
        return Err(Error::OutOfRange { index, count });
    }
    Ok((index as f64 - 0.5) / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    pub fn is_degenerate(&self) -> bool {
        self.max <= self.min
    }
}

/// Observed Min/Max per numeric feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub ranges: Vec<FeatureRange>,
}

impl NormalizationParams {
    pub fn normalize(&self, feature: usize, raw: f64) -> f64 {
        let r = &self.ranges[feature];
        if r.is_degenerate() {
            return 0.0;
        }
        ((raw - r.min) / (r.max - r.min)).clamp(0.0, 1.0)
    }

    pub fn denormalize(&self, feature: usize, value: f64) -> f64 {
        let r = &self.ranges[feature];
        r.min + value * (r.max - r.min)
    }
}

pub fn fit_normalization(dataset: &[FeatureVector], schema: &FeatureSchema) -> Result<NormalizationParams> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut ranges: Vec<FeatureRange> = schema
        .numeric()
        .iter()
        .map(|f| FeatureRange {
            name: f.name.clone(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        })
        .collect();
    for record in dataset {
        record.check(schema)?;
        for (range, &v) in ranges.iter_mut().zip(&record.numeric) {
            range.min = range.min.min(v);
            range.max = range.max.max(v);
        }
    }
    for r in &ranges {
        if r.is_degenerate() {
            log::warn!(
                "feature `{}` is constant ({}); it normalizes to 0 and carries no weight",
                r.name,
                r.min
            );
        }
    }
    Ok(NormalizationParams { ranges })
}

/// Min-Max normalization of one raw value, clamped to [0, 1].
pub fn normalize(raw: f64, params: &NormalizationParams, feature: usize) -> f64 {
    params.normalize(feature, raw)
}

/// A record or centroid in normalized space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedVector {
    /// Normalized numeric features followed by ordinal encodings.
    pub continuous: Vec<f64>,
    /// Status indices into each nominal feature's status list.
    pub nominal: Vec<u32>,
}

/// An encoded query that may lack some features.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialVector {
    pub continuous: Vec<Option<f64>>,
    pub nominal: Vec<Option<u32>>,
}

impl PartialVector {
    pub fn is_complete(&self) -> bool {
        self.continuous.iter().all(Option::is_some) && self.nominal.iter().all(Option::is_some)
    }
}

pub fn encode(record: &FeatureVector, schema: &FeatureSchema, params: &NormalizationParams) -> Result<EncodedVector> {
    record.check(schema)?;
    let mut continuous: Vec<f64> = record
        .numeric
        .iter()
        .enumerate()
        .map(|(j, &raw)| params.normalize(j, raw))
        .collect();
    continuous.extend_from_slice(&record.ordinal);
    let nominal = schema
        .nominal()
        .iter()
        .zip(&record.nominal)
        .map(|(f, label)| f.status_index(label).map(|i| i as u32))
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedVector { continuous, nominal })
}

/// Encodes a query given by feature name. Numeric entries are raw values;
/// ordinal and nominal entries are status labels. Absent features stay `None`.
pub fn encode_partial(
    numeric: &BTreeMap<String, f64>,
    labels: &BTreeMap<String, String>,
    schema: &FeatureSchema,
    params: &NormalizationParams,
) -> Result<PartialVector> {
    let mut continuous = Vec::with_capacity(schema.continuous().len());
    for (j, f) in schema.numeric().iter().enumerate() {
        continuous.push(numeric.get(&f.name).map(|&raw| params.normalize(j, raw)));
    }
    for f in schema.ordinal() {
        let value = match labels.get(&f.name) {
            Some(label) => Some(encode_ordinal(f.status_index(label)? + 1, f.statuses.len())?),
            None => None,
        };
        continuous.push(value);
    }
    let nominal = schema
        .nominal()
        .iter()
        .map(|f| {
            labels
                .get(&f.name)
                .map(|label| f.status_index(label).map(|i| i as u32))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartialVector { continuous, nominal })
}

/// Weighted mixed-type dissimilarity between two encoded vectors.
pub fn distance(x: &EncodedVector, y: &EncodedVector, schema: &FeatureSchema) -> Result<f64> {
    schema.check_encoded(x)?;
    schema.check_encoded(y)?;
    Ok(schema.dissimilarity(x, y))
}
