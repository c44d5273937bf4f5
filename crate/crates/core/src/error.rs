use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transformer spec: {0}")]
    InvalidSpec(String),

    #[error("invalid day profile: {0}")]
    InvalidProfile(String),

    #[error("thermal simulation did not converge within {sweeps} sweeps (last change {last_change:.4} °C)")]
    NonConvergence { sweeps: usize, last_change: f64 },

    #[error("cluster key sets disagree: {0}")]
    KeyMismatch(String),

    #[error("status order {index} outside 1..={count}")]
    OutOfRange { index: usize, count: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid feature schema: {0}")]
    InvalidSchema(String),

    #[error("{points} records cannot form {k} clusters")]
    TooFewPoints { points: usize, k: usize },

    #[error("centroid update over an empty member set")]
    EmptyMembers,

    #[error("no stored 24-hour profile for service {service_id} on {date}")]
    MissingProfile {
        service_id: String,
        date: chrono::NaiveDate,
    },

    #[error("cluster {cluster_id}: limits are violated even at zero load")]
    NoFeasibleScale { cluster_id: usize },

    #[error("query is far from every cluster (nearest dissimilarity {nearest:.4} > guard {threshold:.4})")]
    FarFromAllClusters { nearest: f64, threshold: f64 },

    #[error("service count must be at least 1")]
    ZeroServices,

    #[error("{path}: line {line}, column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{path}: {service} {date} has {present} of 24 hourly readings")]
    Gap {
        path: PathBuf,
        service: String,
        date: chrono::NaiveDate,
        present: usize,
    },

    #[error("weather, meter and calendar files share no (service, date) coverage")]
    EmptyIntersection,

    #[error("study invariant violated: {0}")]
    Invariant(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
