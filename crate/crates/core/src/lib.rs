//! Statistical overloading risk assessment for residential oil-immersed
//! transformer fleets.
//!
//! The pipeline clusters per-service, per-day operating records
//! ([`clustering`]), feeds each cluster's mean 24-hour profile through the
//! top-oil/hottest-spot model ([`thermal`]) and insulation aging model
//! ([`aging`]), and turns the results into loading thresholds, service-count
//! limits and economic loss figures ([`riskassess`]). Transformers without
//! interval metering are estimated from the same clusters ([`estimation`]).

pub mod aging;
pub mod cli;
pub mod clustering;
pub mod config;
pub mod error;
pub mod estimation;
pub mod features;
pub mod ingest;
pub mod report;
pub mod riskassess;
pub mod thermal;

pub use error::{Error, Result};
pub use thermal::{DayProfile, ThermalTrace, TransformerSpec};
