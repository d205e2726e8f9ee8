//! Parsing external inputs: pool share tables, population documents, fault
//! scenarios and compromise models.

mod document;
mod pools;

pub(crate) use document::ReplicaDoc;
pub use document::{
    load_compromise_model, load_population_spec, load_scenario, serialize_population,
};
pub use pools::{
    example1_distribution, example1_population, parse_pool_shares, PoolFormat, PoolShare,
    SharePercent, MILLI_PERCENT_WHOLE,
};

use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::metrics::MetricError;
use crate::population::ValidationReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("{path}: {message}")]
    Document { path: String, message: String },
    #[error("duplicate pool name `{name}` at {location}")]
    DuplicatePool { name: String, location: String },
    #[error("pool shares sum to {}.{:03}%, above 100%", total_milli / 1000, total_milli % 1000)]
    SharesExceedWhole { total_milli: u64 },
    #[error("residual miner count must be at least 1")]
    ZeroResidualCount,
    #[error(transparent)]
    Validation(#[from] ValidationReport),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Deserializes JSON, reporting failures with the path of the offending field.
pub(crate) fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IngestError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| IngestError::Document {
        path: path_or_root(e.path().to_string()),
        message: e.into_inner().to_string(),
    })?;
    de.end().map_err(|e| IngestError::Document {
        path: "$".into(),
        message: e.to_string(),
    })?;
    Ok(value)
}

fn path_or_root(path: String) -> String {
    if path == "." || path.is_empty() {
        "$".into()
    } else {
        path
    }
}
