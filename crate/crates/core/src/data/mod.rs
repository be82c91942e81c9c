//! Feature schema, transaction records, delimited-file IO and synthetic data.

mod dataset;
mod io;
mod schema;
pub mod synthetic;

use std::fmt;

use thiserror::Error;

pub use dataset::{log_target, Dataset, HouseRecord, Month, MonthRange, Value};
pub use io::{
    load_dataset, load_dataset_report, read_dataset, save_dataset, write_dataset, LoadReport,
    MAX_REJECTED_FRACTION,
};
pub use schema::{columns, FeatureKind, FeatureSchema, Profile, SchemaEntry};
pub use synthetic::{
    generate_synthetic, planted_design_row, KeyPools, PlantedModel, SampleCounts, SyntheticConfig,
};

/// A rejected input row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the input file (the header is line 1).
    pub row: usize,
    pub column: String,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.column.is_empty() {
            write!(f, "row {}: {}", self.row, self.message)
        } else {
            write!(f, "row {} column {}: {}", self.row, self.column, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("schema error: missing required column {0}")]
    MissingColumn(String),
    #[error("schema error: {0}")]
    InvalidSchema(String),
    #[error("{rejected} of {total} rows rejected (limit 10%); first: {first}")]
    TooManyRejected {
        rejected: usize,
        total: usize,
        first: Box<RowError>,
    },
    #[error("invalid record {index}: {message}")]
    InvalidRecord { index: usize, message: String },
    #[error("dataset has no records")]
    Empty,
    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
