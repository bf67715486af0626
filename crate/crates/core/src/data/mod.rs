//! Datasets, physical dimensions, standardization and train/test splits.

mod dataset;
mod dimension;
pub mod io;
mod stats;

use std::path::Path;

pub use dataset::{split, Column, Dataset, Role};
pub use dimension::{combine_dimensions, Dimension, SLOTS, SLOT_NAMES};
pub(crate) use dimension::{parse_rational, rational_from_f64};
pub use io::{ColumnMeta, Metadata};
pub use stats::{mean, population_std, standardize, Standardized};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("column has zero variance")]
    ZeroVariance,
    #[error("non-finite value at row {row}{}", column.as_ref().map(|c| format!(" of column {c}")).unwrap_or_default())]
    NonFinite { column: Option<String>, row: usize },
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("column {column} has {found} rows, expected {expected}")]
    LengthMismatch { column: String, expected: usize, found: usize },
    #[error("duplicate column name {0}")]
    DuplicateName(String),
    #[error("train fraction must be in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("split leaves {train} train / {test} test rows; each side needs at least 2")]
    EmptyPartition { train: usize, test: usize },
    #[error("metadata names column {0} which is not in the data")]
    MissingColumn(String),
    #[error("cannot parse {text:?} in column {column}, row {row}")]
    Parse { column: String, row: usize, text: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("metadata: {0}")]
    Metadata(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl DataError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        DataError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}
