//! Symbolic regression by iterative correlation analysis over a generated
//! library of candidate functions, with optional neural network screening
//! of candidate combinations.

pub mod data;
pub mod expr;
pub mod generator;
pub mod correlation;
pub mod nn;
pub mod demos;
pub mod pipeline;

pub use correlation::{CorrError, RankedCandidate, Scorer};
pub use data::io::{read_csv, write_csv};
pub use data::{Column, DataError, Dataset, Dimension, Metadata, Role};
pub use demos::{Answers, Demo, DemoError, DemoSpec};
pub use expr::{parse, Expr, ExprError};
pub use generator::{Family, GenError, GeneratorConfig};
pub use nn::{NnError, TrainConfig};
pub use pipeline::{discover, DiscoveryConfig, DiscoveryReport, PipelineError};

/// Any failure the library can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Demo(#[from] DemoError),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<DataError> for Error {
    fn from(e: DataError) -> Self {
        Error::Pipeline(e.into())
    }
}

impl From<expr::ParseError> for Error {
    fn from(e: expr::ParseError) -> Self {
        Error::Parse(e.to_string())
    }
}
