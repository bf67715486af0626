//! Small multilayer perceptrons trained on candidate features, learning
//! curves and combination screening.

mod mlp;
mod screen;
mod train;

pub use mlp::{init_mlp, Matrix, Mlp, HIDDEN};
pub use screen::{
    default_sizes, derive_seed, frequency_table, learning_curve, screen_combinations, CurvePoint, FunctionFrequency,
    Protocol, ScreenOutcome, ScreeningRun, FREQUENCY_TOP, TRAIN_FRACTION,
};
pub use train::{rmse, rmse_of, train, Regressor, TrainConfig, Trained};

use crate::data::DataError;
use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("training diverged at step {step}")]
    DivergenceDetected { step: usize },
    #[error("feature {0} appears twice")]
    DuplicateFeature(String),
    #[error("curve sizes {sizes:?} must ascend and fit in {n_train} training rows")]
    InvalidSizes { sizes: Vec<usize>, n_train: usize },
    #[error("inputs are {rows}x{cols} with {targets} targets for a {inputs}-input network")]
    Shape { rows: usize, cols: usize, targets: usize, inputs: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Data(#[from] DataError),
}
