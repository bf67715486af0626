//! Correlation scoring, ranking, composite fits, residual peeling and
//! dummy-feature detection.

mod composite;
mod dummy;
mod peel;
mod rank;
mod scorer;

use serde::{Deserialize, Serialize};

pub use composite::{
    fit_linear_composite, fit_power_composite, refine_scale, CompositeFit, CompositeForm, PowerSearch,
};
pub use dummy::{detect_uninformative, detect_uninformative_with};
pub use peel::{least_squares_peel, peel_residual, PeelMode};
pub use rank::{rank, rank_exprs, rank_library, RankOptions, RankOutcome};
pub use scorer::Scorer;

use crate::data::Standardized;
use crate::expr::{Complexity, Expr};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrError {
    #[error("vectors have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("non-finite value in target")]
    NonFinite,
    #[error("target has no variation left to explain")]
    NothingLeft,
    #[error("regressor is identically zero")]
    DegenerateRegressor,
    #[error("no exponent in the grid gives a feasible power composite")]
    NoFeasibleFit,
    #[error("cannot peel: max of the component is zero")]
    ZeroScale,
}

/// A candidate with its score against the current target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub expr: Expr,
    pub r: f64,
    pub complexity: Complexity,
    pub iteration: usize,
}

/// Mean product of two standardized vectors.
pub fn correlate(z: &Standardized, y: &Standardized) -> Result<f64, CorrError> {
    if z.len() != y.len() {
        return Err(CorrError::LengthMismatch { left: z.len(), right: y.len() });
    }
    let n = z.len() as f64;
    Ok(z.values.iter().zip(&y.values).map(|(a, b)| a * b).sum::<f64>() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::standardize;

    #[test]
    fn self_and_negated() {
        let y = standardize(&[0.3, 1.0, -2.0, 4.5, 0.0]).unwrap();
        assert!((correlate(&y, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg = standardize(&y.values.iter().map(|v| -v).collect::<Vec<_>>()).unwrap();
        assert!((correlate(&neg, &y).unwrap() + 1.0).abs() < 1e-12);
        let short = standardize(&[1.0, 2.0]).unwrap();
        assert!(matches!(correlate(&short, &y), Err(CorrError::LengthMismatch { .. })));
    }
}
