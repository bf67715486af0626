use serde::{Deserialize, Serialize};

use super::CorrError;

/// How an explained component is removed from the output between rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeelMode {
    /// `Y − (max Y / max Z)·Z`.
    Literal,
    /// `Y − β·Z` with the least-squares slope.
    LeastSquares,
    /// Keep `Y` and project every peeled component (jointly) out of the
    /// scoring target instead.
    #[default]
    Projection,
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `y − (max(y)/max(z))·z`.
pub fn peel_residual(y: &[f64], z: &[f64]) -> Result<Vec<f64>, CorrError> {
    if y.len() != z.len() {
        return Err(CorrError::LengthMismatch { left: y.len(), right: z.len() });
    }
    let mz = max(z);
    if mz == 0.0 || !mz.is_finite() {
        return Err(CorrError::ZeroScale);
    }
    let s = max(y) / mz;
    Ok(y.iter().zip(z).map(|(a, b)| a - s * b).collect())
}

/// `y − β·z` where β is the least-squares slope of `y` on `z` (with an
/// intercept, which stays in the residual).
pub fn least_squares_peel(y: &[f64], z: &[f64]) -> Result<Vec<f64>, CorrError> {
    if y.len() != z.len() {
        return Err(CorrError::LengthMismatch { left: y.len(), right: z.len() });
    }
    let n = y.len() as f64;
    let (my, mz) = (y.iter().sum::<f64>() / n, z.iter().sum::<f64>() / n);
    let sxx: f64 = z.iter().map(|b| (b - mz).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(CorrError::DegenerateRegressor);
    }
    let sxy: f64 = y.iter().zip(z).map(|(a, b)| (a - my) * (b - mz)).sum();
    let beta = sxy / sxx;
    Ok(y.iter().zip(z).map(|(a, b)| a - beta * b).collect())
}
