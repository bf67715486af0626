use serde::{Deserialize, Serialize};

use super::DataError;

/// A vector shifted to zero mean and scaled to unit population standard
/// deviation, together with the statistics needed to undo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl Standardized {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn restore(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }

    /// Applies the stored transform to a value from the same population.
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation (divides by N), two-pass.
pub fn population_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn standardize(v: &[f64]) -> Result<Standardized, DataError> {
    if v.len() < 2 {
        return Err(DataError::TooFewRows(v.len()));
    }
    if let Some(row) = v.iter().position(|x| !x.is_finite()) {
        return Err(DataError::NonFinite { column: None, row });
    }
    let mean = mean(v);
    let std = population_std(v);
    // Relative guard: a constant column can pick up rounding noise in the mean.
    if std == 0.0 || std <= mean.abs() * 1e-14 {
        return Err(DataError::ZeroVariance);
    }
    let values = v.iter().map(|x| (x - mean) / std).collect();
    Ok(Standardized { values, mean, std })
}
