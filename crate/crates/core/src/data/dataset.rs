use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dimension};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Feature,
    Output,
    /// Known to carry no information about the output; excluded from generation.
    Dummy,
    /// A feature measured as a plane angle.
    Angle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    pub dimension: Option<Dimension>,
    pub role: Role,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column { name: name.into(), values, dimension: None, role: Role::Feature }
    }

    pub fn with_dimension(mut self, dimension: Dimension) -> Self {
        self.dimension = Some(dimension);
        self
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.values.len() < 2 {
            return Err(DataError::TooFewRows(self.values.len()));
        }
        if let Some(row) = self.values.iter().position(|x| !x.is_finite()) {
            return Err(DataError::NonFinite { column: Some(self.name.clone()), row });
        }
        Ok(())
    }
}

/// Named feature columns plus one output column, all of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Column>,
    output: Column,
}

impl Dataset {
    pub fn new(features: Vec<Column>, mut output: Column) -> Result<Self, DataError> {
        output.validate()?;
        output.role = Role::Output;
        let n = output.len();
        let mut seen = HashSet::new();
        for c in &features {
            c.validate()?;
            if c.len() != n {
                return Err(DataError::LengthMismatch {
                    column: c.name.clone(),
                    expected: n,
                    found: c.len(),
                });
            }
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::DuplicateName(c.name.clone()));
            }
        }
        if features.iter().any(|c| c.name == output.name) {
            return Err(DataError::DuplicateName(output.name.clone()));
        }
        Ok(Dataset { features, output })
    }

    /// Builds a dataset with features named `X1..Xn` and output `Y`.
    pub fn from_columns(features: Vec<Vec<f64>>, output: Vec<f64>) -> Result<Self, DataError> {
        let cols = features
            .into_iter()
            .enumerate()
            .map(|(i, v)| Column::new(format!("X{}", i + 1), v))
            .collect();
        Dataset::new(cols, Column::new("Y", output))
    }

    pub fn n_rows(&self) -> usize {
        self.output.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Column] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &Column {
        &self.features[index]
    }

    pub fn output(&self) -> &Column {
        &self.output
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|c| c.name == name)
    }

    pub fn feature_columns(&self) -> Vec<&[f64]> {
        self.features.iter().map(|c| c.values.as_slice()).collect()
    }

    pub fn feature_dimensions(&self) -> Vec<Option<Dimension>> {
        self.features.iter().map(|c| c.dimension).collect()
    }

    /// Same features, different output values (used when peeling components).
    pub fn with_output_values(&self, values: Vec<f64>) -> Result<Self, DataError> {
        let output = Column { values, ..self.output.clone() };
        Dataset::new(self.features.clone(), output)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, DataError> {
        let take = |c: &Column| Column {
            values: rows.iter().map(|&r| c.values[r]).collect(),
            ..c.clone()
        };
        Dataset::new(self.features.iter().map(take).collect(), take(&self.output))
    }

    /// Shuffled disjoint partition into train and test parts.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(DataError::InvalidFraction(train_fraction));
        }
        let n = self.n_rows();
        let n_train = (n as f64 * train_fraction).round() as usize;
        let n_test = n - n_train;
        if n_train < 2 || n_test < 2 {
            return Err(DataError::EmptyPartition { train: n_train, test: n_test });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (train, test) = order.split_at(n_train);
        Ok((self.select_rows(train)?, self.select_rows(test)?))
    }
}

/// Free-function form of [`Dataset::split`].
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    ds.split(train_fraction, seed)
}
