use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{init_mlp, Matrix, Mlp};
use super::NnError;
use crate::data::{mean, population_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Training loss is recorded every this many steps.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.04, batch_size: 50, steps: 25_000, epsilon: 1e-8, seed: 0, log_every: 100 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let ok = self.learning_rate > 0.0 && self.batch_size > 0 && self.steps > 0 && self.epsilon > 0.0 && self.log_every > 0;
        if ok {
            Ok(())
        } else {
            Err(NnError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub mlp: Mlp,
    /// `(step, training-set MSE)` pairs.
    pub loss_history: Vec<(usize, f64)>,
    /// Per-parameter accumulated squared gradients at the end of training.
    pub accumulator: Vec<f64>,
}

fn full_loss(m: &Mlp, x: &Matrix, y: &[f64]) -> f64 {
    (0..x.rows).map(|r| (m.predict(x.row(r)) - y[r]).powi(2)).sum::<f64>() / x.rows as f64
}

/// Minibatch adaptive-gradient training on mean squared error. Batches are
/// drawn from a per-epoch shuffle (with replacement when there are fewer
/// rows than a batch).
pub fn train(mut m: Mlp, x: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<Trained, NnError> {
    cfg.validate()?;
    if x.rows != y.len() || x.cols != m.n_inputs() || x.rows == 0 {
        return Err(NnError::Shape { rows: x.rows, cols: x.cols, targets: y.len(), inputs: m.n_inputs() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ba7c);
    let np = m.params().len();
    let mut acc = vec![0.0; np];
    let mut grad = vec![0.0; np];
    let mut history = vec![(0, full_loss(&m, x, y))];
    let mut order: Vec<usize> = (0..x.rows).collect();
    let mut pos = x.rows;
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for step in 1..=cfg.steps {
        batch.clear();
        if x.rows < cfg.batch_size {
            batch.extend((0..cfg.batch_size).map(|_| rng.random_range(0..x.rows)));
        } else {
            if pos + cfg.batch_size > x.rows {
                order.shuffle(&mut rng);
                pos = 0;
            }
            batch.extend_from_slice(&order[pos..pos + cfg.batch_size]);
            pos += cfg.batch_size;
        }
        let loss = m.loss_and_grad(x, y, &batch, &mut grad);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(NnError::DivergenceDetected { step });
        }
        for ((p, a), g) in m.params_mut().iter_mut().zip(acc.iter_mut()).zip(&grad) {
            *a += g * g;
            *p -= cfg.learning_rate * g / (a.sqrt() + cfg.epsilon);
        }
        if step % cfg.log_every == 0 {
            let l = full_loss(&m, x, y);
            if !l.is_finite() {
                return Err(NnError::DivergenceDetected { step });
            }
            history.push((step, l));
        }
    }
    Ok(Trained { mlp: m, loss_history: history, accumulator: acc })
}

/// An MLP together with the input and output standardization it was
/// trained under; predictions are in original output units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub mlp: Mlp,
    pub x_scale: Vec<(f64, f64)>,
    pub y_scale: (f64, f64),
}

fn scale_of(v: &[f64]) -> (f64, f64) {
    let s = population_std(v);
    (mean(v), if s > 0.0 && s.is_finite() { s } else { 1.0 })
}

impl Regressor {
    /// Standardizes `columns` and `y` with their own statistics and trains
    /// a fresh network seeded by `cfg.seed`.
    pub fn fit(columns: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<(Regressor, Trained), NnError> {
        let x_scale: Vec<(f64, f64)> = columns.iter().map(|c| scale_of(c)).collect();
        let y_scale = scale_of(y);
        let x = Matrix::from_columns(&standardize_with(columns, &x_scale));
        let ys: Vec<f64> = y.iter().map(|v| (v - y_scale.0) / y_scale.1).collect();
        let trained = train(init_mlp(columns.len(), cfg.seed), &x, &ys, cfg)?;
        Ok((Regressor { mlp: trained.mlp.clone(), x_scale, y_scale }, trained))
    }

    pub fn predict_columns(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        let x = Matrix::from_columns(&standardize_with(columns, &self.x_scale));
        (0..x.rows).map(|r| self.mlp.predict(x.row(r)) * self.y_scale.1 + self.y_scale.0).collect()
    }
}

fn standardize_with(columns: &[Vec<f64>], scale: &[(f64, f64)]) -> Vec<Vec<f64>> {
    columns.iter().zip(scale).map(|(c, (m, s))| c.iter().map(|v| (v - m) / s).collect()).collect()
}

/// Root mean squared error of `pred` against `y`.
pub fn rmse_of(pred: &[f64], y: &[f64]) -> f64 {
    (pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
}

/// RMSE of a regressor on held-out columns, in output units.
pub fn rmse(m: &Regressor, columns: &[Vec<f64>], y: &[f64]) -> f64 {
    rmse_of(&m.predict_columns(columns), y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..d).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn zero_target_does_not_get_worse() {
        let x = Matrix::from_columns(&inputs(200, 2, 1));
        let y = vec![0.0; 200];
        let cfg = TrainConfig { steps: 500, ..Default::default() };
        let t = train(init_mlp(2, 1), &x, &y, &cfg).unwrap();
        assert!(t.loss_history.last().unwrap().1 <= t.loss_history[0].1);
    }

    #[test]
    fn fits_a_linear_map() {
        let cols = inputs(2000, 3, 2);
        let y: Vec<f64> = (0..2000).map(|i| 0.7 * cols[0][i] - 1.3 * cols[1][i] + 0.2 * cols[2][i]).collect();
        let (train_x, test_x): (Vec<Vec<f64>>, Vec<Vec<f64>>) =
            cols.iter().map(|c| (c[..1600].to_vec(), c[1600..].to_vec())).unzip();
        let cfg = TrainConfig { steps: 5000, seed: 3, ..Default::default() };
        let (m, _) = Regressor::fit(&train_x, &y[..1600], &cfg).unwrap();
        let err = rmse(&m, &test_x, &y[1600..]) / population_std(&y);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn accumulator_only_grows_and_runs_repeat() {
        let x = Matrix::from_columns(&inputs(120, 2, 4));
        let y: Vec<f64> = (0..120).map(|r| x.row(r)[0] * x.row(r)[1]).collect();
        let mut prev = vec![0.0; init_mlp(2, 0).params().len()];
        for steps in [10, 20, 40] {
            let cfg = TrainConfig { steps, seed: 9, ..Default::default() };
            let t = train(init_mlp(2, 5), &x, &y, &cfg).unwrap();
            assert!(t.accumulator.iter().zip(&prev).all(|(a, p)| a >= p));
            prev = t.accumulator;
        }
        let cfg = TrainConfig { steps: 300, seed: 9, ..Default::default() };
        let a = train(init_mlp(2, 5), &x, &y, &cfg).unwrap();
        let b = train(init_mlp(2, 5), &x, &y, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let x = Matrix::from_columns(&inputs(100, 1, 6));
        let y: Vec<f64> = vec![1e300; 100];
        let cfg = TrainConfig { steps: 50, ..Default::default() };
        assert!(matches!(train(init_mlp(1, 0), &x, &y, &cfg), Err(NnError::DivergenceDetected { .. })));
    }

    #[test]
    fn rmse_identities() {
        let y = vec![1.0, 3.0, 2.0, 6.0];
        assert_eq!(rmse_of(&y, &y), 0.0);
        let m = mean(&y);
        assert!((rmse_of(&[m; 4], &y) - population_std(&y)).abs() < 1e-15);
        // a regressor whose network outputs zero predicts the training mean
        let mut mlp = init_mlp(1, 0);
        mlp.params_mut().iter_mut().for_each(|p| *p = 0.0);
        let reg = Regressor { mlp, x_scale: vec![(0.0, 1.0)], y_scale: (m, population_std(&y)) };
        let x = vec![vec![0.5, 0.1, -2.0, 4.0]];
        assert!((rmse(&reg, &x, &y) - population_std(&y)).abs() < 1e-15);
    }
}
