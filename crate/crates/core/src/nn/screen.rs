use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::train::{rmse, Regressor, TrainConfig};
use super::NnError;
use crate::data::Dataset;
use crate::expr::Expr;

/// Fraction of rows used for training; the rest form the fixed test split.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub train_size: usize,
    /// `None` when training diverged.
    pub test_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRun {
    pub trial: usize,
    /// Input features in canonical order.
    pub features: Vec<Expr>,
    pub seed: u64,
    pub curve: Vec<CurvePoint>,
    pub final_rmse: Option<f64>,
}

/// `{100, 250, 500, 1000, 1500, min(2000, n_train)}` restricted to sizes
/// the training split can supply.
pub fn default_sizes(n_train: usize) -> Vec<usize> {
    let mut s: Vec<usize> = [100, 250, 500, 1000, 1500, 2000.min(n_train)].into_iter().filter(|&s| s <= n_train).collect();
    s.dedup();
    s
}

/// SplitMix64 mix of a master seed and an index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sorts features canonically and rejects repeats.
fn canonical(exprs: &[Expr]) -> Result<Vec<Expr>, NnError> {
    let mut keyed: Vec<(String, Expr)> = exprs.iter().map(|e| (e.to_string(), e.clone())).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(NnError::DuplicateFeature(w[0].0.clone()));
    }
    Ok(keyed.into_iter().map(|(_, e)| e).collect())
}

struct Prepared {
    train_x: Vec<Vec<f64>>,
    train_y: Vec<f64>,
    test_x: Vec<Vec<f64>>,
    test_y: Vec<f64>,
}

fn prepare(features: &[Expr], train: &Dataset, test: &Dataset) -> Result<Prepared, NnError> {
    let eval = |ds: &Dataset| -> Result<Vec<Vec<f64>>, NnError> {
        features.iter().map(|e| e.evaluate(ds).map_err(NnError::from)).collect()
    };
    Ok(Prepared {
        train_x: eval(train)?,
        train_y: train.output().values.clone(),
        test_x: eval(test)?,
        test_y: test.output().values.clone(),
    })
}

fn curve(p: &Prepared, sizes: &[usize], cfg: &TrainConfig) -> Vec<CurvePoint> {
    sizes
        .iter()
        .enumerate()
        .map(|(k, &size)| {
            let cols: Vec<Vec<f64>> = p.train_x.iter().map(|c| c[..size].to_vec()).collect();
            let point_cfg = TrainConfig { seed: derive_seed(cfg.seed, k as u64), ..cfg.clone() };
            let test_rmse = Regressor::fit(&cols, &p.train_y[..size], &point_cfg)
                .ok()
                .map(|(m, _)| rmse(&m, &p.test_x, &p.test_y))
                .filter(|r| r.is_finite());
            CurvePoint { train_size: size, test_rmse }
        })
        .collect()
}

fn check_sizes(sizes: &[usize], n_train: usize) -> Result<(), NnError> {
    let ascending = sizes.windows(2).all(|w| w[0] < w[1]);
    if sizes.is_empty() || !ascending || sizes[0] < 2 || *sizes.last().unwrap() > n_train {
        return Err(NnError::InvalidSizes { sizes: sizes.to_vec(), n_train });
    }
    Ok(())
}

/// Test RMSE versus training-set size for an MLP fed `exprs`. The data is
/// split once by `cfg.seed`; each size trains a fresh network on the first
/// `size` rows of the (shuffled) training split and is scored on the same
/// test split.
pub fn learning_curve(exprs: &[Expr], ds: &Dataset, sizes: &[usize], cfg: &TrainConfig) -> Result<ScreeningRun, NnError> {
    cfg.validate()?;
    let features = canonical(exprs)?;
    let (train, test) = ds.split(TRAIN_FRACTION, cfg.seed)?;
    check_sizes(sizes, train.n_rows())?;
    let p = prepare(&features, &train, &test)?;
    let curve = curve(&p, sizes, cfg);
    let final_rmse = curve.last().and_then(|c| c.test_rmse);
    Ok(ScreeningRun { trial: 0, features, seed: cfg.seed, curve, final_rmse })
}

/// How candidate subsets are formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Protocol {
    /// Random subsets with size uniform in `k_min..=k_max`.
    Random { n_trials: usize, k_min: usize, k_max: usize },
    /// Every pair with one member from each list.
    CrossProduct { first: Vec<Expr>, second: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionFrequency {
    pub expr: Expr,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenOutcome {
    /// Runs sorted by final RMSE, then trial; diverged runs last.
    pub runs: Vec<ScreeningRun>,
    /// How often each function appears among the best `top_n` runs.
    pub frequency: Vec<FunctionFrequency>,
    pub top_n: usize,
}

/// Number of best runs the frequency table is built from.
pub const FREQUENCY_TOP: usize = 40;

/// Trains one network per candidate subset on a common split (seeded by
/// `master_seed`) and ranks the subsets by test RMSE at full training size.
/// A run that fails is kept with no RMSE rather than aborting the screen.
pub fn screen_combinations(
    candidates: &[Expr],
    ds: &Dataset,
    protocol: &Protocol,
    cfg: &TrainConfig,
    master_seed: u64,
) -> Result<ScreenOutcome, NnError> {
    cfg.validate()?;
    let trials: Vec<Vec<Expr>> = match protocol {
        Protocol::Random { n_trials, k_min, k_max } => {
            if candidates.is_empty() || k_min > k_max || *k_min == 0 {
                return Err(NnError::InvalidConfig(format!("cannot draw {k_min}..={k_max} of {}", candidates.len())));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            (0..*n_trials)
                .map(|_| {
                    let k = rng.random_range(*k_min..=*k_max).min(candidates.len());
                    let mut idx = sample(&mut rng, candidates.len(), k).into_vec();
                    idx.sort_unstable();
                    idx.into_iter().map(|i| candidates[i].clone()).collect()
                })
                .collect()
        }
        Protocol::CrossProduct { first, second } => first
            .iter()
            .flat_map(|a| second.iter().map(move |b| vec![a.clone(), b.clone()]))
            .collect(),
    };
    let (train, test) = ds.split(TRAIN_FRACTION, master_seed)?;
    let size = train.n_rows();
    let mut runs: Vec<ScreeningRun> = trials
        .par_iter()
        .enumerate()
        .map(|(t, feats)| {
            let seed = derive_seed(master_seed, t as u64);
            let run_cfg = TrainConfig { seed, ..cfg.clone() };
            let (features, curve) = match canonical(feats) {
                Ok(f) => {
                    let c = prepare(&f, &train, &test)
                        .map(|p| curve(&p, &[size], &run_cfg))
                        .unwrap_or_else(|_| vec![CurvePoint { train_size: size, test_rmse: None }]);
                    (f, c)
                }
                Err(_) => (feats.clone(), vec![CurvePoint { train_size: size, test_rmse: None }]),
            };
            let final_rmse = curve.last().and_then(|c| c.test_rmse);
            ScreeningRun { trial: t, features, seed, curve, final_rmse }
        })
        .collect();
    runs.sort_by(|a, b| {
        let key = |r: &ScreeningRun| r.final_rmse.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b)).then(a.trial.cmp(&b.trial))
    });
    let frequency = frequency_table(&runs, FREQUENCY_TOP);
    Ok(ScreenOutcome { runs, frequency, top_n: FREQUENCY_TOP })
}

/// Occurrence counts of each function over the best `top_n` successful
/// runs, most frequent first.
pub fn frequency_table(sorted_runs: &[ScreeningRun], top_n: usize) -> Vec<FunctionFrequency> {
    let mut counts: BTreeMap<String, (Expr, usize)> = BTreeMap::new();
    for run in sorted_runs.iter().filter(|r| r.final_rmse.is_some()).take(top_n) {
        let mut seen = BTreeSet::new();
        for e in &run.features {
            let s = e.to_string();
            if seen.insert(s.clone()) {
                counts.entry(s).or_insert_with(|| (e.clone(), 0)).1 += 1;
            }
        }
    }
    let mut out: Vec<(String, FunctionFrequency)> =
        counts.into_iter().map(|(s, (expr, count))| (s, FunctionFrequency { expr, count })).collect();
    out.sort_by(|a, b| b.1.count.cmp(&a.1.count).then_with(|| a.0.cmp(&b.0)));
    out.into_iter().map(|(_, f)| f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn ds() -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..300).map(|_| rng.random_range(0.5..2.0)).collect();
        let b: Vec<f64> = (0..300).map(|_| rng.random_range(0.5..2.0)).collect();
        let c: Vec<f64> = (0..300).map(|_| rng.random_range(0.5..2.0)).collect();
        let y = a.iter().zip(&b).map(|(x, z)| x * z).collect();
        Dataset::from_columns(vec![a, b, c], y).unwrap()
    }

    fn quick() -> TrainConfig {
        TrainConfig { steps: 200, ..Default::default() }
    }

    #[test]
    fn sizes() {
        assert_eq!(default_sizes(1600), vec![100, 250, 500, 1000, 1500, 1600]);
        assert_eq!(default_sizes(2400), vec![100, 250, 500, 1000, 1500, 2000]);
        assert_eq!(default_sizes(300), vec![100, 250, 300]);
    }

    #[test]
    fn single_size_curve_and_duplicates() {
        let d = ds();
        let run = learning_curve(&[parse("X1").unwrap(), parse("X2").unwrap()], &d, &[100], &quick()).unwrap();
        assert_eq!(run.curve.len(), 1);
        assert!(run.final_rmse.unwrap() >= 0.0);
        let dup = learning_curve(&[parse("X1").unwrap(), parse("X1").unwrap()], &d, &[100], &quick());
        assert!(matches!(dup, Err(NnError::DuplicateFeature(_))));
        let too_big = learning_curve(&[parse("X1").unwrap()], &d, &[100, 5000], &quick());
        assert!(matches!(too_big, Err(NnError::InvalidSizes { .. })));
    }

    #[test]
    fn feature_order_does_not_matter() {
        let d = ds();
        let a = learning_curve(&[parse("X1").unwrap(), parse("X2").unwrap()], &d, &[150], &quick()).unwrap();
        let b = learning_curve(&[parse("X2").unwrap(), parse("X1").unwrap()], &d, &[150], &quick()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn screening_shapes() {
        let d = ds();
        let cands: Vec<Expr> = ["X1", "X2"].iter().map(|s| parse(s).unwrap()).collect();
        let p = Protocol::Random { n_trials: 3, k_min: 2, k_max: 6 };
        let out = screen_combinations(&cands, &d, &p, &quick(), 4).unwrap();
        assert_eq!(out.runs.len(), 3);
        assert!(out.runs.iter().all(|r| r.features.len() == 2));
        let one = Protocol::Random { n_trials: 1, k_min: 2, k_max: 6 };
        assert_eq!(screen_combinations(&cands, &d, &one, &quick(), 4).unwrap().runs.len(), 1);

        let cross = Protocol::CrossProduct {
            first: vec![parse("X1").unwrap(), parse("X1^2").unwrap()],
            second: vec![parse("X2").unwrap(), parse("X3").unwrap(), parse("X2^(-1)").unwrap()],
        };
        let out = screen_combinations(&[], &d, &cross, &quick(), 4).unwrap();
        assert_eq!(out.runs.len(), 6);
        for w in out.runs.windows(2) {
            assert!(w[0].final_rmse.unwrap() <= w[1].final_rmse.unwrap());
        }
        let total: usize = out.frequency.iter().map(|f| f.count).sum();
        assert_eq!(total, 12);
        assert_eq!(out, screen_combinations(&[], &d, &cross, &quick(), 4).unwrap());
    }
}
