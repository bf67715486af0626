use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Scorer;
use crate::data::Dataset;
use crate::expr::{pow_values, Exponent};
use crate::generator::GeneratorConfig;

/// Features whose best single-feature power `X^a` (over the default
/// exponent grid) correlates with the output no better than the 99th
/// percentile of the same statistic under `n_perm` shuffles of the output.
/// `n_perm` below 100 is raised to 100.
pub fn detect_uninformative(ds: &Dataset, n_perm: usize, seed: u64) -> BTreeSet<usize> {
    let Ok(scorer) = Scorer::new(&ds.output().values) else {
        return (0..ds.n_features()).collect();
    };
    detect_uninformative_with(ds, &scorer, &GeneratorConfig::default().exponent_grid, n_perm, seed)
}

/// [`detect_uninformative`] against an arbitrary scoring target, so that
/// components already explained can be projected out first.
pub fn detect_uninformative_with(
    ds: &Dataset,
    scorer: &Scorer,
    exponents: &[Exponent],
    n_perm: usize,
    seed: u64,
) -> BTreeSet<usize> {
    let n_perm = n_perm.max(100);
    let n = ds.n_rows();
    let target = scorer.target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms: Vec<Vec<f64>> = (0..n_perm)
        .map(|_| {
            let mut t = target.to_vec();
            t.shuffle(&mut rng);
            t
        })
        .collect();
    let q = ((0.99 * n_perm as f64).ceil() as usize).clamp(1, n_perm) - 1;

    let mut flagged = BTreeSet::new();
    for f in 0..ds.n_features() {
        let col = &ds.feature(f).values;
        let units: Vec<Vec<f64>> = exponents
            .iter()
            .filter_map(|&a| {
                let mut v = scorer.residual(&pow_values(col, a))?;
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= norm);
                Some(v)
            })
            .collect();
        if units.is_empty() {
            flagged.insert(f);
            continue;
        }
        let stat = |t: &[f64]| {
            units
                .iter()
                .map(|u| (0..n).map(|i| u[i] * t[i]).sum::<f64>().abs())
                .fold(0.0, f64::max)
        };
        let observed = stat(target);
        let mut null: Vec<f64> = perms.iter().map(|t| stat(t)).collect();
        null.sort_by(f64::total_cmp);
        if observed <= null[q] {
            flagged.insert(f);
        }
    }
    flagged
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn columns(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..k).map(|_| (0..n).map(|_| rng.random_range(0.5..3.0)).collect()).collect()
    }

    #[test]
    fn copied_feature_is_kept() {
        let cols = columns(300, 3, 1);
        let y = cols[0].clone();
        let ds = Dataset::from_columns(cols, y).unwrap();
        let flagged = detect_uninformative(&ds, 200, 7);
        assert!(!flagged.contains(&0));
        assert_eq!(flagged, [1, 2].into_iter().collect());
    }

    #[test]
    fn pure_noise_is_flagged() {
        for seed in 0..5 {
            let mut cols = columns(400, 5, 100 + seed);
            let y = cols.pop().unwrap();
            let ds = Dataset::from_columns(cols, y).unwrap();
            assert!(detect_uninformative(&ds, 200, seed).len() >= 3);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cols = columns(200, 4, 3);
        let y: Vec<f64> = cols[1].iter().zip(&cols[2]).map(|(a, b)| a * b + 0.2 * a).collect();
        let ds = Dataset::from_columns(cols, y).unwrap();
        assert_eq!(detect_uninformative(&ds, 150, 5), detect_uninformative(&ds, 150, 5));
    }
}
