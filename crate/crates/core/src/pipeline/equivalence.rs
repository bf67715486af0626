use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PipelineError;
use crate::expr::Expr;

/// Largest relative difference accepted as equal.
pub const EQUIVALENCE_TOL: f64 = 1e-9;
/// Default number of sample points.
pub const EQUIVALENCE_SAMPLES: usize = 10_000;

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares two expressions at `n` points drawn uniformly from the box
/// `domain` (one interval per feature).
pub fn numeric_equivalence(
    a: &Expr,
    b: &Expr,
    domain: &[(f64, f64)],
    n: usize,
    seed: u64,
) -> Result<bool, PipelineError> {
    numeric_equivalence_with(a, b, |rng| domain.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect(), n, seed)
}

/// [`numeric_equivalence`] with an arbitrary point sampler, for domains
/// that are not boxes. A point where either side is undefined is redrawn
/// up to ten times.
pub fn numeric_equivalence_with(
    a: &Expr,
    b: &Expr,
    mut sample: impl FnMut(&mut ChaCha8Rng) -> Vec<f64>,
    n: usize,
    seed: u64,
) -> Result<bool, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut equal = true;
    for _ in 0..n {
        let mut attempt = 0;
        let (va, vb) = loop {
            let x = sample(&mut rng);
            let (va, vb) = (a.evaluate_point(&x), b.evaluate_point(&x));
            if va.is_finite() && vb.is_finite() {
                break (va, vb);
            }
            attempt += 1;
            if attempt > 10 {
                let culprit = if va.is_finite() { b } else { a };
                return Err(PipelineError::DomainViolation(culprit.to_string()));
            }
        };
        if rel_diff(va, vb) >= EQUIVALENCE_TOL {
            equal = false;
        }
    }
    Ok(equal)
}
