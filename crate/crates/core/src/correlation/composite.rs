use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{CorrError, Scorer};
use crate::data::{rational_from_f64, Dataset};
use crate::expr::{pow_scalar, Evaluator, Exponent, Expr};

/// Shape of a two-candidate composite over standardized columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CompositeForm {
    /// `b·z1 + z2`
    Linear,
    /// `z1·(b + z2)^a`
    Power {
        #[serde(serialize_with = "ser_exponent", deserialize_with = "de_exponent")]
        a: Exponent,
    },
}

fn ser_exponent<S: Serializer>(a: &Exponent, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(a.to_f64().unwrap_or(f64::NAN))
}

fn de_exponent<'de, D: Deserializer<'de>>(d: D) -> Result<Exponent, D::Error> {
    let x = f64::deserialize(d)?;
    rational_from_f64(x).ok_or_else(|| serde::de::Error::custom("exponent is not a small rational"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeFit {
    #[serde(flatten)]
    pub form: CompositeForm,
    pub b: f64,
    pub sse: f64,
}

impl CompositeFit {
    /// Composite values at each row.
    pub fn predict(&self, z1: &[f64], z2: &[f64]) -> Vec<f64> {
        match self.form {
            CompositeForm::Linear => z1.iter().zip(z2).map(|(a, c)| self.b * a + c).collect(),
            CompositeForm::Power { a } => z1.iter().zip(z2).map(|(x, c)| x * pow_scalar(self.b + c, a)).collect(),
        }
    }
}

fn check_lengths(z1: &[f64], z2: &[f64], y: &[f64]) -> Result<(), CorrError> {
    for other in [z2.len(), y.len()] {
        if other != z1.len() {
            return Err(CorrError::LengthMismatch { left: z1.len(), right: other });
        }
    }
    Ok(())
}

/// Least-squares `b` for `y ≈ b·z1 + z2`, in closed form.
pub fn fit_linear_composite(z1: &[f64], z2: &[f64], y: &[f64]) -> Result<CompositeFit, CorrError> {
    check_lengths(z1, z2, y)?;
    let den: f64 = z1.iter().map(|v| v * v).sum();
    if den == 0.0 || !den.is_finite() {
        return Err(CorrError::DegenerateRegressor);
    }
    let num: f64 = z1.iter().zip(z2).zip(y).map(|((a, c), t)| a * (t - c)).sum();
    let b = num / den;
    let sse = z1.iter().zip(z2).zip(y).map(|((a, c), t)| (t - b * a - c).powi(2)).sum();
    Ok(CompositeFit { form: CompositeForm::Linear, b, sse })
}

/// Search settings for the power composite's offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSearch {
    pub lo: f64,
    pub hi: f64,
    /// Spacing of the bracketing scan that precedes golden-section refinement.
    pub scan_step: f64,
    pub tol: f64,
}

impl Default for PowerSearch {
    fn default() -> Self {
        PowerSearch { lo: -100.0, hi: 100.0, scan_step: 0.25, tol: 1e-8 }
    }
}

fn power_sse(z1: &[f64], z2: &[f64], y: &[f64], a: Exponent, b: f64) -> f64 {
    let mut s = 0.0;
    for ((x, c), t) in z1.iter().zip(z2).zip(y) {
        let p = pow_scalar(b + c, a);
        if p.is_nan() {
            return f64::INFINITY;
        }
        s += (t - x * p).powi(2);
    }
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimum of `f` on `[lo, hi]`.
fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Fits `y ≈ z1·(b + z2)^a` over the exponent grid. For each `a` the offset
/// is bracketed by a scan over `[lo, hi]` and refined by golden section;
/// offsets that put a fractional power on a negative base are infeasible.
pub fn fit_power_composite(
    z1: &[f64],
    z2: &[f64],
    y: &[f64],
    a_grid: &[Exponent],
    search: &PowerSearch,
) -> Result<CompositeFit, CorrError> {
    check_lengths(z1, z2, y)?;
    let steps = ((search.hi - search.lo) / search.scan_step).round().max(1.0) as usize;
    let mut best: Option<CompositeFit> = None;
    for &a in a_grid {
        let sse = |b: f64| power_sse(z1, z2, y, a, b);
        let at = |k: usize| search.lo + (search.hi - search.lo) * k as f64 / steps as f64;
        let scan: Vec<f64> = (0..=steps).map(|k| sse(at(k))).collect();
        let Some((k, &s0)) = scan
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_finite())
            .min_by(|x, y| x.1.total_cmp(y.1))
        else {
            continue;
        };
        let (lo, hi) = (at(k.saturating_sub(1)), at((k + 1).min(steps)));
        let (b, s) = golden(sse, lo, hi, search.tol);
        let fit = if s <= s0 {
            CompositeFit { form: CompositeForm::Power { a }, b, sse: s }
        } else {
            CompositeFit { form: CompositeForm::Power { a }, b: at(k), sse: s0 }
        };
        if best.as_ref().is_none_or(|bst| fit.sse < bst.sse) {
            best = Some(fit);
        }
    }
    best.ok_or(CorrError::NoFeasibleFit)
}

/// Tunes a scale parameter `c ∈ [lo, hi]` (both positive) of a candidate
/// family to maximize |r| against the scorer's target: a log-spaced scan
/// followed by golden-section refinement in log space. Returns the best
/// `c`, its candidate and exact score.
pub fn refine_scale(
    build: impl Fn(f64) -> Expr,
    ds: &Dataset,
    scorer: &Scorer,
    lo: f64,
    hi: f64,
) -> Option<(f64, Expr, f64)> {
    let score = |log_c: f64| {
        let e = build(log_c.exp());
        let v = Evaluator::for_dataset(ds).evaluate(&e).ok()?;
        scorer.exact(&v)
    };
    let neg = |log_c: f64| score(log_c).map_or(f64::INFINITY, |r| -r.abs());
    let (l0, l1) = (lo.ln(), hi.ln());
    let steps = 64;
    let at = |k: usize| l0 + (l1 - l0) * k as f64 / steps as f64;
    let (k, s0) = (0..=steps)
        .map(|k| (k, neg(at(k))))
        .filter(|(_, s)| s.is_finite())
        .min_by(|x, y| x.1.total_cmp(&y.1))?;
    let (x, s) = golden(neg, at(k.saturating_sub(1)), at((k + 1).min(steps)), 1e-10);
    let log_c = if s <= s0 { x } else { at(k) };
    let c = log_c.exp();
    let e = build(c);
    let r = score(log_c)?;
    Some((c, e, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::standardize;
    use crate::generator::{GeneratorConfig, InnerSum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        standardize(&v).unwrap().values
    }

    #[test]
    fn linear_exact_and_orthogonal() {
        let z1 = noise(200, 1);
        let z2 = noise(200, 2);
        let y: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| 3.0 * a + b).collect();
        let f = fit_linear_composite(&z1, &z2, &y).unwrap();
        assert!((f.b - 3.0).abs() < 1e-12 && f.sse < 1e-20);

        let z1 = vec![1.0, -1.0, 1.0, -1.0];
        let z2 = vec![0.0; 4];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        assert_eq!(fit_linear_composite(&z1, &z2, &y).unwrap().b, 0.0);
        assert_eq!(fit_linear_composite(&z2, &z1, &y), Err(CorrError::DegenerateRegressor));
    }

    #[test]
    fn linear_matches_grid_oracle() {
        for seed in 0..5 {
            let (z1, z2, y) = (noise(300, seed), noise(300, seed + 100), noise(300, seed + 200));
            let f = fit_linear_composite(&z1, &z2, &y).unwrap();
            let sse = |b: f64| z1.iter().zip(&z2).zip(&y).map(|((a, c), t)| (t - b * a - c).powi(2)).sum::<f64>();
            let oracle = (0..=200_000).map(|k| sse(-10.0 + k as f64 * 1e-4)).fold(f64::INFINITY, f64::min);
            assert!(f.sse <= oracle + 1e-6);
            assert!(oracle - f.sse <= 1e-6);
            assert!(sse(f.b + 1e-3) > f.sse && sse(f.b - 1e-3) > f.sse);
        }
    }

    #[test]
    fn power_recovers_offset_and_exponent() {
        let z1 = noise(500, 3);
        let z2 = noise(500, 4);
        let y: Vec<f64> = z1.iter().zip(&z2).map(|(a, c)| a * (0.374 + c).powi(2)).collect();
        let grid = GeneratorConfig::default().exponent_grid;
        let f = fit_power_composite(&z1, &z2, &y, &grid, &PowerSearch::default()).unwrap();
        assert_eq!(f.form, CompositeForm::Power { a: Exponent::from_integer(2) });
        assert!((f.b - 0.374).abs() < 1e-4, "{}", f.b);
        let pred = f.predict(&z1, &z2);
        assert!(pred.iter().zip(&y).all(|(p, t)| (p - t).abs() < 1e-6));
    }

    #[test]
    fn power_zero_exponent_is_identity() {
        let z1 = noise(100, 5);
        let z2 = noise(100, 6);
        let f = fit_power_composite(&z1, &z2, &z1, &[Exponent::from_integer(0)], &PowerSearch::default()).unwrap();
        assert!(f.sse < 1e-20);
    }

    #[test]
    fn power_beats_coarse_grid_oracle() {
        let grid = GeneratorConfig::default().exponent_grid;
        for seed in 0..3 {
            let (z1, z2, y) = (noise(150, seed + 10), noise(150, seed + 20), noise(150, seed + 30));
            let f = fit_power_composite(&z1, &z2, &y, &grid, &PowerSearch::default()).unwrap();
            for &a in &grid {
                for k in 0..=400 {
                    let b = -100.0 + 0.5 * k as f64;
                    assert!(f.sse <= power_sse(&z1, &z2, &y, a, b) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn fractional_power_needs_nonnegative_base() {
        let z1 = vec![1.0, 1.0];
        let z2 = vec![-1000.0, 1000.0];
        let r = fit_power_composite(&z1, &z2, &[1.0, 2.0], &[Exponent::new(1, 2)], &PowerSearch::default());
        assert_eq!(r, Err(CorrError::NoFeasibleFit));
    }

    #[test]
    fn scale_refinement_finds_off_grid_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..400).map(|_| rng.random_range(0.5..2.0)).collect();
        let b: Vec<f64> = (0..400).map(|_| rng.random_range(0.5..2.0)).collect();
        let y: Vec<f64> = a.iter().zip(&b).map(|(x, z)| 1.0 / (0.374 * x + z)).collect();
        let ds = Dataset::from_columns(vec![a, b], y.clone()).unwrap();
        let scorer = Scorer::new(&y).unwrap();
        let s = InnerSum { j: 0, a_j: Exponent::from_integer(1), k: 1, a_k: Exponent::from_integer(1), c: 1.0 };
        let (c, _, r) = refine_scale(
            |c| Expr::pow(s.with_c(c).expr(), Exponent::from_integer(-1)),
            &ds,
            &scorer,
            0.1,
            10.0,
        )
        .unwrap();
        assert!((c - 0.374).abs() < 1e-4, "{c}");
        assert!(r > 1.0 - 1e-12);
    }

    #[test]
    fn serializes_flat() {
        let f = CompositeFit { form: CompositeForm::Power { a: Exponent::new(-1, 2) }, b: 0.5, sse: 1.0 };
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"form":"power","a":-0.5,"b":0.5,"sse":1.0}"#);
        assert_eq!(serde_json::from_str::<CompositeFit>(&s).unwrap(), f);
    }
}
