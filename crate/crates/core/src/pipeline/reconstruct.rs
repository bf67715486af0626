use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::data::Dataset;
use crate::expr::Expr;

/// Largest accepted condition number of the (column-equilibrated) normal
/// equations.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    /// `b0 + Σ b_i·component_i`.
    pub expr: Expr,
    /// Intercept first, then one coefficient per component.
    pub coefficients: Vec<f64>,
    /// Coefficients rounded to six significant digits, negligible terms dropped.
    pub simplified: Expr,
    pub r2: f64,
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let p = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * p).round() / p
}

/// Ordinary least squares of the raw output on `[1, components…]`.
pub fn reconstruct(components: &[Expr], ds: &Dataset) -> Result<Reconstruction, PipelineError> {
    let n = ds.n_rows();
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for c in components {
        cols.push(c.evaluate(ds)?);
    }
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if norms.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(PipelineError::IllConditioned { condition: f64::INFINITY });
    }
    let a = DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r] / norms[c]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = (smax / smin).powi(2);
    if !(condition <= MAX_CONDITION) {
        return Err(PipelineError::IllConditioned { condition });
    }
    let y = DVector::from_column_slice(&ds.output().values);
    let beta = svd.solve(&y, 0.0).map_err(|e| PipelineError::Numeric(e.to_string()))?;
    let coefficients: Vec<f64> = beta.iter().zip(&norms).map(|(b, s)| b / s).collect();

    let fitted: Vec<f64> = (0..n).map(|r| cols.iter().zip(&coefficients).map(|(c, b)| b * c[r]).sum()).collect();
    let yv = &ds.output().values;
    let mean = yv.iter().sum::<f64>() / n as f64;
    let sse: f64 = yv.iter().zip(&fitted).map(|(t, f)| (t - f).powi(2)).sum();
    let sst: f64 = yv.iter().map(|t| (t - mean).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else if sse == 0.0 { 1.0 } else { f64::NEG_INFINITY };

    let mut terms = vec![(coefficients[0], Expr::Const(1.0))];
    terms.extend(coefficients[1..].iter().zip(components).map(|(b, c)| (*b, c.clone())));
    let y_norm = yv.iter().map(|v| v * v).sum::<f64>().sqrt();
    let kept: Vec<(f64, Expr)> = terms
        .iter()
        .zip(&norms)
        .filter(|((b, _), s)| (b * *s).abs() > 1e-9 * y_norm)
        .map(|((b, e), _)| (round_sig(*b, 6), e.clone()))
        .collect();
    let simplified = if kept.is_empty() { Expr::Const(0.0) } else { Expr::sum(kept) };
    Ok(Reconstruction { expr: Expr::sum(terms), coefficients, simplified, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos::gen_demo1;
    use crate::expr::parse;

    #[test]
    fn recovers_kinematics_coefficients() {
        let ds = gen_demo1(2000, 42).unwrap();
        let comps: Vec<Expr> = ["X1", "X3*X5", "X4*X5^2"].iter().map(|s| parse(s).unwrap()).collect();
        let rec = reconstruct(&comps, &ds).unwrap();
        let want = [0.0, 1.0, 1.0, 0.5];
        for (b, w) in rec.coefficients.iter().zip(want) {
            assert!((b - w).abs() < 1e-9, "{:?}", rec.coefficients);
        }
        assert!((rec.r2 - 1.0).abs() < 1e-12);
        assert_eq!(rec.simplified.to_string(), "X1 + X3*X5 + 0.5*X4*X5^2");
        let back = rec.expr.evaluate(&ds).unwrap();
        assert!(back.iter().zip(&ds.output().values).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn output_itself_and_duplicates() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin() + 2.0).collect();
        let ds = Dataset::from_columns(vec![x.clone()], x).unwrap();
        let rec = reconstruct(&[parse("X1").unwrap()], &ds).unwrap();
        assert!((rec.coefficients[1] - 1.0).abs() < 1e-12);
        assert!((rec.r2 - 1.0).abs() < 1e-12);
        let dup = reconstruct(&[parse("X1").unwrap(), parse("X1").unwrap()], &ds);
        assert!(matches!(dup, Err(PipelineError::IllConditioned { .. })));
        let scaled = reconstruct(&[parse("X1").unwrap(), parse("2*X1").unwrap()], &ds);
        assert!(matches!(scaled, Err(PipelineError::IllConditioned { .. })));
    }

    #[test]
    fn r2_grows_with_nested_components() {
        let ds = gen_demo1(500, 3).unwrap();
        let all: Vec<Expr> = ["X4*X5^2", "X3*X5", "X2", "X1"].iter().map(|s| parse(s).unwrap()).collect();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=all.len() {
            let r2 = reconstruct(&all[..k], &ds).unwrap().r2;
            assert!(r2 >= prev - 1e-12);
            prev = r2;
        }
    }
}
