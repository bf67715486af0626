use crate::data::{standardize, Dataset};
use crate::expr::Expr;

/// Greedy near-duplicate removal. Candidates are visited from simplest to
/// most complex (ties by canonical text) and kept unless their absolute
/// correlation with an already kept candidate exceeds `r_threshold`.
/// Candidates that are undefined somewhere or constant are dropped.
pub fn dedup(cands: &[Expr], ds: &Dataset, r_threshold: f64) -> Vec<Expr> {
    let mut order: Vec<(crate::expr::Complexity, String, &Expr)> =
        cands.iter().map(|e| (e.complexity(), e.to_string(), e)).collect();
    order.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let n = ds.n_rows() as f64;
    let mut kept: Vec<(&Expr, Vec<f64>)> = Vec::new();
    for (_, _, e) in order {
        let Ok(values) = e.evaluate(ds) else { continue };
        let Ok(z) = standardize(&values) else { continue };
        let duplicate = kept.iter().any(|(_, k)| {
            let r = k.iter().zip(&z.values).map(|(a, b)| a * b).sum::<f64>() / n;
            r.abs() > r_threshold
        });
        if !duplicate {
            kept.push((e, z.values));
        }
    }
    kept.into_iter().map(|(e, _)| e.clone()).collect()
}
