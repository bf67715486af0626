use std::collections::HashMap;
use std::ops::Deref;
use std::rc::Rc;

use num_traits::{One, ToPrimitive};

use super::{exponent_f64, Exponent, Expr, ExprError};
use crate::data::Dataset;

/// Precomputed `X_i^a` columns shared across many evaluations.
#[derive(Debug, Default, Clone)]
pub struct LeafCache {
    entries: HashMap<(usize, Exponent), Vec<f64>>,
}

impl LeafCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Caches `X_feature^a` for each exponent in `exponents`.
    pub fn insert_powers(&mut self, columns: &[&[f64]], feature: usize, exponents: &[Exponent]) {
        for &a in exponents {
            self.entries
                .entry((feature, a))
                .or_insert_with(|| pow_values(columns[feature], a));
        }
    }

    pub fn get(&self, feature: usize, exponent: Exponent) -> Option<&[f64]> {
        self.entries.get(&(feature, exponent)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

enum Val<'a> {
    Borrowed(&'a [f64]),
    Owned(Vec<f64>),
    Shared(Rc<Vec<f64>>),
}

impl Deref for Val<'_> {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        match self {
            Val::Borrowed(s) => s,
            Val::Owned(v) => v,
            Val::Shared(v) => v,
        }
    }
}

impl Val<'_> {
    fn into_owned(self) -> Vec<f64> {
        match self {
            Val::Borrowed(s) => s.to_vec(),
            Val::Owned(v) => v,
            Val::Shared(v) => Rc::try_unwrap(v).unwrap_or_else(|rc| (*rc).clone()),
        }
    }
}

/// Column-wise evaluator. Non-finite intermediate values become NaN and
/// propagate; [`Evaluator::evaluate`] turns them into a domain error.
///
/// With memoization on, composite subtrees (sums, powers of composites,
/// function applications) are computed once per evaluator, which pays off
/// when many candidates share a denominator.
pub struct Evaluator<'a> {
    columns: Vec<&'a [f64]>,
    n_rows: usize,
    leaves: Option<&'a LeafCache>,
    memo: Option<HashMap<Expr, Rc<Vec<f64>>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(columns: Vec<&'a [f64]>, n_rows: usize) -> Self {
        Evaluator { columns, n_rows, leaves: None, memo: None }
    }

    pub fn for_dataset(ds: &'a Dataset) -> Self {
        Self::new(ds.feature_columns(), ds.n_rows())
    }

    pub fn with_leaves(mut self, leaves: &'a LeafCache) -> Self {
        self.leaves = Some(leaves);
        self
    }

    pub fn with_memo(mut self) -> Self {
        self.memo = Some(HashMap::new());
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Values with NaN where the expression is undefined.
    pub fn evaluate_raw(&mut self, e: &Expr) -> Result<Vec<f64>, ExprError> {
        Ok(self.node(e)?.into_owned())
    }

    pub fn evaluate(&mut self, e: &Expr) -> Result<Vec<f64>, ExprError> {
        let v = self.evaluate_raw(e)?;
        let rows: Vec<usize> = v.iter().enumerate().filter(|(_, x)| x.is_nan()).map(|(i, _)| i).collect();
        if rows.is_empty() {
            Ok(v)
        } else {
            Err(ExprError::DomainViolation { expr: e.to_string(), rows })
        }
    }

    fn column(&self, i: usize) -> Result<&'a [f64], ExprError> {
        self.columns
            .get(i)
            .copied()
            .ok_or(ExprError::FeatureOutOfRange { index: i, n_features: self.columns.len() })
    }

    fn node(&mut self, e: &Expr) -> Result<Val<'a>, ExprError> {
        match e {
            Expr::Feature(i) => Ok(Val::Borrowed(self.column(*i)?)),
            Expr::Const(c) => Ok(Val::Owned(vec![finite_or_nan(*c); self.n_rows])),
            Expr::Pow(b, a) => {
                if let Expr::Feature(i) = **b {
                    let col = self.column(i)?;
                    if let Some(v) = self.leaves.and_then(|l| l.get(i, *a)) {
                        return Ok(Val::Borrowed(v));
                    }
                    return Ok(Val::Owned(pow_values(col, *a)));
                }
                self.memoized(e, |ev| {
                    let base = ev.node(b)?;
                    Ok(pow_values(&base, *a))
                })
            }
            Expr::Product(fs) => {
                let Some((first, rest)) = fs.split_first() else {
                    return Ok(Val::Owned(vec![1.0; self.n_rows]));
                };
                let mut acc = self.node(first)?.into_owned();
                for f in rest {
                    let v = self.node(f)?;
                    for (x, y) in acc.iter_mut().zip(v.iter()) {
                        *x = finite_or_nan(*x * y);
                    }
                }
                Ok(Val::Owned(acc))
            }
            Expr::Sum(ts) => self.memoized(e, |ev| {
                let mut acc = vec![0.0; ev.n_rows];
                for (c, t) in ts {
                    let v = ev.node(t)?;
                    for (x, y) in acc.iter_mut().zip(v.iter()) {
                        *x += c * y;
                    }
                }
                acc.iter_mut().for_each(|x| *x = finite_or_nan(*x));
                Ok(acc)
            }),
            Expr::Func { kind, coeff, arg } => self.memoized(e, |ev| {
                let v = ev.node(arg)?;
                Ok(v.iter().map(|x| finite_or_nan(kind.apply(coeff * x))).collect())
            }),
        }
    }

    fn memoized(
        &mut self,
        e: &Expr,
        compute: impl FnOnce(&mut Self) -> Result<Vec<f64>, ExprError>,
    ) -> Result<Val<'a>, ExprError> {
        if let Some(v) = self.memo.as_ref().and_then(|m| m.get(e)) {
            return Ok(Val::Shared(Rc::clone(v)));
        }
        let v = compute(self)?;
        match self.memo.as_mut() {
            Some(m) => {
                let v = Rc::new(v);
                m.insert(e.clone(), Rc::clone(&v));
                Ok(Val::Shared(v))
            }
            None => Ok(Val::Owned(v)),
        }
    }
}

#[inline]
fn finite_or_nan(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::NAN
    }
}

/// Elementwise `x^a`. Integer exponents use repeated multiplication and
/// half-integers a square root first, so both are exact where possible
/// and negative bases give NaN for fractional powers.
pub(crate) fn pow_values(x: &[f64], a: Exponent) -> Vec<f64> {
    if a.is_one() {
        return x.iter().map(|&v| finite_or_nan(v)).collect();
    }
    let p = PowPlan::new(a);
    x.iter().map(|&v| p.apply(v)).collect()
}

/// Scalar form of [`pow_values`].
pub(crate) fn pow_scalar(x: f64, a: Exponent) -> f64 {
    PowPlan::new(a).apply(x)
}

#[derive(Clone, Copy)]
enum PowPlan {
    Int(i32),
    Half(i32),
    Real(f64),
}

impl PowPlan {
    fn new(a: Exponent) -> Self {
        match (*a.denom(), a.numer().to_i32()) {
            (1, Some(k)) => PowPlan::Int(k),
            (2, Some(k)) => PowPlan::Half(k),
            _ => PowPlan::Real(exponent_f64(a)),
        }
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        let out = match self {
            PowPlan::Int(k) => v.powi(k),
            PowPlan::Half(k) => v.sqrt().powi(k),
            PowPlan::Real(_) if v < 0.0 => f64::NAN,
            PowPlan::Real(a) => v.powf(a),
        };
        finite_or_nan(out)
    }
}

impl Expr {
    pub fn evaluate(&self, ds: &Dataset) -> Result<Vec<f64>, ExprError> {
        Evaluator::for_dataset(ds).evaluate(self)
    }

    pub fn evaluate_columns(&self, columns: &[&[f64]], n_rows: usize) -> Result<Vec<f64>, ExprError> {
        Evaluator::new(columns.to_vec(), n_rows).evaluate(self)
    }

    /// Value at a single point given as one value per feature.
    pub fn evaluate_point(&self, x: &[f64]) -> f64 {
        let cols: Vec<&[f64]> = x.iter().map(std::slice::from_ref).collect();
        Evaluator::new(cols, 1)
            .evaluate_raw(self)
            .map(|v| v[0])
            .unwrap_or(f64::NAN)
    }
}
