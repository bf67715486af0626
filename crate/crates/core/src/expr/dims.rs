use super::{Expr, ExprError};
use crate::data::Dimension;

impl Expr {
    /// Physical dimension of the expression given one optional dimension per
    /// feature. `Ok(None)` means some leaf has an unknown dimension.
    ///
    /// Trigonometric functions take an angle or a dimensionless argument,
    /// every other function a dimensionless one; sums need equal
    /// dimensions. Function values are dimensionless.
    pub fn infer_dimension(&self, features: &[Option<Dimension>]) -> Result<Option<Dimension>, ExprError> {
        match self {
            Expr::Feature(i) => features
                .get(*i)
                .copied()
                .ok_or(ExprError::FeatureOutOfRange { index: *i, n_features: features.len() }),
            Expr::Const(_) => Ok(Some(Dimension::dimensionless())),
            Expr::Pow(b, a) => Ok(b.infer_dimension(features)?.map(|d| d.pow(*a))),
            Expr::Product(fs) => {
                let mut acc = Some(Dimension::dimensionless());
                for f in fs {
                    let d = f.infer_dimension(features)?;
                    acc = acc.zip(d).map(|(a, b)| a * b);
                }
                Ok(acc)
            }
            Expr::Sum(ts) => {
                let mut known: Option<Dimension> = None;
                let mut unknown = false;
                for (_, t) in ts {
                    match t.infer_dimension(features)? {
                        None => unknown = true,
                        Some(d) => match known {
                            None => known = Some(d),
                            Some(k) if k != d => {
                                return Err(ExprError::UnitMismatch {
                                    expr: self.to_string(),
                                    detail: format!("terms of a sum have dimensions {k} and {d}"),
                                })
                            }
                            _ => {}
                        },
                    }
                }
                Ok(if unknown { None } else { known.or(Some(Dimension::dimensionless())) })
            }
            Expr::Func { kind, arg, .. } => {
                if let Some(d) = arg.infer_dimension(features)? {
                    let ok = d.is_dimensionless() || (kind.is_trig() && d.is_angle());
                    if !ok {
                        let need = if kind.is_trig() { "an angle or dimensionless" } else { "dimensionless" };
                        return Err(ExprError::UnitMismatch {
                            expr: self.to_string(),
                            detail: format!("{} needs {need} argument, got {d}", kind.name()),
                        });
                    }
                }
                Ok(Some(Dimension::dimensionless()))
            }
        }
    }

    /// True when the expression is dimensionally valid and, if `target` is
    /// given and everything is known, has exactly that dimension.
    pub fn dimension_matches(&self, features: &[Option<Dimension>], target: Option<Dimension>) -> bool {
        match self.infer_dimension(features) {
            Err(_) => false,
            Ok(Some(d)) => target.is_none_or(|t| t == d),
            Ok(None) => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::combine_dimensions;
    use crate::expr::{parse, Exponent};
    use proptest::prelude::*;

    fn dims() -> Vec<Option<Dimension>> {
        vec![
            Some(Dimension::length()),
            Some(Dimension::new([1, 0, -1, 0, 0])),
            Some(Dimension::angle()),
            None,
            Some(Dimension::dimensionless()),
        ]
    }

    #[test]
    fn monomials() {
        let d = parse("X1^2*X2^(-1)").unwrap().infer_dimension(&dims()).unwrap();
        assert_eq!(d, Some(Dimension::new([1, 0, 1, 0, 0])));
        assert_eq!(parse("X1*X4").unwrap().infer_dimension(&dims()).unwrap(), None);
    }

    #[test]
    fn function_arguments() {
        let ds = dims();
        assert_eq!(
            parse("tan(1*X3)").unwrap().infer_dimension(&ds).unwrap(),
            Some(Dimension::dimensionless())
        );
        assert!(parse("exp(1*X3)").unwrap().infer_dimension(&ds).is_err());
        assert!(parse("sin(1*X1)").unwrap().infer_dimension(&ds).is_err());
        assert!(parse("cosh(2*X5)").unwrap().infer_dimension(&ds).is_ok());
    }

    #[test]
    fn sums() {
        let ds = dims();
        assert!(parse("X1 + X2").unwrap().infer_dimension(&ds).is_err());
        assert_eq!(
            parse("X1 + 2*X2^2*X1^(-1)*X2^(-2)*X1^2").unwrap().infer_dimension(&ds).unwrap(),
            Some(Dimension::length())
        );
        let e = parse("X1 + X2").unwrap();
        assert!(!e.dimension_matches(&ds, None));
        assert!(parse("X1").unwrap().dimension_matches(&ds, Some(Dimension::length())));
        assert!(!parse("X1").unwrap().dimension_matches(&ds, Some(Dimension::time())));
    }

    proptest! {
        #[test]
        fn product_dimension_is_sum_of_exponent_vectors(
            parts in prop::collection::vec(
                (prop::array::uniform5(-3i64..=3), -6i64..=6, 1i64..=3),
                1..5,
            )
        ) {
            let features: Vec<Option<Dimension>> = parts.iter().map(|(e, _, _)| Some(Dimension::new(*e))).collect();
            let factors = parts
                .iter()
                .enumerate()
                .map(|(i, (_, n, d))| Expr::pow(Expr::Feature(i), Exponent::new(*n, *d)))
                .collect();
            let e = Expr::Product(factors);
            let combined: Vec<(Dimension, Exponent)> = parts
                .iter()
                .map(|(dim, n, d)| (Dimension::new(*dim), Exponent::new(*n, *d)))
                .collect();
            prop_assert_eq!(e.infer_dimension(&features).unwrap(), Some(combine_dimensions(&combined)));
        }
    }
}
