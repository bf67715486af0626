//! Canonical text form. Products are flattened and their factors sorted
//! by feature index then exponent, so equal products print identically.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed};

use super::{Exponent, Expr};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&expr_level(self))
    }
}

/// `2`, `(-1)`, `2.5`, `(-0.5)`, `(1/3)`.
pub fn format_exponent(a: Exponent) -> String {
    let body = match decimal(a.abs()) {
        Some(s) => s,
        None => format!("{}/{}", a.numer().abs(), a.denom()),
    };
    if a.is_negative() {
        format!("(-{body})")
    } else if a.denom().is_one() || !body.contains('/') {
        body
    } else {
        format!("({body})")
    }
}

/// Exact decimal form of a non-negative rational when its denominator
/// is built from 2s and 5s.
fn decimal(a: Exponent) -> Option<String> {
    let mut d = *a.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return None;
    }
    let places = twos.max(fives);
    if places == 0 {
        return Some(a.numer().to_string());
    }
    let scale = 10i128.pow(places);
    let scaled = *a.numer() as i128 * scale / *a.denom() as i128;
    let int = scaled / scale;
    let frac = scaled % scale;
    Some(format!("{int}.{frac:0width$}", width = places as usize))
}

fn number(c: f64) -> String {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        format!("(-{})", -c)
    } else {
        format!("{c}")
    }
}

/// Looks through wrappers that print the same as their content.
fn view(e: &Expr) -> &Expr {
    match e {
        Expr::Sum(ts) if ts.len() == 1 && ts[0].0 == 1.0 => view(&ts[0].1),
        Expr::Product(fs) if fs.len() == 1 => view(&fs[0]),
        _ => e,
    }
}

fn expr_level(e: &Expr) -> String {
    let e = view(e);
    match e {
        Expr::Sum(ts) if !ts.is_empty() => {
            let mut out = String::new();
            for (i, (c, t)) in ts.iter().enumerate() {
                let neg = *c < 0.0;
                match (i, neg) {
                    (0, true) => out.push('-'),
                    (0, false) => {}
                    (_, true) => out.push_str(" - "),
                    (_, false) => out.push_str(" + "),
                }
                out.push_str(&term(c.abs(), t));
            }
            out
        }
        Expr::Sum(_) => "0".to_string(),
        Expr::Const(c) if *c < 0.0 => format!("-{}", -c),
        _ => product_level(e),
    }
}

fn term(c: f64, e: &Expr) -> String {
    if let Expr::Const(v) = view(e) {
        if *v == 1.0 {
            return format!("{c}");
        }
    }
    if c == 1.0 {
        product_level(e)
    } else {
        format!("{c}*{}", product_level(e))
    }
}

fn flatten<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Product(fs) => fs.iter().for_each(|f| flatten(f, out)),
        _ => match view(e) {
            v @ Expr::Product(_) => flatten(v, out),
            v => out.push(v),
        },
    }
}

#[derive(PartialEq, PartialOrd)]
enum Key {
    Const,
    Feature(usize, Exponent),
    Func,
    Other,
}

fn key(e: &Expr) -> Key {
    match view(e) {
        Expr::Const(_) => Key::Const,
        Expr::Feature(i) => Key::Feature(*i, Exponent::one()),
        Expr::Pow(b, a) => match view(b) {
            Expr::Feature(i) => Key::Feature(*i, *a),
            _ => Key::Other,
        },
        Expr::Func { .. } => Key::Func,
        _ => Key::Other,
    }
}

fn product_level(e: &Expr) -> String {
    let e = view(e);
    match e {
        Expr::Product(_) => {
            let mut fs = Vec::new();
            flatten(e, &mut fs);
            if fs.is_empty() {
                return "1".to_string();
            }
            let mut keyed: Vec<(Key, String)> = fs.into_iter().map(|f| (key(f), factor(f))).collect();
            keyed.sort_by(|(ka, sa), (kb, sb)| {
                ka.partial_cmp(kb).unwrap_or(Ordering::Equal).then_with(|| sa.cmp(sb))
            });
            keyed.into_iter().map(|(_, s)| s).collect::<Vec<_>>().join("*")
        }
        _ => factor(e),
    }
}

fn factor(e: &Expr) -> String {
    let e = view(e);
    match e {
        Expr::Feature(i) => format!("X{}", i + 1),
        Expr::Const(c) => number(*c),
        Expr::Pow(b, a) => {
            let base = match view(b) {
                Expr::Feature(_) | Expr::Func { .. } => factor(b),
                Expr::Const(c) if *c >= 0.0 => factor(b),
                _ => format!("({})", expr_level(b)),
            };
            format!("{base}^{}", format_exponent(*a))
        }
        Expr::Func { kind, coeff, arg } => {
            let inner = match view(arg) {
                Expr::Sum(_) => format!("({})", expr_level(arg)),
                _ => product_level(arg),
            };
            let c = if *coeff < 0.0 { format!("-{}", -coeff) } else { coeff.to_string() };
            format!("{}({c}*{inner})", kind.name())
        }
        Expr::Sum(ts) if ts.is_empty() => "0".to_string(),
        Expr::Sum(_) | Expr::Product(_) => format!("({})", expr_level(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::FuncKind;

    fn r(n: i64, d: i64) -> Exponent {
        Exponent::new(n, d)
    }

    #[test]
    fn exponents() {
        assert_eq!(format_exponent(r(2, 1)), "2");
        assert_eq!(format_exponent(r(-2, 1)), "(-2)");
        assert_eq!(format_exponent(r(5, 2)), "2.5");
        assert_eq!(format_exponent(r(-1, 2)), "(-0.5)");
        assert_eq!(format_exponent(r(1, 3)), "(1/3)");
        assert_eq!(format_exponent(r(-2, 3)), "(-2/3)");
        assert_eq!(format_exponent(r(3, 8)), "0.375");
    }

    #[test]
    fn product_factors_are_sorted() {
        let e = Expr::Product(vec![
            Expr::power_of(4, r(2, 1)),
            Expr::feature(3),
            Expr::power_of(0, r(-1, 2)),
        ]);
        assert_eq!(e.to_string(), "X1^(-0.5)*X4*X5^2");
        let nested = Expr::Product(vec![Expr::feature(2), Expr::Product(vec![Expr::feature(1), Expr::feature(0)])]);
        assert_eq!(nested.to_string(), "X1*X2*X3");
    }

    #[test]
    fn sums_and_functions() {
        let e = Expr::Sum(vec![(1.0, Expr::feature(0)), (-2.5, Expr::feature(1)), (3.0, Expr::Const(1.0))]);
        assert_eq!(e.to_string(), "X1 - 2.5*X2 + 3");
        let t = Expr::func(FuncKind::Tan, 1.0, Expr::feature(0));
        assert_eq!(t.to_string(), "tan(1*X1)");
        let s = Expr::pow(Expr::func(FuncKind::Sin, 0.5, Expr::feature(1)), r(2, 1));
        assert_eq!(s.to_string(), "sin(0.5*X2)^2");
        let rational = Expr::Product(vec![
            Expr::feature(0),
            Expr::pow(Expr::Sum(vec![(2.0, Expr::feature(1)), (1.0, Expr::feature(2))]), r(-1, 1)),
        ]);
        assert_eq!(rational.to_string(), "X1*(2*X2 + X3)^(-1)");
        assert_eq!(Expr::Const(-3.0).to_string(), "-3");
        assert_eq!(Expr::Product(vec![Expr::Const(-3.0), Expr::feature(0)]).to_string(), "(-3)*X1");
    }
}
