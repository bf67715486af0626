//! Expression trees for candidate base functions.
//!
//! Trees are built from feature references, constants, rational powers,
//! products, weighted sums and scaled transcendental functions. They
//! evaluate column-wise over a dataset, infer physical dimensions, and
//! serialize to a small infix grammar (see [`parse`]) that is also the
//! on-disk and report representation.

mod dims;
mod eval;
mod format;
mod parse;

use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use num_rational::Rational64;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

pub use eval::{Evaluator, LeafCache};
pub(crate) use eval::{pow_scalar, pow_values};
pub use format::format_exponent;
pub use parse::{parse, ParseError};

pub type Exponent = Rational64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("expression {expr} is undefined on {} row(s), first at row {}", rows.len(), rows[0])]
    DomainViolation { expr: String, rows: Vec<usize> },
    #[error("feature X{} referenced but the data has {n_features} feature(s)", index + 1)]
    FeatureOutOfRange { index: usize, n_features: usize },
    #[error("unit mismatch in {expr}: {detail}")]
    UnitMismatch { expr: String, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FuncKind {
    Exp,
    Sinh,
    Cosh,
    Tanh,
    Coth,
    Sin,
    Cos,
    Tan,
    Cot,
    Sec,
    Csc,
    Log,
}

impl FuncKind {
    pub const ALL: [FuncKind; 12] = [
        FuncKind::Exp,
        FuncKind::Sinh,
        FuncKind::Cosh,
        FuncKind::Tanh,
        FuncKind::Coth,
        FuncKind::Sin,
        FuncKind::Cos,
        FuncKind::Tan,
        FuncKind::Cot,
        FuncKind::Sec,
        FuncKind::Csc,
        FuncKind::Log,
    ];
    pub const HYPERBOLIC: [FuncKind; 4] = [FuncKind::Sinh, FuncKind::Cosh, FuncKind::Tanh, FuncKind::Coth];
    pub const TRIGONOMETRIC: [FuncKind; 6] =
        [FuncKind::Sin, FuncKind::Cos, FuncKind::Tan, FuncKind::Cot, FuncKind::Sec, FuncKind::Csc];

    pub fn name(self) -> &'static str {
        match self {
            FuncKind::Exp => "exp",
            FuncKind::Sinh => "sinh",
            FuncKind::Cosh => "cosh",
            FuncKind::Tanh => "tanh",
            FuncKind::Coth => "coth",
            FuncKind::Sin => "sin",
            FuncKind::Cos => "cos",
            FuncKind::Tan => "tan",
            FuncKind::Cot => "cot",
            FuncKind::Sec => "sec",
            FuncKind::Csc => "csc",
            FuncKind::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<FuncKind> {
        FuncKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_trig(self) -> bool {
        FuncKind::TRIGONOMETRIC.contains(&self)
    }

    /// Raw function value; undefined points come back non-finite.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            FuncKind::Exp => x.exp(),
            FuncKind::Sinh => x.sinh(),
            FuncKind::Cosh => x.cosh(),
            FuncKind::Tanh => x.tanh(),
            FuncKind::Coth => 1.0 / x.tanh(),
            FuncKind::Sin => x.sin(),
            FuncKind::Cos => x.cos(),
            FuncKind::Tan => x.tan(),
            FuncKind::Cot => x.cos() / x.sin(),
            FuncKind::Sec => 1.0 / x.cos(),
            FuncKind::Csc => 1.0 / x.sin(),
            FuncKind::Log => {
                if x > 0.0 {
                    x.ln()
                } else {
                    f64::NAN
                }
            }
        }
    }
}

/// Expression tree. Feature indices are 0-based; the grammar prints them
/// 1-based as `X1`, `X2`, ...
#[derive(Debug, Clone)]
pub enum Expr {
    Feature(usize),
    Const(f64),
    Pow(Box<Expr>, Exponent),
    Product(Vec<Expr>),
    /// Σ cᵢ·eᵢ
    Sum(Vec<(f64, Expr)>),
    /// kind(coeff · arg)
    Func { kind: FuncKind, coeff: f64, arg: Box<Expr> },
}

/// Node and transcendental-node counts, used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Complexity {
    pub node_count: usize,
    pub transcendental_count: usize,
}

impl Expr {
    pub fn feature(index: usize) -> Expr {
        Expr::Feature(index)
    }

    /// `base^exponent`, collapsing an exponent of one.
    pub fn pow(base: Expr, exponent: Exponent) -> Expr {
        if exponent.is_one() {
            base
        } else {
            Expr::Pow(Box::new(base), exponent)
        }
    }

    /// `X_index^exponent`.
    pub fn power_of(index: usize, exponent: Exponent) -> Expr {
        Expr::pow(Expr::Feature(index), exponent)
    }

    pub fn product(mut factors: Vec<Expr>) -> Expr {
        if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        }
    }

    pub fn sum(terms: Vec<(f64, Expr)>) -> Expr {
        Expr::Sum(terms)
    }

    pub fn func(kind: FuncKind, coeff: f64, arg: Expr) -> Expr {
        Expr::Func { kind, coeff, arg: Box::new(arg) }
    }

    pub fn complexity(&self) -> Complexity {
        let mut c = Complexity { node_count: 0, transcendental_count: 0 };
        self.visit(&mut |e| {
            c.node_count += 1;
            if matches!(e, Expr::Func { .. }) {
                c.transcendental_count += 1;
            }
        });
        c
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Feature(_) | Expr::Const(_) => 0,
            Expr::Pow(b, _) => 1 + b.depth(),
            Expr::Func { arg, .. } => 1 + arg.depth(),
            Expr::Product(fs) => 1 + fs.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::Sum(ts) => 1 + ts.iter().map(|(_, e)| e.depth()).max().unwrap_or(0),
        }
    }

    pub fn referenced_features(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Feature(i) = e {
                out.insert(*i);
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Feature(_) | Expr::Const(_) => {}
            Expr::Pow(b, _) => b.visit(f),
            Expr::Func { arg, .. } => arg.visit(f),
            Expr::Product(fs) => fs.iter().for_each(|e| e.visit(f)),
            Expr::Sum(ts) => ts.iter().for_each(|(_, e)| e.visit(f)),
        }
    }

    /// Renumbers feature references through `map` (old index → new index).
    pub fn remap_features(&self, map: &impl Fn(usize) -> usize) -> Expr {
        match self {
            Expr::Feature(i) => Expr::Feature(map(*i)),
            Expr::Const(c) => Expr::Const(*c),
            Expr::Pow(b, a) => Expr::Pow(Box::new(b.remap_features(map)), *a),
            Expr::Func { kind, coeff, arg } => Expr::func(*kind, *coeff, arg.remap_features(map)),
            Expr::Product(fs) => Expr::Product(fs.iter().map(|e| e.remap_features(map)).collect()),
            Expr::Sum(ts) => Expr::Sum(ts.iter().map(|(c, e)| (*c, e.remap_features(map))).collect()),
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.referenced_features().last().copied()
    }
}

pub(crate) fn exponent_f64(a: Exponent) -> f64 {
    a.to_f64().unwrap_or(f64::NAN)
}

// Bitwise equality on floats so that `Eq` and `Hash` agree; this is what
// the subtree memo in the evaluator needs.
impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        match (self, other) {
            (Expr::Feature(a), Expr::Feature(b)) => a == b,
            (Expr::Const(a), Expr::Const(b)) => a.to_bits() == b.to_bits(),
            (Expr::Pow(a, x), Expr::Pow(b, y)) => x == y && a == b,
            (Expr::Product(a), Expr::Product(b)) => a == b,
            (Expr::Sum(a), Expr::Sum(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|((c, e), (d, f))| c.to_bits() == d.to_bits() && e == f)
            }
            (
                Expr::Func { kind: k1, coeff: c1, arg: a1 },
                Expr::Func { kind: k2, coeff: c2, arg: a2 },
            ) => k1 == k2 && c1.to_bits() == c2.to_bits() && a1 == a2,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Expr::Feature(i) => i.hash(state),
            Expr::Const(c) => c.to_bits().hash(state),
            Expr::Pow(b, a) => {
                a.hash(state);
                b.hash(state);
            }
            Expr::Product(fs) => fs.hash(state),
            Expr::Sum(ts) => {
                ts.len().hash(state);
                for (c, e) in ts {
                    c.to_bits().hash(state);
                    e.hash(state);
                }
            }
            Expr::Func { kind, coeff, arg } => {
                kind.hash(state);
                coeff.to_bits().hash(state);
                arg.hash(state);
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Expr, ParseError> {
        parse(s)
    }
}

/// Expressions serialize as their canonical grammar string.
impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Expr, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}
