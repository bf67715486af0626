//! Physical dimensions as rational exponent vectors.
//!
//! Slots are length, mass, time, temperature and a fifth pseudo-dimension
//! used for plane angles. Angles stay exponent vectors like everything else,
//! which lets the generator insist that trigonometric arguments are angles
//! while ordinary algebra treats them as any other slot.

use std::fmt;
use std::ops::{Add, Mul};

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

pub const SLOTS: usize = 5;
pub const SLOT_NAMES: [&str; SLOTS] = ["L", "M", "T", "Θ", "angle"];

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Dimension([Rational64; SLOTS]);

impl Dimension {
    pub const fn from_rationals(exponents: [Rational64; SLOTS]) -> Self {
        Dimension(exponents)
    }

    /// Integer exponents, e.g. `Dimension::new([1, 0, -1, 0, 0])` for a speed.
    pub fn new(exponents: [i64; SLOTS]) -> Self {
        Dimension(exponents.map(Rational64::from_integer))
    }

    pub fn dimensionless() -> Self {
        Self::default()
    }

    pub fn length() -> Self {
        Self::new([1, 0, 0, 0, 0])
    }

    pub fn mass() -> Self {
        Self::new([0, 1, 0, 0, 0])
    }

    pub fn time() -> Self {
        Self::new([0, 0, 1, 0, 0])
    }

    pub fn temperature() -> Self {
        Self::new([0, 0, 0, 1, 0])
    }

    pub fn angle() -> Self {
        Self::new([0, 0, 0, 0, 1])
    }

    pub fn exponents(&self) -> &[Rational64; SLOTS] {
        &self.0
    }

    pub fn is_dimensionless(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn is_angle(&self) -> bool {
        *self == Self::angle()
    }

    pub fn pow(&self, exponent: Rational64) -> Self {
        Dimension(self.0.map(|e| e * exponent))
    }
}

impl Mul for Dimension {
    type Output = Dimension;

    fn mul(self, rhs: Dimension) -> Dimension {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Dimension(out)
    }
}

impl Add for Dimension {
    type Output = Dimension;

    /// Exponent-vector addition, i.e. the dimension of a product.
    fn add(self, rhs: Dimension) -> Dimension {
        self * rhs
    }
}

/// Dimension of `Π dᵢ^aᵢ`.
pub fn combine_dimensions(parts: &[(Dimension, Rational64)]) -> Dimension {
    parts
        .iter()
        .fold(Dimension::dimensionless(), |acc, (d, a)| acc * d.pow(*a))
}

impl fmt::Debug for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dimension({self})")
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dimensionless() {
            return f.write_str("1");
        }
        let mut first = true;
        for (name, e) in SLOT_NAMES.iter().zip(self.0) {
            if e.is_zero() {
                continue;
            }
            if !first {
                f.write_str("·")?;
            }
            first = false;
            if e == Rational64::from_integer(1) {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Rational from a JSON number; accepts anything that is a ratio with a
/// denominator up to 12.
pub(crate) fn rational_from_f64(x: f64) -> Option<Rational64> {
    if !x.is_finite() {
        return None;
    }
    for den in 1..=12i64 {
        let num = (x * den as f64).round();
        if (num / den as f64 - x).abs() < 1e-9 {
            return Some(Rational64::new(num as i64, den));
        }
    }
    None
}

pub(crate) fn parse_rational(s: &str) -> Option<Rational64> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        Some(Rational64::new(n, d))
    } else {
        rational_from_f64(s.parse().ok()?)
    }
}

/// Exponents are written as JSON numbers when they have a short decimal
/// form, otherwise as `"p/q"` strings.
impl Serialize for Dimension {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(SLOTS))?;
        for e in self.0 {
            if matches!(*e.denom(), 1 | 2 | 4 | 5 | 8 | 10) {
                seq.serialize_element(&e.to_f64().unwrap_or(f64::NAN))?;
            } else {
                seq.serialize_element(&e.to_string())?;
            }
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Dimension {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DimVisitor;

        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Exp {
            Num(f64),
            Text(String),
        }

        impl<'de> Visitor<'de> for DimVisitor {
            type Value = Dimension;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "an array of {SLOTS} exponents (numbers or \"p/q\" strings)")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Dimension, A::Error> {
                let mut out = [Rational64::zero(); SLOTS];
                let mut len = 0;
                while let Some(e) = seq.next_element::<Exp>()? {
                    if len == SLOTS {
                        return Err(de::Error::invalid_length(len + 1, &self));
                    }
                    out[len] = match e {
                        Exp::Num(x) => rational_from_f64(x),
                        Exp::Text(s) => parse_rational(&s),
                    }
                    .ok_or_else(|| de::Error::custom("exponent is not a small rational"))?;
                    len += 1;
                }
                // Shorter vectors leave the trailing slots at zero.
                Ok(Dimension(out))
            }
        }

        deserializer.deserialize_seq(DimVisitor)
    }
}
