use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GenError;
use crate::data::{parse_rational, rational_from_f64};
use crate::expr::Exponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Original,
    CrossPower,
    Exponential,
    Hyperbolic,
    Trigonometric,
    Logarithmic,
    RationalComposite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    #[serde(with = "exponent_list")]
    pub exponent_grid: Vec<Exponent>,
    pub coefficient_grid: Vec<f64>,
    pub families: BTreeSet<Family>,
    pub max_cross_arity: usize,
    pub unit_constrained: bool,
    /// Adds `f(c·X)^2` for every trigonometric `f`.
    pub squared_trig: bool,
    /// Exponentials also get negative arguments, written `exp(c·…)^(-1)`.
    pub signed_exponential: bool,
    /// Keep candidates whose dimension differs from the output's.
    pub include_components: bool,
    pub library_cap: u64,
    pub max_depth: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            exponent_grid: [-6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6]
                .into_iter()
                .map(|n| Exponent::new(n, 2))
                .collect(),
            coefficient_grid: vec![0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0],
            families: [
                Family::Original,
                Family::CrossPower,
                Family::Exponential,
                Family::Hyperbolic,
                Family::Trigonometric,
            ]
            .into_iter()
            .collect(),
            max_cross_arity: 3,
            unit_constrained: false,
            squared_trig: true,
            signed_exponential: true,
            include_components: false,
            library_cap: 5_000_000,
            max_depth: 4,
        }
    }
}

impl GeneratorConfig {
    /// Default grids plus the rational family.
    pub fn with_rational(mut self) -> Self {
        self.families.insert(Family::RationalComposite);
        self
    }

    /// The small constrained library used when units and roles are known:
    /// single-feature powers with a wider exponent grid and plain
    /// trigonometric functions of angle features.
    pub fn constrained() -> Self {
        GeneratorConfig {
            exponent_grid: [(-4, 1), (-2, 1), (-1, 1), (-1, 2), (1, 2), (1, 1), (2, 1), (4, 1)]
                .into_iter()
                .map(|(n, d)| Exponent::new(n, d))
                .collect(),
            coefficient_grid: vec![1.0, 2.0, 5.0],
            families: [Family::CrossPower, Family::Trigonometric].into_iter().collect(),
            max_cross_arity: 1,
            unit_constrained: true,
            squared_trig: false,
            signed_exponential: false,
            include_components: true,
            library_cap: 5_000_000,
            max_depth: 4,
        }
    }

    pub fn has(&self, f: Family) -> bool {
        self.families.contains(&f)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidConfig(m.to_owned()));
        if self.exponent_grid.is_empty() {
            return bad("exponent grid is empty");
        }
        if self.exponent_grid.iter().any(|a| *a.numer() == 0) {
            return bad("exponent grid contains 0");
        }
        if self.coefficient_grid.is_empty() {
            return bad("coefficient grid is empty");
        }
        if self.coefficient_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return bad("coefficients must be finite and positive");
        }
        if !(1..=3).contains(&self.max_cross_arity) {
            return bad("max_cross_arity must be 1, 2 or 3");
        }
        if self.max_depth < 3 {
            return bad("max_depth below 3 cannot hold the built-in families");
        }
        if self.has(Family::RationalComposite) && self.max_depth < 4 {
            return bad("the rational family needs max_depth of at least 4");
        }
        Ok(())
    }
}

/// Exponent grids as JSON numbers, or `"p/q"` for thirds and the like.
mod exponent_list {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Item {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[Exponent], s: S) -> Result<S::Ok, S::Error> {
        let items: Vec<Item> = v
            .iter()
            .map(|a| match *a.denom() {
                1 | 2 | 4 | 5 | 8 | 10 => Item::Num(a.to_f64().unwrap_or(f64::NAN)),
                _ => Item::Text(a.to_string()),
            })
            .collect();
        items.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Exponent>, D::Error> {
        Vec::<Item>::deserialize(d)?
            .into_iter()
            .map(|it| {
                match it {
                    Item::Num(x) => rational_from_f64(x),
                    Item::Text(s) => parse_rational(&s),
                }
                .ok_or_else(|| serde::de::Error::custom("exponent is not a small rational"))
            })
            .collect()
    }
}
