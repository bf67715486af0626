//! Candidate libraries of base functions.
//!
//! The blind library covers original features, cross powers up to three
//! features, signed exponentials, hyperbolic and trigonometric functions.
//! The rational family `X_i^a·(c·X_j^b + X_k^d)^n` is much larger and is
//! enumerated lazily by inner sum so callers can score it in chunks.

mod config;
mod dedup;
mod library;

pub use config::{Family, GeneratorConfig};
pub use dedup::dedup;
pub use library::{
    expand_prefactors, library_size, rational_expr, Admission, InnerSum, Library, RationalParts,
};

use crate::data::{Dataset, Role};
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("library would hold {count} candidates, over the cap of {cap}; restrict families or arity")]
    LibraryTooLarge { count: u64, cap: u64 },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("unit-constrained generation needs a known dimension for feature {0}")]
    UnknownDimension(String),
}

/// Features that generation may use: everything not marked as a dummy.
pub fn eligible_features(ds: &Dataset) -> Vec<usize> {
    (0..ds.n_features()).filter(|&i| ds.feature(i).role != Role::Dummy).collect()
}

/// Materialized library of the non-rational families, with undefined and
/// (in constrained mode) dimensionally invalid candidates removed.
pub fn generate(ds: &Dataset, cfg: &GeneratorConfig) -> Result<Vec<Expr>, GenError> {
    let mut cfg = cfg.clone();
    cfg.families.remove(&Family::RationalComposite);
    let lib = Library::build(ds, &cfg, &eligible_features(ds))?;
    Ok(lib.materialize(ds, usize::MAX))
}

/// Materialized rational family alone. Meant for small feature sets; large
/// ones should be scored through [`Library`] without materializing.
pub fn generate_rational(ds: &Dataset, cfg: &GeneratorConfig) -> Result<Vec<Expr>, GenError> {
    let mut cfg = cfg.clone();
    cfg.families.clear();
    cfg.families.insert(Family::RationalComposite);
    let lib = Library::build(ds, &cfg, &eligible_features(ds))?;
    Ok(lib.materialize(ds, usize::MAX))
}
