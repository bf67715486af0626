//! The discovery loop: drop uninformative features, rank a candidate
//! library, record composite fits, peel the best candidate and repeat;
//! then reconstruct the output from the peeled components and optionally
//! screen candidate combinations with small networks.

mod equivalence;
mod reconstruct;
mod report;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use equivalence::{numeric_equivalence, numeric_equivalence_with, EQUIVALENCE_SAMPLES, EQUIVALENCE_TOL};
pub use reconstruct::{reconstruct, Reconstruction, MAX_CONDITION};
pub use report::{curves_csv, frequency_json, ranked_csv, render_text};

use crate::correlation::{
    detect_uninformative_with, fit_linear_composite, fit_power_composite, least_squares_peel, peel_residual,
    rank_exprs, rank_library, refine_scale, CompositeFit, CorrError, PeelMode, PowerSearch, RankOptions,
    RankedCandidate, Scorer,
};
use crate::data::{standardize, DataError, Dataset};
use crate::expr::{Expr, ExprError};
use crate::generator::{eligible_features, expand_prefactors, Admission, Family, GenError, GeneratorConfig, Library};
use crate::nn::{derive_seed, screen_combinations, NnError, Protocol, ScreenOutcome, TrainConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Correlation(#[from] CorrError),
    #[error(transparent)]
    Network(#[from] NnError),
    #[error("components are (nearly) linearly dependent: condition number {condition:e}")]
    IllConditioned { condition: f64 },
    #[error("{0} is undefined on repeated samples of the domain")]
    DomainViolation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

/// Which candidates feed the network screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenSource {
    /// Distinct candidates from every iteration's ranked list.
    #[default]
    Ranked,
    /// The whole (admissible) first-round library.
    Library,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScreenMode {
    Random { n_trials: usize, k_min: usize, k_max: usize },
    /// One single-feature function of each of the two lowest-indexed
    /// features that have any.
    CrossProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreenSettings {
    pub mode: ScreenMode,
    pub source: ScreenSource,
    pub train: TrainConfig,
}

impl Default for ScreenSettings {
    fn default() -> Self {
        ScreenSettings {
            mode: ScreenMode::Random { n_trials: 100, k_min: 2, k_max: 6 },
            source: ScreenSource::Ranked,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscoveryConfig {
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub top_k: usize,
    pub pool_factor: usize,
    pub dedup_threshold: Option<f64>,
    pub peel_mode: PeelMode,
    /// Stop once the best |r| of a round falls below this.
    pub stop_r: f64,
    pub max_iterations: usize,
    pub detect_dummies: bool,
    pub n_perm: usize,
    /// Number of leading candidate pairs fitted with both composite forms.
    pub composite_pairs: usize,
    /// Distinct rational factors whose inner coefficient is refined and
    /// which are then multiplied by every cross-power prefactor.
    pub expand_rational: usize,
    pub screen: Option<ScreenSettings>,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            seed: 0,
            generator: GeneratorConfig::default(),
            top_k: 20,
            pool_factor: 10,
            dedup_threshold: Some(0.9999),
            peel_mode: PeelMode::Projection,
            stop_r: 0.3,
            max_iterations: 5,
            detect_dummies: true,
            n_perm: 200,
            composite_pairs: 20,
            expand_rational: 5,
            screen: None,
        }
    }
}

impl DiscoveryConfig {
    /// Adds the rational family, raising the library cap to fit it.
    pub fn with_rational(mut self) -> Self {
        self.generator = self.generator.with_rational();
        self.generator.library_cap = self.generator.library_cap.max(30_000_000);
        self
    }

    /// Constrained library with unit checks, as used when units are known.
    pub fn constrained() -> Self {
        DiscoveryConfig { generator: GeneratorConfig::constrained(), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeRecord {
    pub first: Expr,
    pub second: Expr,
    pub linear: Option<CompositeFit>,
    pub power: Option<CompositeFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    /// Features judged uninformative against this round's target.
    pub flagged: Vec<String>,
    pub library_size: u64,
    pub scored: u64,
    pub rejected: u64,
    pub ranked: Vec<RankedCandidate>,
    pub composites: Vec<CompositeRecord>,
    /// The candidate removed from the output after this round.
    pub peeled: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub config: DiscoveryConfig,
    pub n_rows: usize,
    pub features: Vec<String>,
    /// Features flagged as uninformative in every round.
    pub dropped: Vec<String>,
    pub iterations: Vec<IterationReport>,
    pub components: Vec<Expr>,
    pub reconstruction: Option<Reconstruction>,
    pub screening: Option<ScreenOutcome>,
    pub notes: Vec<String>,
}

impl DiscoveryReport {
    pub fn method(&self) -> &'static str {
        if self.screening.is_some() {
            "iterative correlation analysis + neural network screening"
        } else {
            "iterative correlation analysis"
        }
    }
}

/// Runs the whole discovery loop on `ds`.
pub fn discover(ds: &Dataset, cfg: &DiscoveryConfig) -> Result<DiscoveryReport, PipelineError> {
    cfg.generator.validate()?;
    let mut report = DiscoveryReport {
        config: cfg.clone(),
        n_rows: ds.n_rows(),
        features: ds.features().iter().map(|c| c.name.clone()).collect(),
        dropped: Vec::new(),
        iterations: Vec::new(),
        components: Vec::new(),
        reconstruction: None,
        screening: None,
        notes: Vec::new(),
    };
    let y = ds.output().values.clone();
    if standardize(&y).is_err() {
        report.notes.push("ZeroVariance: the output is constant; nothing to discover".into());
        return Ok(report);
    }

    let eligible = eligible_features(ds);
    let mut always_flagged: Option<BTreeSet<usize>> = None;
    let mut component_values: Vec<Vec<f64>> = Vec::new();
    let mut current = y.clone();
    let mut first_library: Option<Library> = None;

    for it in 0..cfg.max_iterations {
        let scorer = match cfg.peel_mode {
            PeelMode::Projection => {
                let refs: Vec<&[f64]> = component_values.iter().map(Vec::as_slice).collect();
                Scorer::with_components(&y, &refs)
            }
            PeelMode::Literal | PeelMode::LeastSquares => Scorer::new(&current),
        };
        let scorer = match scorer {
            Ok(s) => s,
            Err(CorrError::NothingLeft) => {
                report.notes.push(format!("output fully explained after {it} iteration(s)"));
                break;
            }
            Err(e) => return Err(e.into()),
        };

        let flagged: BTreeSet<usize> = if cfg.detect_dummies {
            let all = detect_uninformative_with(ds, &scorer, &cfg.generator.exponent_grid, cfg.n_perm, derive_seed(cfg.seed, it as u64));
            all.into_iter().filter(|f| eligible.contains(f)).collect()
        } else {
            BTreeSet::new()
        };
        always_flagged = Some(match always_flagged {
            None => flagged.clone(),
            Some(prev) => prev.intersection(&flagged).copied().collect(),
        });
        let active: Vec<usize> = eligible.iter().copied().filter(|f| !flagged.contains(f)).collect();
        let mut round = IterationReport {
            iteration: it,
            flagged: flagged.iter().map(|&f| ds.feature(f).name.clone()).collect(),
            library_size: 0,
            scored: 0,
            rejected: 0,
            ranked: Vec::new(),
            composites: Vec::new(),
            peeled: None,
        };
        if active.is_empty() {
            report.notes.push(format!("iteration {it}: every feature looks uninformative"));
            report.iterations.push(round);
            break;
        }

        let lib = Library::build(ds, &cfg.generator, &active)?;
        let opts = RankOptions {
            top_k: cfg.top_k,
            pool_factor: cfg.pool_factor,
            dedup_threshold: cfg.dedup_threshold,
            iteration: it,
        };
        let mut outcome = rank_library(&lib, ds, &scorer, &opts);
        round.library_size = lib.raw_count();
        if cfg.generator.has(Family::RationalComposite) && cfg.expand_rational > 0 {
            let extra = expand_rational(&lib, ds, &scorer, &outcome.ranked, cfg.expand_rational);
            if !extra.is_empty() {
                let mut merged: Vec<Expr> = outcome.ranked.iter().map(|c| c.expr.clone()).collect();
                merged.extend(extra);
                let more = rank_exprs(&merged, ds, &scorer, &opts);
                outcome.ranked = more.ranked;
            }
        }
        round.scored = outcome.scored;
        round.rejected = outcome.rejected;
        round.ranked = outcome.ranked;
        round.composites = composites(&round.ranked, ds, &scorer, &cfg.generator, cfg.composite_pairs);

        if first_library.is_none() {
            first_library = Some(lib);
        }
        let Some(best) = round.ranked.first().cloned() else {
            report.notes.push(format!("iteration {it}: no candidate could be scored"));
            report.iterations.push(round);
            break;
        };
        if best.r.abs() < cfg.stop_r {
            report.notes.push(format!("stopped at iteration {it}: best |r| {:.4} below {}", best.r.abs(), cfg.stop_r));
            report.iterations.push(round);
            break;
        }
        let z = best.expr.evaluate(ds)?;
        match cfg.peel_mode {
            PeelMode::Projection => {}
            PeelMode::Literal => current = peel_residual(&current, &z)?,
            PeelMode::LeastSquares => current = least_squares_peel(&current, &z)?,
        }
        component_values.push(z);
        report.components.push(best.expr.clone());
        round.peeled = Some(best.expr);
        report.iterations.push(round);
    }

    report.dropped = always_flagged
        .unwrap_or_default()
        .into_iter()
        .map(|f| ds.feature(f).name.clone())
        .collect();

    if !report.components.is_empty() {
        match reconstruct(&report.components, ds) {
            Ok(r) => report.reconstruction = Some(r),
            Err(e) => report.notes.push(format!("reconstruction failed: {e}")),
        }
    }

    if let Some(settings) = &cfg.screen {
        let candidates: Vec<Expr> = match settings.source {
            ScreenSource::Ranked => {
                let mut seen = BTreeSet::new();
                report
                    .iterations
                    .iter()
                    .flat_map(|r| &r.ranked)
                    .filter(|c| seen.insert(c.expr.to_string()))
                    .map(|c| c.expr.clone())
                    .collect()
            }
            ScreenSource::Library => match &first_library {
                Some(lib) => lib
                    .materialize(ds, usize::MAX)
                    .into_iter()
                    .filter(|e| lib.admission(e) == Admission::Final)
                    .collect(),
                None => Vec::new(),
            },
        };
        let protocol = match settings.mode {
            ScreenMode::Random { n_trials, k_min, k_max } => Some(Protocol::Random { n_trials, k_min, k_max }),
            ScreenMode::CrossProduct => cross_groups(&candidates),
        };
        match protocol {
            Some(p) if !candidates.is_empty() || matches!(p, Protocol::CrossProduct { .. }) => {
                match screen_combinations(&candidates, ds, &p, &settings.train, cfg.seed) {
                    Ok(s) => report.screening = Some(s),
                    Err(e) => report.notes.push(format!("screening failed: {e}")),
                }
            }
            _ => report.notes.push("screening skipped: not enough candidates".into()),
        }
    }
    Ok(report)
}

/// Splits single-feature candidates by feature and pairs the first two groups.
pub fn cross_groups(candidates: &[Expr]) -> Option<Protocol> {
    let mut groups: std::collections::BTreeMap<usize, Vec<Expr>> = Default::default();
    for c in candidates {
        let feats = c.referenced_features();
        if feats.len() == 1 {
            groups.entry(*feats.iter().next().unwrap()).or_default().push(c.clone());
        }
    }
    let mut it = groups.into_values();
    match (it.next(), it.next()) {
        (Some(first), Some(second)) => Some(Protocol::CrossProduct { first, second }),
        _ => None,
    }
}

/// The `(c·X_j^a + X_k^b)^n` factor of a rational candidate, if any.
fn rational_factor(e: &Expr) -> Option<&Expr> {
    let is_factor = |f: &Expr| match f {
        Expr::Pow(base, _) => matches!(**base, Expr::Sum(ref t) if t.len() == 2),
        Expr::Sum(t) => t.len() == 2,
        _ => false,
    };
    match e {
        Expr::Product(fs) => fs.iter().find(|f| is_factor(f)),
        other if is_factor(other) => Some(other),
        _ => None,
    }
}

fn with_inner_coefficient(e: &Expr, c: f64) -> Expr {
    match e {
        Expr::Sum(t) => {
            let mut t = t.clone();
            t[0].0 = c;
            Expr::Sum(t)
        }
        Expr::Pow(base, n) => Expr::Pow(Box::new(with_inner_coefficient(base, c)), *n),
        Expr::Product(fs) => Expr::Product(
            fs.iter()
                .map(|f| if rational_factor(f).is_some() { with_inner_coefficient(f, c) } else { f.clone() })
                .collect(),
        ),
        other => other.clone(),
    }
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let p = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * p).round() / p
}

/// Refines the inner coefficient of the leading rational candidates and
/// multiplies each refined factor by every cross-power prefactor.
fn expand_rational(lib: &Library, ds: &Dataset, scorer: &Scorer, ranked: &[RankedCandidate], limit: usize) -> Vec<Expr> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for cand in ranked {
        if seen.len() >= limit {
            break;
        }
        if rational_factor(&cand.expr).is_none() {
            continue;
        }
        let Some((c, _, _)) = refine_scale(|c| with_inner_coefficient(&cand.expr, c), ds, scorer, 1e-3, 1e3) else {
            continue;
        };
        let refined = with_inner_coefficient(&cand.expr, round_sig(c, 4));
        let factor = rational_factor(&refined).expect("refinement keeps the factor").clone();
        if seen.insert(factor.to_string()) {
            out.extend(expand_prefactors(lib, &factor));
        }
    }
    out
}

fn composites(
    ranked: &[RankedCandidate],
    ds: &Dataset,
    scorer: &Scorer,
    cfg: &GeneratorConfig,
    limit: usize,
) -> Vec<CompositeRecord> {
    let scale = (scorer.n_rows() as f64).sqrt();
    let target: Vec<f64> = scorer.target().iter().map(|t| t * scale).collect();
    let values: Vec<Option<Vec<f64>>> = ranked
        .iter()
        .map(|c| c.expr.evaluate(ds).ok().and_then(|v| standardize(&v).ok()).map(|s| s.values))
        .collect();
    let mut out = Vec::new();
    'pairs: for i in 0..ranked.len() {
        for j in i + 1..ranked.len() {
            if out.len() >= limit {
                break 'pairs;
            }
            let (Some(z1), Some(z2)) = (&values[i], &values[j]) else { continue };
            out.push(CompositeRecord {
                first: ranked[i].expr.clone(),
                second: ranked[j].expr.clone(),
                linear: fit_linear_composite(z1, z2, &target).ok(),
                power: fit_power_composite(z1, z2, &target, &cfg.exponent_grid, &PowerSearch::default()).ok(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::expr::parse;

    #[test]
    fn constant_output_is_reported() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let ds = Dataset::from_columns(vec![x], vec![3.0; 100]).unwrap();
        let r = discover(&ds, &DiscoveryConfig::default()).unwrap();
        assert!(r.components.is_empty());
        assert!(r.notes[0].starts_with("ZeroVariance"));
    }

    #[test]
    fn rational_factor_and_coefficient() {
        let e = parse("X2^0.5*(0.25*X3^(-0.5) + X1^0.5)^(-2)").unwrap();
        assert_eq!(rational_factor(&e).unwrap().to_string(), "(0.25*X3^(-0.5) + X1^0.5)^(-2)");
        assert_eq!(with_inner_coefficient(&e, 0.374).to_string(), "X2^0.5*(0.374*X3^(-0.5) + X1^0.5)^(-2)");
        assert!(rational_factor(&parse("X1*X2").unwrap()).is_none());
        assert_eq!(round_sig(0.374_123, 4), 0.3741);
    }

    #[test]
    fn cross_groups_by_feature() {
        let c: Vec<Expr> = ["X2^2", "sin(1*X1)", "tan(2*X1)", "X1*X2", "X2^(-1)"].iter().map(|s| parse(s).unwrap()).collect();
        match cross_groups(&c).unwrap() {
            Protocol::CrossProduct { first, second } => {
                assert_eq!(first.len(), 2);
                assert_eq!(second.len(), 2);
            }
            _ => unreachable!(),
        }
    }
}
