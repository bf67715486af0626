use num_traits::One;

use super::{Family, GenError, GeneratorConfig};
use crate::data::{Dataset, Dimension};
use crate::expr::{Evaluator, Exponent, Expr, FuncKind, LeafCache};

/// How a candidate fares under unit constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    /// Dimensionally valid and matches the output (or nothing is known).
    Final,
    /// Valid but with a different dimension than the output.
    Component,
    Rejected,
}

/// `c·X_j^a_j + X_k^a_k`, the inner sum of the rational family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSum {
    pub j: usize,
    pub a_j: Exponent,
    pub k: usize,
    pub a_k: Exponent,
    pub c: f64,
}

impl InnerSum {
    pub fn expr(&self) -> Expr {
        Expr::Sum(vec![
            (self.c, Expr::power_of(self.j, self.a_j)),
            (1.0, Expr::power_of(self.k, self.a_k)),
        ])
    }

    pub fn with_c(self, c: f64) -> InnerSum {
        InnerSum { c, ..self }
    }
}

/// One member of the rational family, `X_i^a_i·(sum)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalParts {
    pub i: usize,
    pub a_i: Exponent,
    pub sum: InnerSum,
    pub n: Exponent,
}

impl RationalParts {
    pub fn expr(&self) -> Expr {
        rational_expr(self.i, self.a_i, &self.sum, self.n)
    }

    /// The `(sum)^n` factor on its own.
    pub fn denominator(&self) -> Expr {
        Expr::pow(self.sum.expr(), self.n)
    }
}

pub fn rational_expr(i: usize, a_i: Exponent, sum: &InnerSum, n: Exponent) -> Expr {
    Expr::Product(vec![Expr::power_of(i, a_i), Expr::pow(sum.expr(), n)])
}

/// Closed-form size of the blind library over `n_features` features.
pub fn library_size(n_features: usize, cfg: &GeneratorConfig) -> u64 {
    count(n_features as u64, n_features as u64, cfg)
}

fn choose(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `plain` features take powers and non-trigonometric functions, `trig`
/// features take trigonometric functions. In blind mode both are all
/// features.
fn count(plain: u64, trig: u64, cfg: &GeneratorConfig) -> u64 {
    let g = cfg.exponent_grid.len() as u64;
    let c = cfg.coefficient_grid.len() as u64;
    let arity = cfg.max_cross_arity as u64;
    let mut total = 0;
    if cfg.has(Family::Original) {
        total += plain;
    }
    if cfg.has(Family::CrossPower) {
        total += (1..=arity).map(|k| choose(plain, k) * g.pow(k as u32)).sum::<u64>();
    }
    if cfg.has(Family::Exponential) {
        let signs = if cfg.signed_exponential { 2 } else { 1 };
        let args = (1..=arity.min(2)).map(|k| choose(plain, k) * g.pow(k as u32)).sum::<u64>();
        total += signs * c * args;
    }
    if cfg.has(Family::Hyperbolic) {
        total += 4 * plain * g * c;
    }
    if cfg.has(Family::Trigonometric) {
        total += 6 * trig * c * if cfg.squared_trig { 2 } else { 1 };
    }
    if cfg.has(Family::Logarithmic) {
        total += plain;
    }
    if cfg.has(Family::RationalComposite) && plain >= 2 {
        total += plain * (plain - 1) * (plain - 1) * g.pow(4) * c;
    }
    total
}

/// A candidate library over a fixed set of active features.
///
/// The non-rational families are held as expressions; the rational family
/// is held as its list of inner sums, each of which expands to
/// `(features − 1) · |grid|²` members.
#[derive(Debug, Clone)]
pub struct Library {
    cfg: GeneratorConfig,
    plain: Vec<usize>,
    trig: Vec<usize>,
    dims: Vec<Option<Dimension>>,
    output_dim: Option<Dimension>,
    simple: Vec<Expr>,
    sums: Vec<InnerSum>,
    raw_count: u64,
}

impl Library {
    pub fn build(ds: &Dataset, cfg: &GeneratorConfig, active: &[usize]) -> Result<Library, GenError> {
        cfg.validate()?;
        let dims = ds.feature_dimensions();
        let constrained = cfg.unit_constrained;
        if constrained {
            if let Some(&f) = active.iter().find(|&&f| dims[f].is_none()) {
                return Err(GenError::UnknownDimension(ds.feature(f).name.clone()));
            }
        }
        let is_angle = |f: usize| dims[f].is_some_and(|d| d.is_angle());
        // With units known, angles only appear inside trigonometric functions.
        let plain: Vec<usize> = active.iter().copied().filter(|&f| !(constrained && is_angle(f))).collect();
        let trig: Vec<usize> = active.iter().copied().filter(|&f| !constrained || is_angle(f)).collect();

        let raw_count = count(plain.len() as u64, trig.len() as u64, cfg);
        if raw_count > cfg.library_cap {
            return Err(GenError::LibraryTooLarge { count: raw_count, cap: cfg.library_cap });
        }

        let mut lib = Library {
            cfg: cfg.clone(),
            plain,
            trig,
            dims,
            output_dim: ds.output().dimension,
            simple: Vec::new(),
            sums: Vec::new(),
            raw_count,
        };
        lib.simple = lib.simple_family();
        if cfg.has(Family::RationalComposite) {
            lib.sums = lib.inner_sums();
        }
        debug_assert_eq!(
            lib.simple.len() as u64 + lib.sums.len() as u64 * lib.rational_per_sum() as u64,
            lib.raw_count
        );
        Ok(lib)
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.cfg
    }

    /// Candidates before any domain or unit filtering.
    pub fn raw_count(&self) -> u64 {
        self.raw_count
    }

    pub fn simple(&self) -> &[Expr] {
        &self.simple
    }

    pub fn sums(&self) -> &[InnerSum] {
        &self.sums
    }

    /// Features that take powers and non-trigonometric functions.
    pub fn plain_features(&self) -> &[usize] {
        &self.plain
    }

    pub fn rational_per_sum(&self) -> usize {
        let g = self.cfg.exponent_grid.len();
        (self.plain.len().saturating_sub(1)) * g * g
    }

    /// Members of the rational family sharing one inner sum, in
    /// enumeration order: prefactor feature, its exponent, then `n`.
    pub fn rational_members(&self, sum: &InnerSum) -> impl Iterator<Item = RationalParts> + '_ {
        let sum = *sum;
        self.plain
            .iter()
            .copied()
            .filter(move |&i| i != sum.j)
            .flat_map(move |i| {
                self.cfg.exponent_grid.iter().flat_map(move |&a_i| {
                    self.cfg.exponent_grid.iter().map(move |&n| RationalParts { i, a_i, sum, n })
                })
            })
    }

    fn power_dim(&self, f: usize, a: Exponent) -> Option<Dimension> {
        self.dims[f].map(|d| d.pow(a))
    }

    /// Dimension of the inner sum; `Err` when its terms disagree.
    pub fn sum_dimension(&self, s: &InnerSum) -> Result<Option<Dimension>, ()> {
        if !self.cfg.unit_constrained {
            return Ok(None);
        }
        match (self.power_dim(s.j, s.a_j), self.power_dim(s.k, s.a_k)) {
            (Some(a), Some(b)) if a != b => Err(()),
            (Some(a), Some(_)) => Ok(Some(a)),
            _ => Ok(None),
        }
    }

    pub fn rational_admission(&self, p: &RationalParts) -> Admission {
        if !self.cfg.unit_constrained {
            return Admission::Final;
        }
        let Ok(sd) = self.sum_dimension(&p.sum) else {
            return Admission::Rejected;
        };
        let d = self.power_dim(p.i, p.a_i).zip(sd).map(|(a, b)| a * b.pow(p.n));
        self.classify(d)
    }

    fn classify(&self, d: Option<Dimension>) -> Admission {
        match (d, self.output_dim) {
            (Some(d), Some(out)) if d != out => {
                if self.cfg.include_components {
                    Admission::Component
                } else {
                    Admission::Rejected
                }
            }
            _ => Admission::Final,
        }
    }

    pub fn admission(&self, e: &Expr) -> Admission {
        if e.depth() > self.cfg.max_depth {
            return Admission::Rejected;
        }
        if !self.cfg.unit_constrained {
            return Admission::Final;
        }
        match e.infer_dimension(&self.dims) {
            Err(_) => Admission::Rejected,
            Ok(d) => self.classify(d),
        }
    }

    /// Exponent powers of every plain feature, for evaluation caches.
    pub fn leaf_cache(&self, ds: &Dataset) -> LeafCache {
        let columns = ds.feature_columns();
        let mut cache = LeafCache::new();
        for &f in &self.plain {
            cache.insert_powers(&columns, f, &self.cfg.exponent_grid);
        }
        cache
    }

    /// Every admissible candidate that evaluates without undefined rows,
    /// in enumeration order, up to `limit`.
    pub fn materialize(&self, ds: &Dataset, limit: usize) -> Vec<Expr> {
        let leaves = self.leaf_cache(ds);
        let mut out = Vec::new();
        let mut ev = Evaluator::for_dataset(ds).with_leaves(&leaves);
        let defined = |ev: &mut Evaluator, e: &Expr| ev.evaluate(e).is_ok();
        for e in &self.simple {
            if out.len() >= limit {
                return out;
            }
            if self.admission(e) != Admission::Rejected && defined(&mut ev, e) {
                out.push(e.clone());
            }
        }
        for s in &self.sums {
            let mut ev = Evaluator::for_dataset(ds).with_leaves(&leaves).with_memo();
            for p in self.rational_members(s) {
                if out.len() >= limit {
                    return out;
                }
                if self.rational_admission(&p) == Admission::Rejected {
                    continue;
                }
                let e = p.expr();
                if defined(&mut ev, &e) {
                    out.push(e);
                }
            }
        }
        out
    }

    fn simple_family(&self) -> Vec<Expr> {
        let cfg = &self.cfg;
        let grid = &cfg.exponent_grid;
        let coeffs = &cfg.coefficient_grid;
        let mut out = Vec::new();

        if cfg.has(Family::Original) {
            out.extend(self.plain.iter().map(|&i| Expr::Feature(i)));
        }

        let monomials = |arity: usize| -> Vec<Expr> {
            let mut v = Vec::new();
            for combo in combinations(&self.plain, arity) {
                for exps in grid_product(grid, arity) {
                    let factors = combo.iter().zip(&exps).map(|(&f, &a)| Expr::power_of(f, a)).collect();
                    v.push(Expr::product(factors));
                }
            }
            v
        };

        if cfg.has(Family::CrossPower) {
            for arity in 1..=cfg.max_cross_arity {
                out.extend(monomials(arity));
            }
        }
        if cfg.has(Family::Exponential) {
            for arity in 1..=cfg.max_cross_arity.min(2) {
                for m in monomials(arity) {
                    for &c in coeffs {
                        let e = Expr::func(FuncKind::Exp, c, m.clone());
                        if cfg.signed_exponential {
                            out.push(e.clone());
                            out.push(Expr::pow(e, -Exponent::one()));
                        } else {
                            out.push(e);
                        }
                    }
                }
            }
        }
        if cfg.has(Family::Hyperbolic) {
            for kind in FuncKind::HYPERBOLIC {
                for &i in &self.plain {
                    for &a in grid {
                        for &c in coeffs {
                            out.push(Expr::func(kind, c, Expr::power_of(i, a)));
                        }
                    }
                }
            }
        }
        if cfg.has(Family::Trigonometric) {
            let mut squared = Vec::new();
            for kind in FuncKind::TRIGONOMETRIC {
                for &i in &self.trig {
                    for &c in coeffs {
                        let e = Expr::func(kind, c, Expr::Feature(i));
                        if cfg.squared_trig {
                            squared.push(Expr::pow(e.clone(), Exponent::from_integer(2)));
                        }
                        out.push(e);
                    }
                }
            }
            out.extend(squared);
        }
        if cfg.has(Family::Logarithmic) {
            out.extend(self.plain.iter().map(|&i| Expr::func(FuncKind::Log, 1.0, Expr::Feature(i))));
        }
        out
    }

    fn inner_sums(&self) -> Vec<InnerSum> {
        let mut out = Vec::new();
        for &j in &self.plain {
            for &k in &self.plain {
                if j == k {
                    continue;
                }
                for &a_j in &self.cfg.exponent_grid {
                    for &a_k in &self.cfg.exponent_grid {
                        for &c in &self.cfg.coefficient_grid {
                            out.push(InnerSum { j, a_j, k, a_k, c });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Cross-power prefactors (up to the configured arity, plus the bare
/// factor itself) multiplied onto a shared factor such as the
/// `(c·X_j^a + X_k^b)^n` of a well-correlated rational candidate.
pub fn expand_prefactors(lib: &Library, factor: &Expr) -> Vec<Expr> {
    let grid = &lib.cfg.exponent_grid;
    let mut out = vec![factor.clone()];
    for arity in 1..=lib.cfg.max_cross_arity {
        for combo in combinations(&lib.plain, arity) {
            for exps in grid_product(grid, arity) {
                let mut factors: Vec<Expr> =
                    combo.iter().zip(&exps).map(|(&f, &a)| Expr::power_of(f, a)).collect();
                factors.push(factor.clone());
                out.push(Expr::Product(factors));
            }
        }
    }
    out.retain(|e| lib.admission(e) != Admission::Rejected);
    out
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for idx in start..items.len() {
            cur.push(items[idx]);
            rec(items, k, idx + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

fn grid_product(grid: &[Exponent], k: usize) -> Vec<Vec<Exponent>> {
    let mut out: Vec<Vec<Exponent>> = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                grid.iter().map(move |&a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}
