use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CorrError, RankedCandidate, Scorer};
use crate::data::Dataset;
use crate::expr::{pow_values, Complexity, Evaluator, Exponent, Expr, LeafCache};
use crate::generator::{dedup, Admission, InnerSum, Library, RationalParts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankOptions {
    pub top_k: usize,
    /// The exact-scoring pool holds `top_k · pool_factor` candidates.
    pub pool_factor: usize,
    /// Near-duplicate threshold applied to the pool; `None` keeps all.
    pub dedup_threshold: Option<f64>,
    pub iteration: usize,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions { top_k: 20, pool_factor: 10, dedup_threshold: Some(0.9999), iteration: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankOutcome {
    pub ranked: Vec<RankedCandidate>,
    /// Candidates that produced a score.
    pub scored: u64,
    /// Candidates skipped as undefined, constant or dimensionally invalid.
    pub rejected: u64,
}

/// Pearson ranking of explicit candidates against `y`: every candidate is
/// scored exactly, no near-duplicate removal.
pub fn rank(cands: &[Expr], ds: &Dataset, y: &[f64], top_k: usize) -> Result<RankOutcome, CorrError> {
    let scorer = Scorer::new(y)?;
    let opts = RankOptions { top_k, pool_factor: usize::MAX / top_k.max(1), dedup_threshold: None, iteration: 0 };
    Ok(rank_exprs(cands, ds, &scorer, &opts))
}

#[derive(Debug, Clone)]
enum Cand {
    Listed(usize),
    Rational(RationalParts),
}

#[derive(Debug, Clone)]
struct Hit {
    r: f64,
    complexity: Complexity,
    index: u64,
    cand: Cand,
}

fn hit_order(a: &Hit, b: &Hit) -> Ordering {
    b.r.abs()
        .total_cmp(&a.r.abs())
        .then_with(|| a.complexity.cmp(&b.complexity))
        .then_with(|| a.index.cmp(&b.index))
}

#[derive(Default)]
struct Pool {
    hits: Vec<Hit>,
    cap: usize,
    /// |r| of the worst kept hit once the pool has been pruned.
    floor: f64,
    scored: u64,
    rejected: u64,
}

impl Pool {
    fn new(cap: usize) -> Self {
        Pool { cap, ..Default::default() }
    }

    /// Whether a hit with this score could still make the pool.
    fn admits(&self, r: f64) -> bool {
        r.abs() >= self.floor
    }

    fn push(&mut self, h: Hit) {
        self.scored += 1;
        if !self.admits(h.r) {
            return;
        }
        self.hits.push(h);
        if self.hits.len() >= self.cap.saturating_mul(4).max(64) {
            self.prune();
        }
    }

    fn prune(&mut self) {
        if self.hits.len() > self.cap {
            self.hits.select_nth_unstable_by(self.cap - 1, hit_order);
            self.hits.truncate(self.cap);
            self.floor = self.hits[self.cap - 1].r.abs();
        }
    }

    fn merge(mut self, other: Pool) -> Pool {
        self.scored += other.scored;
        self.rejected += other.rejected;
        self.hits.extend(other.hits);
        self.prune();
        self
    }
}

const CHUNK: usize = 256;

fn score_listed(
    exprs: &[Expr],
    range: std::ops::Range<usize>,
    ds: &Dataset,
    scorer: &Scorer,
    leaves: Option<&LeafCache>,
    admit: &(dyn Fn(&Expr) -> bool + Sync),
    cap: usize,
) -> Pool {
    let mut pool = Pool::new(cap);
    let mut ev = Evaluator::for_dataset(ds).with_memo();
    if let Some(l) = leaves {
        ev = ev.with_leaves(l);
    }
    for idx in range {
        let e = &exprs[idx];
        let r = if admit(e) { ev.evaluate_raw(e).ok().and_then(|v| scorer.fast(&v)) } else { None };
        match r {
            Some(r) => pool.push(Hit { r, complexity: e.complexity(), index: idx as u64, cand: Cand::Listed(idx) }),
            None => pool.rejected += 1,
        }
    }
    pool
}

fn leaf_nodes(a: Exponent) -> usize {
    if a.is_one() {
        1
    } else {
        2
    }
}

fn rational_complexity(p: &RationalParts) -> Complexity {
    let outer = if p.n.is_one() { 0 } else { 1 };
    Complexity {
        node_count: 2 + outer + leaf_nodes(p.a_i) + leaf_nodes(p.sum.a_j) + leaf_nodes(p.sum.a_k),
        transcendental_count: 0,
    }
}

/// Prefactor powers `X_i^a` (and their squares) of every plain feature as
/// matrix columns, so that all members sharing an inner sum are scored with
/// two matrix products.
struct Prefactors {
    /// Row `f·G + g` holds `X_plain[f]^grid[g]`; stored as rows because
    /// `Aᵀ·B` is much slower than `A·B` here.
    pt: DMatrix<f64>,
    p2t: DMatrix<f64>,
    valid: Vec<bool>,
}

impl Prefactors {
    fn new(lib: &Library, leaves: &LeafCache, n: usize) -> Prefactors {
        let grid = &lib.config().exponent_grid;
        let cols = lib.plain_features().len() * grid.len();
        let mut p = DMatrix::zeros(n, cols);
        let mut p2 = DMatrix::zeros(n, cols);
        let mut valid = vec![false; cols];
        for (f, &feat) in lib.plain_features().iter().enumerate() {
            for (g, &a) in grid.iter().enumerate() {
                let c = f * grid.len() + g;
                if let Some(l) = leaves.get(feat, a).filter(|l| l.iter().all(|v| v.is_finite())) {
                    p.column_mut(c).copy_from_slice(l);
                    p2.column_mut(c).iter_mut().zip(l).for_each(|(x, v)| *x = v * v);
                    valid[c] = !p2.column(c).iter().any(|v| !v.is_finite());
                }
            }
        }
        Prefactors { pt: p.transpose(), p2t: p2.transpose(), valid }
    }
}

#[allow(clippy::too_many_arguments)]
fn score_sum(
    lib: &Library,
    sum_index: usize,
    sum: &InnerSum,
    base_index: u64,
    leaves: &LeafCache,
    pre: &Prefactors,
    scorer: &Scorer,
    cap: usize,
) -> Pool {
    let mut pool = Pool::new(cap);
    let per_sum = lib.rational_per_sum() as u64;
    let start = base_index + sum_index as u64 * per_sum;
    if lib.sum_dimension(sum).is_err() {
        pool.rejected += per_sum;
        return pool;
    }
    let (Some(xj), Some(xk)) = (leaves.get(sum.j, sum.a_j), leaves.get(sum.k, sum.a_k)) else {
        pool.rejected += per_sum;
        return pool;
    };
    let s: Vec<f64> = xj.iter().zip(xk).map(|(a, b)| sum.c * a + b).collect();
    if s.iter().any(|v| !v.is_finite()) {
        pool.rejected += per_sum;
        return pool;
    }
    let grid = &lib.config().exponent_grid;
    let basis = scorer.basis();
    let width = basis.len() + 1;
    let n = scorer.n_rows();
    // Per power of the sum: d·t and d·q for each basis column, and d².
    let mut r = DMatrix::zeros(n, grid.len() * width);
    let mut w = DMatrix::zeros(n, grid.len());
    let mut ok = vec![false; grid.len()];
    for (g, &e) in grid.iter().enumerate() {
        let d = pow_values(&s, e);
        if !d.iter().all(|v| v.is_finite() && (v * v).is_finite()) {
            continue;
        }
        ok[g] = true;
        let t = scorer.target();
        r.column_mut(g * width).iter_mut().enumerate().for_each(|(i, x)| *x = d[i] * t[i]);
        for (m, q) in basis.iter().enumerate() {
            r.column_mut(g * width + 1 + m).iter_mut().enumerate().for_each(|(i, x)| *x = d[i] * q[i]);
        }
        w.column_mut(g).iter_mut().zip(&d).for_each(|(x, v)| *x = v * v);
    }
    let a = &pre.pt * &r;
    let b = &pre.p2t * &w;

    let plain = lib.plain_features();
    for (offset, p) in lib.rational_members(sum).enumerate() {
        let n_idx = offset % grid.len();
        let f = plain.iter().position(|&x| x == p.i).expect("prefactor is a plain feature");
        let row = f * grid.len() + grid.iter().position(|&x| x == p.a_i).expect("exponent on the grid");
        let score = if ok[n_idx] && pre.valid[row] && lib.rational_admission(&p) != Admission::Rejected {
            let col = n_idx * width;
            Scorer::from_sums(a[(row, col)], b[(row, n_idx)], (0..basis.len()).map(|m| a[(row, col + 1 + m)]))
        } else {
            None
        };
        match score {
            Some(r) => pool.push(Hit {
                r,
                complexity: rational_complexity(&p),
                index: start + offset as u64,
                cand: Cand::Rational(p),
            }),
            None => pool.rejected += 1,
        }
    }
    pool
}

/// Scores a whole library in parallel chunks, keeps the best
/// `top_k · pool_factor` by fast score, rescored exactly.
pub fn rank_library(lib: &Library, ds: &Dataset, scorer: &Scorer, opts: &RankOptions) -> RankOutcome {
    let cap = pool_cap(opts);
    let leaves = lib.leaf_cache(ds);
    let simple = lib.simple();
    let admit = |e: &Expr| lib.admission(e) != Admission::Rejected;
    let ranges: Vec<_> = (0..simple.len()).step_by(CHUNK).map(|s| s..(s + CHUNK).min(simple.len())).collect();
    let listed = ranges
        .into_par_iter()
        .map(|r| score_listed(simple, r, ds, scorer, Some(&leaves), &admit, cap))
        .collect::<Vec<_>>();
    let base = simple.len() as u64;
    let pre = if lib.sums().is_empty() { None } else { Some(Prefactors::new(lib, &leaves, ds.n_rows())) };
    let rational = lib
        .sums()
        .par_iter()
        .enumerate()
        .map(|(si, s)| score_sum(lib, si, s, base, &leaves, pre.as_ref().expect("built for sums"), scorer, cap))
        .collect::<Vec<_>>();
    let pool = listed.into_iter().chain(rational).fold(Pool::new(cap), Pool::merge);
    finish(pool, |c| match c {
        Cand::Listed(i) => simple[*i].clone(),
        Cand::Rational(p) => p.expr(),
    }, ds, scorer, opts)
}

/// Ranks explicit candidates with a given scorer.
pub fn rank_exprs(cands: &[Expr], ds: &Dataset, scorer: &Scorer, opts: &RankOptions) -> RankOutcome {
    let cap = pool_cap(opts);
    let admit = |_: &Expr| true;
    let ranges: Vec<_> = (0..cands.len()).step_by(CHUNK).map(|s| s..(s + CHUNK).min(cands.len())).collect();
    let pool = ranges
        .into_par_iter()
        .map(|r| score_listed(cands, r, ds, scorer, None, &admit, cap))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Pool::new(cap), Pool::merge);
    finish(pool, |c| match c {
        Cand::Listed(i) => cands[*i].clone(),
        Cand::Rational(p) => p.expr(),
    }, ds, scorer, opts)
}

fn pool_cap(opts: &RankOptions) -> usize {
    opts.top_k.max(1).saturating_mul(opts.pool_factor.max(1))
}

fn finish(
    pool: Pool,
    build: impl Fn(&Cand) -> Expr,
    ds: &Dataset,
    scorer: &Scorer,
    opts: &RankOptions,
) -> RankOutcome {
    let mut hits = pool.hits;
    hits.sort_by(hit_order);
    let mut rejected = pool.rejected;
    let mut scored = pool.scored;
    let mut ev = Evaluator::for_dataset(ds).with_memo();
    let mut exact: Vec<(f64, Complexity, String, Expr)> = Vec::with_capacity(hits.len());
    for h in &hits {
        let e = build(&h.cand);
        match ev.evaluate(&e).ok().and_then(|v| scorer.exact(&v)) {
            Some(r) => exact.push((r, e.complexity(), e.to_string(), e)),
            None => {
                rejected += 1;
                scored -= 1;
            }
        }
    }
    exact.sort_by(|a, b| {
        b.0.abs().total_cmp(&a.0.abs()).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2))
    });
    if let Some(t) = opts.dedup_threshold {
        let exprs: Vec<Expr> = exact.iter().map(|x| x.3.clone()).collect();
        let mut kept: std::collections::HashSet<Expr> = dedup(&exprs, ds, t).into_iter().collect();
        exact.retain(|x| kept.remove(&x.3));
    }
    exact.truncate(opts.top_k);
    RankOutcome {
        ranked: exact
            .into_iter()
            .map(|(r, complexity, _, expr)| RankedCandidate { expr, r, complexity, iteration: opts.iteration })
            .collect(),
        scored,
        rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::generator::{Family, GeneratorConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 400;
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let y = (0..n).map(|i| b[i].sqrt() / (0.4 / c[i].sqrt() + a[i].sqrt()).powi(2)).collect();
        Dataset::from_columns(vec![a, b, c], y).unwrap()
    }

    #[test]
    fn single_candidate_is_returned() {
        let d = ds(1);
        let out = rank(&[parse("X3").unwrap()], &d, &d.output().values, 20).unwrap();
        assert_eq!(out.ranked.len(), 1);
    }

    #[test]
    fn sorted_and_order_independent() {
        let d = ds(2);
        let cands: Vec<Expr> = ["X1", "X2", "X3", "X1^(-1)", "X2^0.5", "X1^(-0.5)*X2^0.5", "X3^(-0.5)"]
            .iter()
            .map(|s| parse(s).unwrap())
            .collect();
        let a = rank(&cands, &d, &d.output().values, 5).unwrap();
        let mut rev = cands.clone();
        rev.reverse();
        let b = rank(&rev, &d, &d.output().values, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ranked.len(), 5);
        for w in a.ranked.windows(2) {
            assert!(w[0].r.abs() >= w[1].r.abs());
        }
    }

    #[test]
    fn undefined_candidates_are_counted() {
        let d = ds(3);
        let x: Vec<f64> = (0..d.n_rows()).map(|i| i as f64 - 10.0).collect();
        let d2 = Dataset::from_columns(vec![x], d.output().values.clone()).unwrap();
        let out = rank(&[parse("X1^0.5").unwrap(), parse("X1").unwrap()], &d2, &d2.output().values, 5).unwrap();
        assert_eq!((out.scored, out.rejected), (1, 1));
    }

    #[test]
    fn rational_complexity_formula() {
        let d = ds(4);
        let cfg = GeneratorConfig {
            families: [Family::RationalComposite].into_iter().collect(),
            ..Default::default()
        };
        let lib = Library::build(&d, &cfg, &[0, 1, 2]).unwrap();
        for s in lib.sums().iter().step_by(97) {
            for p in lib.rational_members(s).step_by(13) {
                assert_eq!(rational_complexity(&p), p.expr().complexity());
            }
        }
    }

    #[test]
    fn library_ranking_matches_explicit_ranking() {
        let d = ds(5);
        let cfg = GeneratorConfig {
            families: [Family::CrossPower, Family::RationalComposite].into_iter().collect(),
            max_cross_arity: 2,
            exponent_grid: [-1, 1].iter().map(|&n| Exponent::new(n, 2)).chain([Exponent::from_integer(-2)]).collect(),
            coefficient_grid: vec![0.25, 0.4],
            ..Default::default()
        };
        let lib = Library::build(&d, &cfg, &[0, 1, 2]).unwrap();
        let all = lib.materialize(&d, usize::MAX);
        let scorer = Scorer::new(&d.output().values).unwrap();
        let opts = RankOptions { top_k: 10, dedup_threshold: None, ..Default::default() };
        let a = rank_library(&lib, &d, &scorer, &opts);
        let b = rank_exprs(&all, &d, &scorer, &opts);
        let strings = |o: &RankOutcome| o.ranked.iter().map(|c| c.expr.to_string()).collect::<Vec<_>>();
        assert_eq!(strings(&a), strings(&b));
        assert_eq!(a.scored, all.len() as u64);
        assert_eq!(a.ranked[0].expr.to_string(), "X2^0.5*(0.4*X3^(-0.5) + X1^0.5)^(-2)");
        assert!(a.ranked[0].r > 1.0 - 1e-12);
    }
}
