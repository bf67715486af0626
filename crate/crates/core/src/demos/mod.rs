//! Synthetic datasets with known ground truth: constant-acceleration
//! kinematics, forced convection over a cylinder and the oblique shock
//! relation. Each has six inputs, some of them dummies.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{population_std, Column, DataError, Dataset, Dimension, Role};
use crate::expr::{parse, Expr};

/// Heat capacity ratio used by the shock demo.
pub const GAMMA: f64 = 1.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSpec {
    pub id: u8,
    pub n_rows: usize,
    pub seed: u64,
    /// Strip names, units and roles.
    pub blind: bool,
    /// Gaussian noise added to the output, as a fraction of its std.
    pub noise: f64,
}

impl DemoSpec {
    pub fn new(id: u8, n_rows: usize, seed: u64) -> Self {
        DemoSpec { id, n_rows, seed, blind: false, noise: 0.0 }
    }
}

/// What a blind run is supposed to find; kept apart from the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answers {
    pub demo: u8,
    pub description: String,
    /// Ground truth in the expression grammar over X1..X6.
    pub ground_truth: Expr,
    /// Physical meaning of each column.
    pub mapping: BTreeMap<String, String>,
    pub dummies: Vec<String>,
    /// Expressions the demo is expected to surface.
    pub expected: Vec<Expr>,
    /// Sampling interval of every input.
    pub intervals: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demo {
    pub dataset: Dataset,
    pub answers: Answers,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DemoError {
    #[error("unknown demo {0} (expected 1, 2 or 3)")]
    UnknownDemo(u8),
    #[error("need at least 100 rows, got {0}")]
    TooFewRows(usize),
    #[error("noise level must be finite and non-negative, got {0}")]
    BadNoise(f64),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

fn dim(e: [i64; 5]) -> Option<Dimension> {
    Some(Dimension::new(e))
}

fn build(cols: Vec<(Vec<f64>, Option<Dimension>, Role)>, y: Vec<f64>, y_dim: Option<Dimension>) -> Result<Dataset, DataError> {
    let features = cols
        .into_iter()
        .zip(names(6))
        .map(|((v, d, role), name)| Column { name, values: v, dimension: d, role })
        .collect();
    Dataset::new(features, Column { name: "Y".into(), values: y, dimension: y_dim, role: Role::Output })
}

pub fn demo1_truth() -> Expr {
    parse("X1 + X3*X5 + 0.5*X4*X5^2").expect("valid expression")
}

/// `x = x0 + v0·t + a·t²/2` with x0 = X1, v0 = X3, a = X4, t = X5; X2 and X6
/// are dummies.
pub fn gen_demo1(n: usize, seed: u64) -> Result<Dataset, DemoError> {
    if n < 100 {
        return Err(DemoError::TooFewRows(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1 = uniform(&mut rng, n, 0.0, 10.0);
    let x2 = uniform(&mut rng, n, 0.0, 10.0);
    let x3 = uniform(&mut rng, n, 0.0, 10.0);
    let x4 = uniform(&mut rng, n, 0.0, 10.0);
    let x5 = uniform(&mut rng, n, 0.1, 20.0);
    let x6 = uniform(&mut rng, n, 0.0, 10.0);
    let y = (0..n).map(|i| kinematics(x1[i], x3[i], x4[i], x5[i])).collect();
    let l = [1, 0, 0, 0, 0];
    Ok(build(
        vec![
            (x1, dim(l), Role::Feature),
            (x2, None, Role::Feature),
            (x3, dim([1, 0, -1, 0, 0]), Role::Feature),
            (x4, dim([1, 0, -2, 0, 0]), Role::Feature),
            (x5, dim([0, 0, 1, 0, 0]), Role::Feature),
            (x6, None, Role::Feature),
        ],
        y,
        dim(l),
    )?)
}

/// Position after time `t` from `x0` with initial speed `v0` and acceleration `a`.
pub fn kinematics(x0: f64, v0: f64, a: f64, t: f64) -> f64 {
    x0 + v0 * t + 0.5 * a * t * t
}

/// Churchill–Bernstein Nusselt number.
pub fn nusselt(re: f64, pr: f64) -> f64 {
    0.3 + 0.62 * re.sqrt() * pr.cbrt() / (1.0 + (0.4 / pr).powf(2.0 / 3.0)).powf(0.25)
        * (1.0 + (re / 282_000.0).powf(5.0 / 8.0)).powf(0.8)
}

/// Heat transfer coefficient `h = Nu·k/D`.
pub fn convection(d: f64, k: f64, v: f64, rho: f64, mu: f64, cp: f64) -> f64 {
    let re = d * v * rho / mu;
    let pr = mu * cp / k;
    nusselt(re, pr) * k / d
}

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn monomial(terms: &[(usize, Rational64)]) -> Expr {
    Expr::product(terms.iter().map(|&(f, a)| Expr::power_of(f, a)).collect())
}

/// `h = Nu(Re, Pr)·k/D` written over X1 = D, X2 = k, X3 = V, X4 = ρ,
/// X5 = μ, X6 = Cp.
pub fn demo2_truth() -> Expr {
    // Re^(1/2)·Pr^(1/3)
    let lead = monomial(&[(0, r(1, 2)), (1, r(-1, 3)), (2, r(1, 2)), (3, r(1, 2)), (4, r(-1, 6)), (5, r(1, 3))]);
    // (0.4/Pr)^(2/3)
    let pr_term = monomial(&[(1, r(2, 3)), (4, r(-2, 3)), (5, r(-2, 3))]);
    // (Re/282000)^(5/8)
    let re_term = monomial(&[(0, r(5, 8)), (2, r(5, 8)), (3, r(5, 8)), (4, r(-5, 8))]);
    let nu = Expr::sum(vec![
        (0.3, Expr::Const(1.0)),
        (
            0.62,
            Expr::product(vec![
                lead,
                Expr::pow(Expr::sum(vec![(1.0, Expr::Const(1.0)), (0.4f64.powf(2.0 / 3.0), pr_term)]), r(-1, 4)),
                Expr::pow(Expr::sum(vec![(1.0, Expr::Const(1.0)), (282_000f64.powf(-5.0 / 8.0), re_term)]), r(4, 5)),
            ]),
        ),
    ]);
    Expr::product(vec![Expr::power_of(0, r(-1, 1)), Expr::feature(1), nu])
}

/// Shape of the best expression reported for the convection data.
pub fn demo2_expected() -> Expr {
    parse("X2^0.5*X4^0.5*X6^0.5*(0.374*X3^(-0.5) + X1^0.5)^(-2)").expect("valid expression")
}

/// Forced convection over a cylinder with gas-like properties; X5 is the
/// dynamic viscosity.
pub fn gen_demo2(n: usize, seed: u64) -> Result<Dataset, DemoError> {
    if n < 100 {
        return Err(DemoError::TooFewRows(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = uniform(&mut rng, n, 0.01, 0.05);
    let k = uniform(&mut rng, n, 0.02, 0.05);
    let v = uniform(&mut rng, n, 0.1, 10.0);
    let rho = uniform(&mut rng, n, 0.5, 1.5);
    let mu = uniform(&mut rng, n, 1.7e-5, 2.0e-5);
    let cp = uniform(&mut rng, n, 700.0, 1200.0);
    let y = (0..n).map(|i| convection(d[i], k[i], v[i], rho[i], mu[i], cp[i])).collect();
    Ok(build(
        vec![
            (d, dim([1, 0, 0, 0, 0]), Role::Feature),
            (k, dim([1, 1, -3, -1, 0]), Role::Feature),
            (v, dim([1, 0, -1, 0, 0]), Role::Feature),
            (rho, dim([-3, 1, 0, 0, 0]), Role::Feature),
            (mu, dim([-1, 1, -1, 0, 0]), Role::Feature),
            (cp, dim([2, 0, -2, -1, 0]), Role::Feature),
        ],
        y,
        dim([0, 1, -3, -1, 0]),
    )?)
}

/// `cot θ` from the oblique shock relation.
pub fn shock_cot(beta: f64, mach: f64) -> f64 {
    let m2 = mach * mach;
    let s = beta.sin();
    beta.tan() * ((GAMMA + 1.0) * m2 / (2.0 * (m2 * s * s - 1.0)) - 1.0)
}

pub fn demo3_truth() -> Expr {
    parse("tan(1*X1)*(1.2*X2^2*(X2^2*sin(1*X1)^2 - 1)^(-1) - 1)").expect("valid expression")
}

/// The same relation written with `csc β` and `M^-2`.
pub fn demo3_rewritten() -> Expr {
    parse("tan(1*X1)*(1.2*(csc(1*X1)^(-2) - X2^(-2))^(-1) - 1)").expect("valid expression")
}

/// Oblique shock: X1 = shock angle β (kept clear of the Mach angle), X2 =
/// Mach number, Y = cot θ; X3..X6 are dummies.
pub fn gen_demo3(n: usize, seed: u64) -> Result<Dataset, DemoError> {
    if n < 100 {
        return Err(DemoError::TooFewRows(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mach = uniform(&mut rng, n, 1.5, 5.0);
    let beta: Vec<f64> = mach.iter().map(|m| rng.random_range((1.0 / m).asin() + 0.05..FRAC_PI_2 - 0.05)).collect();
    let y = beta.iter().zip(&mach).map(|(b, m)| shock_cot(*b, *m)).collect();
    let mut cols = vec![
        (beta, Some(Dimension::angle()), Role::Angle),
        (mach, Some(Dimension::dimensionless()), Role::Feature),
    ];
    for _ in 0..4 {
        cols.push((uniform(&mut rng, n, 0.0, 10.0), Some(Dimension::dimensionless()), Role::Dummy));
    }
    Ok(build(cols, y, Some(Dimension::dimensionless()))?)
}

/// Renames inputs to X1.. and the output to Y, forgets units and roles.
pub fn flatten(ds: &Dataset) -> Dataset {
    let features = ds
        .features()
        .iter()
        .zip(names(ds.n_features()))
        .map(|(c, name)| Column { name, values: c.values.clone(), dimension: None, role: Role::Feature })
        .collect();
    let y = Column { name: "Y".into(), values: ds.output().values.clone(), dimension: None, role: Role::Output };
    Dataset::new(features, y).expect("flattening keeps a valid dataset valid")
}

fn mapping(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

pub fn answers(id: u8) -> Result<Answers, DemoError> {
    let e = |s: &str| parse(s).expect("valid expression");
    Ok(match id {
        1 => Answers {
            demo: 1,
            description: "motion under constant acceleration, x = x0 + v0*t + a*t^2/2".into(),
            ground_truth: demo1_truth(),
            mapping: mapping(&[("X1", "x0"), ("X3", "v0"), ("X4", "a"), ("X5", "t"), ("Y", "x")]),
            dummies: vec!["X2".into(), "X6".into()],
            expected: vec![e("X4*X5^2"), e("X3*X5"), e("X1")],
            intervals: mapping(&[
                ("X1", "U[0, 10]"),
                ("X2", "U[0, 10]"),
                ("X3", "U[0, 10]"),
                ("X4", "U[0, 10]"),
                ("X5", "U[0.1, 20]"),
                ("X6", "U[0, 10]"),
            ]),
        },
        2 => Answers {
            demo: 2,
            description: "forced convection over a cylinder (Churchill-Bernstein), h = Nu*k/D".into(),
            ground_truth: demo2_truth(),
            mapping: mapping(&[("X1", "D"), ("X2", "k"), ("X3", "V"), ("X4", "rho"), ("X5", "mu"), ("X6", "Cp"), ("Y", "h")]),
            dummies: vec![],
            expected: vec![demo2_expected()],
            intervals: mapping(&[
                ("X1", "U[0.01, 0.05]"),
                ("X2", "U[0.02, 0.05]"),
                ("X3", "U[0.1, 10]"),
                ("X4", "U[0.5, 1.5]"),
                ("X5", "U[1.7e-5, 2.0e-5]"),
                ("X6", "U[700, 1200]"),
            ]),
        },
        3 => Answers {
            demo: 3,
            description: "oblique shock relation, Y = cot(theta), gamma = 1.4".into(),
            ground_truth: demo3_truth(),
            mapping: mapping(&[("X1", "beta"), ("X2", "M"), ("Y", "cot(theta)")]),
            dummies: vec!["X3".into(), "X4".into(), "X5".into(), "X6".into()],
            expected: vec![
                e("tan(1*X1)"),
                e("csc(1*X1)"),
                e("X2^(-4)"),
                e("X2^(-2)"),
                e("X2^(-1)"),
                e("X2^(-0.5)"),
            ],
            intervals: mapping(&[
                ("X1", "U(asin(1/X2) + 0.05, pi/2 - 0.05)"),
                ("X2", "U[1.5, 5]"),
                ("X3", "U[0, 10]"),
                ("X4", "U[0, 10]"),
                ("X5", "U[0, 10]"),
                ("X6", "U[0, 10]"),
            ]),
        },
        other => return Err(DemoError::UnknownDemo(other)),
    })
}

/// Generates a demo dataset with its answers.
pub fn generate(spec: &DemoSpec) -> Result<Demo, DemoError> {
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(DemoError::BadNoise(spec.noise));
    }
    let mut ds = match spec.id {
        1 => gen_demo1(spec.n_rows, spec.seed)?,
        2 => gen_demo2(spec.n_rows, spec.seed)?,
        3 => gen_demo3(spec.n_rows, spec.seed)?,
        other => return Err(DemoError::UnknownDemo(other)),
    };
    if spec.noise > 0.0 {
        let y = &ds.output().values;
        let normal = Normal::new(0.0, spec.noise * population_std(y)).expect("finite std");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x6e01_5e);
        let noisy = y.iter().map(|v| v + normal.sample(&mut rng)).collect();
        ds = ds.with_output_values(noisy)?;
    }
    if spec.blind {
        ds = flatten(&ds);
    }
    Ok(Demo { dataset: ds, answers: answers(spec.id)? })
}
