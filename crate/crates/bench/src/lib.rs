//! Shared fixtures for the benchmarks.

use formscan::demos::{self, DemoSpec};
use formscan::Dataset;

/// Blind demo dataset with `n` rows and a fixed seed.
pub fn demo(id: u8, n: usize) -> Dataset {
    let mut spec = DemoSpec::new(id, n, 7);
    spec.blind = true;
    demos::generate(&spec).expect("demo generates").dataset
}

/// Values of each expression evaluated on `ds`, one column per expression.
pub fn columns(ds: &Dataset, exprs: &[&str]) -> Vec<Vec<f64>> {
    exprs
        .iter()
        .map(|s| formscan::parse(s).expect("valid expression").evaluate(ds).expect("evaluates"))
        .collect()
}
