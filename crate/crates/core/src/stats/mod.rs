//! Statistical primitives: within-grade standardization, one-sample t
//! tests on paired differences, and OLS with pair-clustered standard errors.

mod ols;
mod standardize;
mod table;
mod ttest;

use serde::{Deserialize, Serialize};

pub use ols::{ols_clustered, ols_clustered_at, Coefficient, DesignMatrix, FTest, RegressionFit};
pub use standardize::{standardize_values, standardize_within_grade};
pub use table::{render_regression_table, stars};
pub use ttest::{paired_t_test, paired_t_test_at, TestResult};

/// Count, mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// `None` below two observations.
    pub sd: Option<f64>,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Some(Summary { n, mean, sd })
}
