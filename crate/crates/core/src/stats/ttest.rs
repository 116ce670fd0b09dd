use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub mean_difference: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub n: usize,
}

/// One-sample t test of the differences against zero, two-sided, 95% CI.
pub fn paired_t_test(diffs: &[f64]) -> Result<TestResult> {
    paired_t_test_at(diffs, 0.95)
}

pub fn paired_t_test_at(diffs: &[f64], confidence: f64) -> Result<TestResult> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput(format!("confidence {confidence} outside (0, 1)")));
    }
    let n = diffs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("t test needs at least 2 differences, got {n}")));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("non-finite difference".into()));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let se = (var / nf).sqrt();
    let df = nf - 1.0;
    if se == 0.0 {
        if mean != 0.0 {
            return Err(Error::InfiniteStatistic { mean });
        }
        return Ok(TestResult {
            statistic: 0.0,
            df,
            p_value: 1.0,
            mean_difference: 0.0,
            se: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            confidence,
            n,
        });
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let t = mean / se;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    let crit = dist.inverse_cdf(0.5 + confidence / 2.0);
    Ok(TestResult {
        statistic: t,
        df,
        p_value: p,
        mean_difference: mean,
        se,
        ci_low: mean - crit * se,
        ci_high: mean + crit * se,
        confidence,
        n,
    })
}
