use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-class loss weights from the effective number of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    /// `(1 - beta) / (1 - beta^n_y)`.
    pub raw: Vec<f64>,
    /// `raw` rescaled to sum to the number of classes.
    pub normalized: Vec<f64>,
}

pub fn class_balance_weights(counts: &[u64], beta: f64) -> Result<ClassWeights> {
    if counts.is_empty() {
        return Err(Error::InvalidInput("no classes".into()));
    }
    if let Some(pos) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!("class {pos} has zero samples")));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidInput(format!("beta must lie in [0, 1), got {beta}")));
    }
    let raw: Vec<f64> = counts
        .iter()
        .map(|&n| {
            let effective = 1.0 - beta.powf(n as f64);
            (1.0 - beta) / effective
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let k = counts.len() as f64;
    let normalized = raw.iter().map(|w| w * k / total).collect();
    Ok(ClassWeights { raw, normalized })
}
