use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tokens consumed by one model call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

/// Currency per one million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pricing {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

/// Cost of annotating `n_transcripts` transcripts when one transcript takes
/// the calls in `per_transcript`.
pub fn estimate_cost(per_transcript: &[TokenUsage], pricing: Pricing, n_transcripts: f64) -> Result<f64> {
    let valid = |v: f64| v.is_finite() && v >= 0.0;
    if !valid(pricing.input_per_million) || !valid(pricing.output_per_million) {
        return Err(Error::InvalidInput("prices must be finite and non-negative".into()));
    }
    if !valid(n_transcripts) {
        return Err(Error::InvalidInput("transcript count must be non-negative".into()));
    }
    let one: f64 = per_transcript
        .iter()
        .map(|u| {
            u.input_tokens as f64 * pricing.input_per_million / 1e6
                + u.output_tokens as f64 * pricing.output_per_million / 1e6
        })
        .sum();
    Ok(one * n_transcripts)
}
