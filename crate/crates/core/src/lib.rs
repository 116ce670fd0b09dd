//! Duration-weighted accounting of tutor attention in two-student tutoring
//! transcripts.
//!
//! The crate ingests tutor transcripts and a student roster, assigns each
//! tutor utterance a recipient (student A, student B, both, or one of the
//! two) and a nature (content, relationship, management), converts labeled
//! sessions into attention shares, and runs achievement, demographic and
//! interaction analyses with pair-clustered inference. A synthetic generator
//! with planted effects serves as the end-to-end oracle.
//!
//! Module map:
//!
//! - [`corpus`]: transcript and roster parsing, co-presence trimming,
//!   exclusion rules, dataset splits, descriptive statistics.
//! - [`classify`]: recipient heuristics, prompt and model-input builders,
//!   remote classifier client, class-balanced weights, evaluation, cost.
//! - [`agreement`]: Fleiss and Cohen kappa, adjudication.
//! - [`metrics`]: attention shares.
//! - [`stats`]: within-grade standardization, paired t-test, OLS with
//!   cluster-robust standard errors.
//! - [`studies`]: the four analyses and report emission.
//! - [`synth`]: planted-effect corpus generator and truth checking.
//! - [`cli`]: command implementations behind the `attn` binary.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agreement;
pub mod classify;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod stats;
pub mod studies;
pub mod synth;

pub use error::{Error, Result};
