//! The achievement, demographic, interaction and ambiguity analyses, and
//! their reports.
//!
//! Units: lower-vs-higher tests report share differences in percentage
//! points; regression coefficients are in share units (0.01 = 1 pp), the
//! scale on which the outcome is measured.

mod assemble;
mod emit;
mod robustness;
mod study1;
mod study2;
mod study3;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::NatureLabel;
use crate::stats::{RegressionFit, Summary, TestResult};
use crate::{Error, Result};

pub use assemble::{build_corpus, corpus_digest, AnalysisCorpus, AnalysisSession, CorpusFingerprint};
pub use emit::{emit_report, figure_path, read_report, render_tables, report_path, FIGURE_SCHEMA};
pub use robustness::{residual_gap, run_robustness, AMBIGUITY_REGRESSORS};
pub use study1::run_study1;
pub use study2::{build_study2_design, run_study2, Study2Design};
pub use study3::run_study3;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyId {
    Study1,
    Study2,
    Study3,
    Robustness,
}

impl StudyId {
    pub const ALL: [StudyId; 4] = [StudyId::Study1, StudyId::Study2, StudyId::Study3, StudyId::Robustness];

    pub fn as_str(self) -> &'static str {
        match self {
            StudyId::Study1 => "study1",
            StudyId::Study2 => "study2",
            StudyId::Study3 => "study3",
            StudyId::Robustness => "robustness",
        }
    }
}

impl fmt::Display for StudyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StudyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<StudyId> {
        StudyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown study `{s}`")))
    }
}

/// How a pair's sessions enter the lower-vs-higher tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Unweighted mean over a pair's sessions; one observation per pair.
    #[default]
    PairMean,
    /// Every session is an observation.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub aggregation: Aggregation,
    /// Cells with fewer pairs are reported but flagged `low_n`.
    pub min_cell_pairs: usize,
    pub confidence: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            aggregation: Aggregation::PairMean,
            min_cell_pairs: 10,
            confidence: 0.95,
        }
    }
}

/// A lower-vs-higher comparison. The test is on differences in
/// percentage points; the means are shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTest {
    pub test: TestResult,
    pub n_pairs: usize,
    pub n_sessions: usize,
    pub lower_mean: f64,
    pub higher_mean: f64,
    pub lower_se: f64,
    pub higher_se: f64,
    pub low_n: bool,
}

/// Ambiguity-adjusted gap for one Study 2 coefficient: the spread of the
/// one-of share across pairings on the axis is subtracted from the
/// magnitude of the gap, never flipping its sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessBound {
    pub gap_pp: f64,
    pub ambiguity_range_pp: f64,
    pub residual_gap_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    Gap(GapTest),
    Regression(RegressionFit),
    Bound(RobustnessBound),
    Describe(Summary),
}

/// Plot-ready rows; every cell is already formatted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FigureTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl FigureTable {
    pub fn new(columns: &[&str]) -> FigureTable {
        FigureTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub run_id: String,
    pub study: StudyId,
    pub config: StudyConfig,
    pub fingerprint: CorpusFingerprint,
    pub analyses: BTreeMap<String, Analysis>,
    pub figures: BTreeMap<String, FigureTable>,
    pub notices: Vec<String>,
}

impl StudyReport {
    pub fn new(study: StudyId, config: &StudyConfig, fingerprint: &CorpusFingerprint) -> StudyReport {
        StudyReport {
            schema_version: SCHEMA_VERSION,
            run_id: fingerprint.run_id(),
            study,
            config: config.clone(),
            fingerprint: fingerprint.clone(),
            analyses: BTreeMap::new(),
            figures: BTreeMap::new(),
            notices: Vec::new(),
        }
    }

    pub fn gap(&self, key: &str) -> Option<&GapTest> {
        match self.analyses.get(key) {
            Some(Analysis::Gap(g)) => Some(g),
            _ => None,
        }
    }

    pub fn regression(&self, key: &str) -> Option<&RegressionFit> {
        match self.analyses.get(key) {
            Some(Analysis::Regression(r)) => Some(r),
            _ => None,
        }
    }

    pub fn bound(&self, key: &str) -> Option<&RobustnessBound> {
        match self.analyses.get(key) {
            Some(Analysis::Bound(b)) => Some(b),
            _ => None,
        }
    }
}

/// Runs one study.
pub fn run_study(study: StudyId, corpus: &AnalysisCorpus, config: &StudyConfig) -> Result<StudyReport> {
    match study {
        StudyId::Study1 => run_study1(corpus, config),
        StudyId::Study2 => run_study2(corpus, config),
        StudyId::Study3 => run_study3(corpus, config),
        StudyId::Robustness => run_robustness(corpus, config),
    }
}

/// Outcome names: the overall share followed by the three natures.
pub(crate) const OUTCOMES: [Option<NatureLabel>; 4] = [
    None,
    Some(NatureLabel::Content),
    Some(NatureLabel::Relationship),
    Some(NatureLabel::Management),
];

pub(crate) fn outcome_name(nature: Option<NatureLabel>) -> &'static str {
    nature.map_or("overall", NatureLabel::as_str)
}

/// Shortest round-trip formatting used in figure tables.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}
