//! Synthetic corpora with planted attention effects, and checks of study
//! reports against the planted values.

mod config;
mod generate;
mod truth;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{
    null_scenario, paper_scenario, Ambiguity, CellBonus, GeneratorConfig, GradeSpec, Marginals, MeanSd,
    NatureMix, NoiseConfig, PerAxis, PlantedEffects, RoleLevels, SamplingMode,
};
pub use generate::{generate, SyntheticCorpus};
pub use truth::{
    derive_truth, studies_in, truth_check, Expectation, Tolerances, TruthCheck, TruthRecord, Unit, Verdict,
    TRUTH_SCHEMA,
};

use crate::classify::{LabelSet, LabelSource};
use crate::corpus::write_transcripts;
use crate::metrics::Denominator;
use crate::studies::{build_corpus, run_study, AnalysisCorpus, StudyConfig, StudyId, StudyReport};
use crate::Result;

pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const ROSTER_FILE: &str = "roster.csv";
pub const GOLD_FILE: &str = "gold_labels.csv";
pub const TRUTH_FILE: &str = "truth.json";
/// Annotator id written to generated gold label files.
pub const GOLD_ANNOTATOR: &str = "synth";

impl SyntheticCorpus {
    /// Writes transcripts, roster, gold labels and truth record into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let paths: Vec<PathBuf> = [TRANSCRIPTS_FILE, ROSTER_FILE, GOLD_FILE, TRUTH_FILE]
            .iter()
            .map(|f| dir.join(f))
            .collect();
        write_transcripts(&paths[0], &self.sessions)?;
        self.roster.save(&paths[1])?;
        let labels = LabelSet::new(self.labels.iter().cloned())?;
        crate::classify::write_label_file(&paths[2], &labels.to_rows(GOLD_ANNOTATOR))?;
        fs::write(&paths[3], self.truth.to_json()?)?;
        Ok(paths)
    }

    /// Analysis corpus from the gold labels.
    pub fn analysis_corpus(&self, denominator: Denominator) -> Result<AnalysisCorpus> {
        let labels = LabelSet::new(self.labels.iter().cloned().map(|mut l| {
            l.source = LabelSource::Gold;
            l
        }))?;
        build_corpus(self.sessions.clone(), &self.roster, &labels, denominator)
    }

    /// Runs the given studies on the gold-labeled corpus.
    pub fn run_studies(&self, studies: &[StudyId], config: &StudyConfig) -> Result<Vec<StudyReport>> {
        let corpus = self.analysis_corpus(Denominator::TalkTime)?;
        studies.iter().map(|&s| run_study(s, &corpus, config)).collect()
    }
}
