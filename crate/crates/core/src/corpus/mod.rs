//! Transcripts, rosters and the preprocessing that turns them into
//! analysis-ready sessions.

mod composition;
mod describe;
mod io;
mod preprocess;
mod split;

use serde::{Deserialize, Serialize};

pub use composition::{
    Axis, PairComposition, PairKind, RelativeAchievement, Role, StudyCell, AXES,
};
pub use describe::{describe_corpus, CorpusSummary, MeasureSummary};
pub use io::{
    canonical_pair_id, load_transcripts, parse_transcripts, transcript_line, write_transcripts,
    Roster, ROSTER_HEADER,
};
pub use preprocess::{apply_exclusions, link_roster, preprocess, trim_to_copresence};
pub use split::split_dataset;

/// One tutor turn. Times are seconds from session start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

impl Utterance {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Whitespace-delimited token count.
    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Race {
    Black,
    NonBlack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElStatus {
    El,
    NonEl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    #[serde(rename = "K")]
    K,
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

impl Grade {
    pub fn as_str(self) -> &'static str {
        match self {
            Grade::K => "K",
            Grade::First => "1",
            Grade::Second => "2",
        }
    }
}

/// Roster entry for one student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub student_id: String,
    pub gender: Gender,
    pub race: Race,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub race_detail: Option<String>,
    pub el_status: ElStatus,
    pub grade: Grade,
    pub baseline_raw: f64,
    /// Filled by [`crate::stats::standardize_within_grade`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_z: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    A,
    B,
}

impl Slot {
    pub fn other(self) -> Slot {
        match self {
            Slot::A => Slot::B,
            Slot::B => Slot::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    UnmatchedMetadata,
    TooShort,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::UnmatchedMetadata => "unmatched_metadata",
            ExclusionReason::TooShort => "too_short",
        }
    }
}

/// A 2-on-1 session: utterances bound to a student pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub session_id: String,
    /// Cluster key for pair-level inference.
    pub pair_id: String,
    pub student_a_id: String,
    pub student_b_id: String,
    pub student_a: Option<StudentRecord>,
    pub student_b: Option<StudentRecord>,
    pub planned_duration_s: f64,
    pub entry_a_s: f64,
    pub entry_b_s: f64,
    pub utterances: Vec<Utterance>,
    pub exclusion: Option<ExclusionReason>,
}

impl SessionRecord {
    pub fn kept(&self) -> bool {
        self.exclusion.is_none()
    }

    /// Time from which both students are present.
    pub fn copresence_start_s(&self) -> f64 {
        self.entry_a_s.max(self.entry_b_s)
    }

    /// Last utterance end minus first utterance start; zero without utterances.
    pub fn observed_duration_s(&self) -> f64 {
        match (self.utterances.first(), self.utterances.last()) {
            (Some(first), Some(last)) => last.end_s - first.start_s,
            _ => 0.0,
        }
    }

    pub fn student(&self, slot: Slot) -> Option<&StudentRecord> {
        match slot {
            Slot::A => self.student_a.as_ref(),
            Slot::B => self.student_b.as_ref(),
        }
    }

    pub fn student_id(&self, slot: Slot) -> &str {
        match slot {
            Slot::A => &self.student_a_id,
            Slot::B => &self.student_b_id,
        }
    }

    pub fn word_count(&self) -> usize {
        self.utterances.iter().map(Utterance::word_count).sum()
    }
}
