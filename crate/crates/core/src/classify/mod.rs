//! Recipient and nature labels for tutor utterances: heuristics, prompt and
//! model-input builders, the remote classifier client, class weights,
//! evaluation and annotation cost.

mod balance;
mod cost;
mod eval;
mod heuristics;
mod labels;
mod prompt;
mod remote;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::Utterance;
use crate::{Error, Result};

pub use balance::{class_balance_weights, ClassWeights};
pub use cost::{estimate_cost, Pricing, TokenUsage};
pub use eval::{evaluate_classifier, ClassMetrics, Evaluation};
pub use heuristics::{
    classify_name_in_context, classify_name_in_text, NatureLexicon, STUDENT_A, STUDENT_B,
};
pub use labels::{read_label_file, read_labels, write_label_file, write_labels, LabelRow, LabelSet, LABEL_HEADER};
pub use prompt::{build_input, build_prompt, PRETEXT_TOKEN, TARGET_TOKEN};
pub use remote::{request as remote_request, ClassifyRequest, ClassifyResponse, RemoteClassifier, RemoteConfig};

/// Maximum number of preceding utterances shown as context.
pub const PRETEXT_LINES: usize = 10;

/// Whom an utterance addresses. Codes 0..=3 are the classifier label space;
/// `NA` exists only in human annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecipientLabel {
    Both = 0,
    StudentA = 1,
    StudentB = 2,
    OneOfStudents = 3,
    NA = 4,
}

impl RecipientLabel {
    pub const CLASSES: [RecipientLabel; 4] = [
        RecipientLabel::Both,
        RecipientLabel::StudentA,
        RecipientLabel::StudentB,
        RecipientLabel::OneOfStudents,
    ];

    pub fn code(self) -> Option<u8> {
        match self {
            RecipientLabel::NA => None,
            other => Some(other as u8),
        }
    }

    pub fn from_code(code: i64) -> Result<RecipientLabel> {
        match code {
            0 => Ok(RecipientLabel::Both),
            1 => Ok(RecipientLabel::StudentA),
            2 => Ok(RecipientLabel::StudentB),
            3 => Ok(RecipientLabel::OneOfStudents),
            other => Err(Error::Protocol(format!("recipient label {other} outside 0..=3"))),
        }
    }

    /// A and B exchanged; other labels unchanged.
    pub fn swapped(self) -> RecipientLabel {
        match self {
            RecipientLabel::StudentA => RecipientLabel::StudentB,
            RecipientLabel::StudentB => RecipientLabel::StudentA,
            other => other,
        }
    }
}

impl fmt::Display for RecipientLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.code() {
            Some(c) => write!(f, "{c}"),
            None => f.write_str("NA"),
        }
    }
}

impl FromStr for RecipientLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "NA" => Ok(RecipientLabel::NA),
            t => t
                .parse::<i64>()
                .map_err(|_| Error::InvalidInput(format!("unknown recipient label `{s}`")))
                .and_then(|c| {
                    RecipientLabel::from_code(c).map_err(|e| Error::InvalidInput(e.to_string()))
                }),
        }
    }
}

impl Serialize for RecipientLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.code() {
            Some(c) => s.serialize_u8(c),
            None => s.serialize_str("NA"),
        }
    }
}

impl<'de> Deserialize<'de> for RecipientLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = RecipientLabel;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a recipient code 0..=3 or \"NA\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_i64(v as i64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                RecipientLabel::from_code(v).map_err(E::custom)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NatureLabel {
    Content,
    Relationship,
    Management,
}

impl NatureLabel {
    pub const ALL: [NatureLabel; 3] = [
        NatureLabel::Content,
        NatureLabel::Relationship,
        NatureLabel::Management,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NatureLabel::Content => "content",
            NatureLabel::Relationship => "relationship",
            NatureLabel::Management => "management",
        }
    }
}

impl fmt::Display for NatureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NatureLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "content" => Ok(NatureLabel::Content),
            "relationship" => Ok(NatureLabel::Relationship),
            "management" => Ok(NatureLabel::Management),
            other => Err(Error::InvalidInput(format!("unknown nature label `{other}`"))),
        }
    }
}

/// Anything usable as a category in agreement and evaluation.
pub trait Label: Ord + Clone + fmt::Display {
    fn is_na(&self) -> bool {
        false
    }
}

impl Label for RecipientLabel {
    fn is_na(&self) -> bool {
        *self == RecipientLabel::NA
    }
}
impl Label for NatureLabel {}
impl Label for String {}
impl Label for &str {}
impl Label for u8 {}
impl Label for u32 {}
impl Label for i32 {}
impl Label for char {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    HeuristicText,
    HeuristicContext,
    Remote,
    Gold,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::HeuristicText => "heuristic_text",
            LabelSource::HeuristicContext => "heuristic_context",
            LabelSource::Remote => "remote",
            LabelSource::Gold => "gold",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledUtterance {
    pub session_id: String,
    pub utterance_index: usize,
    pub recipient: RecipientLabel,
    pub nature: NatureLabel,
    pub source: LabelSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<String, f64>>,
}

impl LabeledUtterance {
    pub fn new(
        session_id: impl Into<String>,
        utterance_index: usize,
        recipient: RecipientLabel,
        nature: NatureLabel,
        source: LabelSource,
    ) -> LabeledUtterance {
        LabeledUtterance {
            session_id: session_id.into(),
            utterance_index,
            recipient,
            nature,
            source,
            scores: None,
        }
    }

    /// Attaches per-class scores; they must be non-negative and sum to 1.
    pub fn with_scores(mut self, scores: BTreeMap<String, f64>) -> Result<LabeledUtterance> {
        validate_scores(&scores)?;
        self.scores = Some(scores);
        Ok(self)
    }
}

pub(crate) fn validate_scores(scores: &BTreeMap<String, f64>) -> Result<()> {
    if scores.values().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Protocol("scores must be finite and non-negative".into()));
    }
    let sum: f64 = scores.values().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Protocol(format!("scores sum to {sum}, not 1")));
    }
    Ok(())
}

/// The target utterance and up to ten preceding tutor utterances,
/// oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierContext {
    pub pretext: Vec<String>,
    pub target: String,
}

impl ClassifierContext {
    pub fn new(pretext: Vec<String>, target: impl Into<String>) -> ClassifierContext {
        ClassifierContext {
            pretext,
            target: target.into(),
        }
    }

    /// Context for `utterances[position]`; shorter at the session start.
    pub fn at(utterances: &[Utterance], position: usize) -> ClassifierContext {
        let from = position.saturating_sub(PRETEXT_LINES);
        ClassifierContext {
            pretext: utterances[from..position].iter().map(|u| u.text.clone()).collect(),
            target: utterances[position].text.clone(),
        }
    }

    /// One context per utterance, in order.
    pub fn for_session(utterances: &[Utterance]) -> Vec<ClassifierContext> {
        (0..utterances.len()).map(|i| ClassifierContext::at(utterances, i)).collect()
    }
}
