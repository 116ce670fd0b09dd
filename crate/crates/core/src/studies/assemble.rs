use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::LabelSet;
use crate::corpus::{preprocess, transcript_line, PairComposition, Roster, SessionRecord, Slot};
use crate::metrics::{compute_shares, AttentionShares, Denominator};
use crate::{Error, Result};

/// Identity and size of the corpus a report was computed from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusFingerprint {
    /// SHA-256 over the canonical transcript lines of every input session,
    /// in session id order.
    pub digest: String,
    pub n_sessions: usize,
    pub n_kept: usize,
    pub n_pairs: usize,
    pub n_students: usize,
    pub n_utterances: usize,
    pub n_tie_pairs: usize,
    pub exclusions: BTreeMap<String, usize>,
}

impl CorpusFingerprint {
    pub fn run_id(&self) -> String {
        self.digest.chars().take(16).collect()
    }
}

/// Digest of the raw transcripts as serialized in the transcript format.
pub fn corpus_digest(sessions: &[SessionRecord]) -> String {
    let mut ordered: Vec<&SessionRecord> = sessions.iter().collect();
    ordered.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    let mut hasher = Sha256::new();
    for s in ordered {
        hasher.update(transcript_line(s).as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// A kept session reduced to what the analyses use.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSession {
    pub session_id: String,
    pub pair_id: String,
    pub shares: AttentionShares,
    pub composition: PairComposition,
    pub z_a: f64,
    pub z_b: f64,
}

impl AnalysisSession {
    pub fn z(&self, slot: Slot) -> f64 {
        match slot {
            Slot::A => self.z_a,
            Slot::B => self.z_b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisCorpus {
    pub sessions: Vec<AnalysisSession>,
    pub fingerprint: CorpusFingerprint,
}

/// Links, trims and filters the raw sessions, standardizes baselines
/// within grade, and computes attention shares for every kept session.
pub fn build_corpus(
    raw: Vec<SessionRecord>,
    roster: &Roster,
    labels: &LabelSet,
    denominator: Denominator,
) -> Result<AnalysisCorpus> {
    let digest = corpus_digest(&raw);
    let mut roster = roster.clone();
    roster.standardize()?;
    let processed = preprocess(raw, &roster);
    let mut exclusions = BTreeMap::new();
    for s in &processed {
        if let Some(r) = s.exclusion {
            *exclusions.entry(r.as_str().to_string()).or_insert(0) += 1;
        }
    }
    let mut sessions = Vec::new();
    let mut n_utterances = 0;
    for s in processed.iter().filter(|s| s.kept()) {
        let (Some(a), Some(b)) = (s.student(Slot::A), s.student(Slot::B)) else {
            return Err(Error::InvalidInput(format!(
                "session {} kept without linked students",
                s.session_id
            )));
        };
        let shares = compute_shares(s, labels.session(&s.session_id), denominator)?;
        n_utterances += s.utterances.len();
        sessions.push(AnalysisSession {
            session_id: s.session_id.clone(),
            pair_id: s.pair_id.clone(),
            shares,
            composition: PairComposition::from_students(a, b)?,
            z_a: a.baseline_z.expect("standardized"),
            z_b: b.baseline_z.expect("standardized"),
        });
    }
    let pairs: BTreeSet<&str> = sessions.iter().map(|s| s.pair_id.as_str()).collect();
    let tie_pairs: BTreeSet<&str> = sessions
        .iter()
        .filter(|s| s.composition.is_tie())
        .map(|s| s.pair_id.as_str())
        .collect();
    let students: BTreeSet<&str> = processed
        .iter()
        .filter(|s| s.kept())
        .flat_map(|s| [s.student_a_id.as_str(), s.student_b_id.as_str()])
        .collect();
    let fingerprint = CorpusFingerprint {
        digest,
        n_sessions: processed.len(),
        n_kept: sessions.len(),
        n_pairs: pairs.len(),
        n_students: students.len(),
        n_utterances,
        n_tie_pairs: tie_pairs.len(),
        exclusions,
    };
    Ok(AnalysisCorpus {
        sessions,
        fingerprint,
    })
}
