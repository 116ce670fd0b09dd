use serde::{Deserialize, Serialize};

use super::SessionRecord;
use crate::{Error, Result};

/// Count, mean and sample standard deviation of one per-session measure.
/// `total` is the sum over sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub total: f64,
    pub mean: f64,
    pub sd: Option<f64>,
}

impl MeasureSummary {
    pub fn of(values: &[f64]) -> Option<MeasureSummary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let total: f64 = values.iter().sum();
        let mean = total / n;
        let sd = (values.len() > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        });
        Some(MeasureSummary { total, mean, sd })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub n_sessions: usize,
    pub duration_s: MeasureSummary,
    pub words: MeasureSummary,
    pub utterances: MeasureSummary,
}

/// Per-session duration (observed, after trimming), word and utterance counts.
pub fn describe_corpus(sessions: &[SessionRecord]) -> Result<CorpusSummary> {
    if sessions.is_empty() {
        return Err(Error::InsufficientData("cannot describe an empty corpus".into()));
    }
    let durations: Vec<f64> = sessions.iter().map(|s| s.observed_duration_s()).collect();
    let words: Vec<f64> = sessions.iter().map(|s| s.word_count() as f64).collect();
    let utterances: Vec<f64> = sessions.iter().map(|s| s.utterances.len() as f64).collect();
    Ok(CorpusSummary {
        n_sessions: sessions.len(),
        duration_s: MeasureSummary::of(&durations).expect("non-empty"),
        words: MeasureSummary::of(&words).expect("non-empty"),
        utterances: MeasureSummary::of(&utterances).expect("non-empty"),
    })
}

impl std::fmt::Display for CorpusSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "sessions: {}", self.n_sessions)?;
        writeln!(f, "{:<28} {:>14} {:>12} {:>12}", "measure", "count", "mean", "sd")?;
        for (name, m) in [
            ("session duration (s)", &self.duration_s),
            ("words", &self.words),
            ("utterances", &self.utterances),
        ] {
            let sd = m.sd.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            writeln!(f, "{:<28} {:>14.0} {:>12.2} {:>12}", name, m.total, m.mean, sd)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;

    fn session(id: &str, len: f64, text: &str) -> SessionRecord {
        SessionRecord {
            session_id: id.into(),
            pair_id: "p".into(),
            student_a_id: "a".into(),
            student_b_id: "b".into(),
            student_a: None,
            student_b: None,
            planned_duration_s: 100.0,
            entry_a_s: 0.0,
            entry_b_s: 0.0,
            utterances: vec![
                Utterance { index: 0, start_s: 0.0, end_s: 1.0, text: text.into() },
                Utterance { index: 1, start_s: len - 1.0, end_s: len, text: text.into() },
            ],
            exclusion: None,
        }
    }

    #[test]
    fn two_sessions() {
        let s = describe_corpus(&[session("1", 100.0, "a b"), session("2", 300.0, "a b c")]).unwrap();
        assert_eq!(s.duration_s.mean, 200.0);
        // sqrt(((100-200)^2 + (300-200)^2) / 1)
        assert!((s.duration_s.sd.unwrap() - 141.421_356_237_309_5).abs() < 1e-9);
        assert_eq!(s.duration_s.total, 400.0);
        assert_eq!(s.words.total, 10.0);
        assert_eq!(s.utterances.mean, 2.0);
    }

    #[test]
    fn single_session_has_no_sd() {
        let s = describe_corpus(&[session("1", 100.0, "x")]).unwrap();
        assert_eq!(s.duration_s.sd, None);
    }

    #[test]
    fn empty_is_error() {
        assert!(describe_corpus(&[]).is_err());
    }
}
