use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ElStatus, Gender, Grade, Race, SessionRecord, StudentRecord, Utterance};
use crate::{Error, Result};

pub const ROSTER_HEADER: [&str; 6] = [
    "student_id",
    "gender",
    "race",
    "el_status",
    "grade",
    "baseline_raw",
];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TranscriptLine {
    session_id: String,
    pair_id: String,
    student_a_id: String,
    student_b_id: String,
    planned_duration_s: f64,
    entry_a_s: f64,
    entry_b_s: f64,
    utterances: Vec<UtteranceLine>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtteranceLine {
    start_s: f64,
    end_s: f64,
    text: String,
}

/// Pair key for two students independent of slot order.
pub fn canonical_pair_id(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}|{b}")
    } else {
        format!("{b}|{a}")
    }
}

pub fn load_transcripts(path: impl AsRef<Path>) -> Result<Vec<SessionRecord>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_transcripts(BufReader::new(file), &path.display().to_string())
}

/// Parses one JSON session object per line. Blank lines are skipped.
/// The result is sorted by `session_id`.
pub fn parse_transcripts<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<SessionRecord>> {
    let mut sessions = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: TranscriptLine = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        if let Some(prev) = seen.insert(raw.session_id.clone(), line_no) {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("session {} already defined on line {prev}", raw.session_id),
            ));
        }
        let session = session_from_line(raw).map_err(|m| Error::parse(source_name, line_no, m))?;
        sessions.push(session);
    }
    sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    Ok(sessions)
}

fn finite_non_negative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

fn session_from_line(raw: TranscriptLine) -> std::result::Result<SessionRecord, String> {
    let sid = &raw.session_id;
    if !(raw.planned_duration_s.is_finite() && raw.planned_duration_s > 0.0) {
        return Err(format!("session {sid}: planned_duration_s must be positive"));
    }
    if !finite_non_negative(raw.entry_a_s) || !finite_non_negative(raw.entry_b_s) {
        return Err(format!("session {sid}: entry timestamps must be finite and >= 0"));
    }
    if raw.student_a_id == raw.student_b_id {
        return Err(format!("session {sid}: both slots hold student {}", raw.student_a_id));
    }
    for (k, u) in raw.utterances.iter().enumerate() {
        if !finite_non_negative(u.start_s) || !u.end_s.is_finite() {
            return Err(format!("session {sid}: utterance {k}: invalid timestamps"));
        }
        if u.end_s < u.start_s {
            return Err(format!(
                "session {sid}: utterance {k}: end_s {} precedes start_s {}",
                u.end_s, u.start_s
            ));
        }
    }
    let mut order: Vec<usize> = (0..raw.utterances.len()).collect();
    order.sort_by(|&i, &j| raw.utterances[i].start_s.total_cmp(&raw.utterances[j].start_s));
    for w in order.windows(2) {
        let (prev, next) = (&raw.utterances[w[0]], &raw.utterances[w[1]]);
        if next.start_s < prev.end_s {
            return Err(format!(
                "session {sid}: utterance {} overlaps utterance {}",
                w[1], w[0]
            ));
        }
    }
    let mut slots: Vec<Option<UtteranceLine>> = raw.utterances.into_iter().map(Some).collect();
    let utterances = order
        .iter()
        .enumerate()
        .map(|(index, &k)| {
            let u = slots[k].take().expect("each utterance visited once");
            Utterance {
                index,
                start_s: u.start_s,
                end_s: u.end_s,
                text: u.text,
            }
        })
        .collect();
    Ok(SessionRecord {
        session_id: raw.session_id,
        pair_id: raw.pair_id,
        student_a_id: raw.student_a_id,
        student_b_id: raw.student_b_id,
        student_a: None,
        student_b: None,
        planned_duration_s: raw.planned_duration_s,
        entry_a_s: raw.entry_a_s,
        entry_b_s: raw.entry_b_s,
        utterances,
        exclusion: None,
    })
}

/// Serializes the transcript fields of a session as one line (no newline).
pub fn transcript_line(session: &SessionRecord) -> String {
    let line = TranscriptLine {
        session_id: session.session_id.clone(),
        pair_id: session.pair_id.clone(),
        student_a_id: session.student_a_id.clone(),
        student_b_id: session.student_b_id.clone(),
        planned_duration_s: session.planned_duration_s,
        entry_a_s: session.entry_a_s,
        entry_b_s: session.entry_b_s,
        utterances: session
            .utterances
            .iter()
            .map(|u| UtteranceLine {
                start_s: u.start_s,
                end_s: u.end_s,
                text: u.text.clone(),
            })
            .collect(),
    };
    serde_json::to_string(&line).expect("transcript line serializes")
}

pub fn write_transcripts(path: impl AsRef<Path>, sessions: &[SessionRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for s in sessions {
        out.write_all(transcript_line(s).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct RosterRow {
    student_id: String,
    gender: Gender,
    race: Race,
    el_status: ElStatus,
    grade: Grade,
    baseline_raw: f64,
    #[serde(default)]
    race_detail: Option<String>,
}

/// Student metadata keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Roster {
    pub students: BTreeMap<String, StudentRecord>,
}

impl Roster {
    pub fn new(students: impl IntoIterator<Item = StudentRecord>) -> Result<Roster> {
        let mut map = BTreeMap::new();
        for s in students {
            let id = s.student_id.clone();
            if map.insert(id.clone(), s).is_some() {
                return Err(Error::DuplicateStudent(id));
            }
        }
        Ok(Roster { students: map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Roster> {
        let path = path.as_ref();
        Roster::from_reader(File::open(path)?, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(reader: R, source_name: &str) -> Result<Roster> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        for required in ROSTER_HEADER {
            if !headers.iter().any(|h| h == required) {
                return Err(Error::parse(
                    source_name,
                    1,
                    format!("missing roster column `{required}`"),
                ));
            }
        }
        let mut map = BTreeMap::new();
        for row in rdr.deserialize::<RosterRow>() {
            let row = row.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::parse(source_name, line, e.to_string())
            })?;
            if !row.baseline_raw.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "student {}: baseline_raw is not finite",
                    row.student_id
                )));
            }
            let record = StudentRecord {
                student_id: row.student_id.clone(),
                gender: row.gender,
                race: row.race,
                race_detail: row.race_detail.filter(|d| !d.is_empty()),
                el_status: row.el_status,
                grade: row.grade,
                baseline_raw: row.baseline_raw,
                baseline_z: None,
            };
            if map.insert(row.student_id.clone(), record).is_some() {
                return Err(Error::DuplicateStudent(row.student_id));
            }
        }
        Ok(Roster { students: map })
    }

    pub fn get(&self, id: &str) -> Option<&StudentRecord> {
        self.students.get(id)
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    /// Fills `baseline_z` for every student, standardizing within grade.
    pub fn standardize(&mut self) -> Result<()> {
        let mut students: Vec<StudentRecord> = self.students.values().cloned().collect();
        crate::stats::standardize_within_grade(&mut students)?;
        for s in students {
            self.students.insert(s.student_id.clone(), s);
        }
        Ok(())
    }

    /// Writes the six-column roster; `race_detail` is appended only when some
    /// student carries one.
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let with_detail = self.students.values().any(|s| s.race_detail.is_some());
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = ROSTER_HEADER.to_vec();
        if with_detail {
            header.push("race_detail");
        }
        w.write_record(&header)?;
        for s in self.students.values() {
            let mut rec = vec![
                s.student_id.clone(),
                enum_str(&s.gender),
                enum_str(&s.race),
                enum_str(&s.el_status),
                s.grade.as_str().to_string(),
                s.baseline_raw.to_string(),
            ];
            if with_detail {
                rec.push(s.race_detail.clone().unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }
}

fn enum_str<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit enum serializes to a string"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = r#"{"session_id":"s1","pair_id":"p1","student_a_id":"x","student_b_id":"y","planned_duration_s":1200.0,"entry_a_s":0.0,"entry_b_s":5.0,"utterances":[{"start_s":10.0,"end_s":12.0,"text":"Hi [Student A]."},{"start_s":6.0,"end_s":8.5,"text":"Okay."},{"start_s":12.0,"end_s":14.0,"text":"Ball."}]}"#;

    #[test]
    fn empty_input_gives_no_sessions() {
        assert!(parse_transcripts("".as_bytes(), "t").unwrap().is_empty());
        assert!(parse_transcripts("\n\n".as_bytes(), "t").unwrap().is_empty());
    }

    #[test]
    fn utterances_sorted_and_indexed() {
        let s = parse_transcripts(THREE.as_bytes(), "t").unwrap();
        assert_eq!(s.len(), 1);
        let u = &s[0].utterances;
        assert_eq!(u.len(), 3);
        assert_eq!(u.iter().map(|u| u.index).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(u[0].text, "Okay.");
        assert_eq!(u[1].start_s, 10.0);
    }

    #[test]
    fn reversed_timestamps_name_session_and_index() {
        let line = r#"{"session_id":"s9","pair_id":"p","student_a_id":"x","student_b_id":"y","planned_duration_s":1.0,"entry_a_s":0.0,"entry_b_s":0.0,"utterances":[{"start_s":1.0,"end_s":2.0,"text":"a"},{"start_s":5.0,"end_s":4.0,"text":"b"}]}"#;
        let input = format!("\n{line}\n");
        let err = parse_transcripts(input.as_bytes(), "t.jsonl").unwrap_err().to_string();
        assert!(err.starts_with("t.jsonl:2:"), "{err}");
        assert!(err.contains("session s9") && err.contains("utterance 1"), "{err}");
    }

    #[test]
    fn overlaps_and_missing_fields_rejected() {
        let overlap = r#"{"session_id":"s","pair_id":"p","student_a_id":"x","student_b_id":"y","planned_duration_s":1.0,"entry_a_s":0.0,"entry_b_s":0.0,"utterances":[{"start_s":1.0,"end_s":3.0,"text":"a"},{"start_s":2.0,"end_s":4.0,"text":"b"}]}"#;
        assert!(parse_transcripts(overlap.as_bytes(), "t")
            .unwrap_err()
            .to_string()
            .contains("overlaps"));
        let missing = r#"{"session_id":"s","pair_id":"p","student_a_id":"x","student_b_id":"y","planned_duration_s":1.0,"entry_a_s":0.0,"entry_b_s":0.0,"utterances":[{"start_s":1.0,"text":"a"}]}"#;
        let err = parse_transcripts(missing.as_bytes(), "t").unwrap_err().to_string();
        assert!(err.contains("end_s"), "{err}");
        assert!(parse_transcripts("{not json".as_bytes(), "t").is_err());
    }

    #[test]
    fn serialized_line_reparses_identically() {
        let s = parse_transcripts(THREE.as_bytes(), "t").unwrap();
        let line = transcript_line(&s[0]);
        let again = parse_transcripts(line.as_bytes(), "t").unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn roster_parses_and_rejects_duplicates() {
        let csv = "student_id,gender,race,el_status,grade,baseline_raw\n\
                   s1,female,black,el,K,101.5\n\
                   s2,male,non_black,non_el,2,300\n";
        let r = Roster::from_reader(csv.as_bytes(), "r").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.get("s2").unwrap().grade, Grade::Second);
        let dup = format!("{csv}s1,male,black,el,1,90\n");
        assert!(matches!(
            Roster::from_reader(dup.as_bytes(), "r"),
            Err(Error::DuplicateStudent(id)) if id == "s1"
        ));
        let bad = "student_id,gender,race,el_status,grade,baseline_raw\ns1,other,black,el,K,1\n";
        assert!(matches!(
            Roster::from_reader(bad.as_bytes(), "r"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn roster_write_round_trips() {
        let csv = "student_id,gender,race,el_status,grade,baseline_raw\n\
                   s1,female,black,el,K,101.5\n\
                   s2,male,non_black,non_el,1,300\n";
        let r = Roster::from_reader(csv.as_bytes(), "r").unwrap();
        let mut out = Vec::new();
        r.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), csv);
    }
}
