use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabelSource, LabeledUtterance, NatureLabel, RecipientLabel};
use crate::{Error, Result};

pub const LABEL_HEADER: [&str; 5] = [
    "session_id",
    "utterance_index",
    "recipient",
    "nature",
    "annotator_id",
];

/// One row of a gold, annotation or prediction label file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub session_id: String,
    pub utterance_index: usize,
    pub recipient: RecipientLabel,
    pub nature: NatureLabel,
    pub annotator_id: String,
}

pub fn read_label_file(path: impl AsRef<Path>) -> Result<Vec<LabelRow>> {
    let path = path.as_ref();
    read_labels(File::open(path)?, &path.display().to_string())
}

pub fn read_labels<R: Read>(reader: R, source_name: &str) -> Result<Vec<LabelRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(LABEL_HEADER) {
        return Err(Error::parse(
            source_name,
            1,
            format!("expected header {}", LABEL_HEADER.join(",")),
        ));
    }
    rdr.deserialize::<LabelRow>()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::parse(source_name, line, e.to_string())
            })
        })
        .collect()
}

pub fn write_label_file(path: impl AsRef<Path>, rows: &[LabelRow]) -> Result<()> {
    write_labels(BufWriter::new(File::create(path)?), rows)
}

pub fn write_labels<W: Write>(writer: W, rows: &[LabelRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LABEL_HEADER)?;
    for r in rows {
        w.write_record([
            r.session_id.as_str(),
            &r.utterance_index.to_string(),
            &r.recipient.to_string(),
            r.nature.as_str(),
            r.annotator_id.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Labels keyed by `(session_id, utterance_index)`, at most one per key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelSet {
    labels: BTreeMap<(String, usize), LabeledUtterance>,
}

impl LabelSet {
    pub fn new(labels: impl IntoIterator<Item = LabeledUtterance>) -> Result<LabelSet> {
        let mut map = BTreeMap::new();
        for l in labels {
            let key = (l.session_id.clone(), l.utterance_index);
            if map.contains_key(&key) {
                return Err(Error::InvalidInput(format!(
                    "more than one label for session {}, utterance {}",
                    key.0, key.1
                )));
            }
            map.insert(key, l);
        }
        Ok(LabelSet { labels: map })
    }

    /// Rows become labels with the given source; rows must be unique per
    /// utterance.
    pub fn from_rows(rows: &[LabelRow], source: LabelSource) -> Result<LabelSet> {
        LabelSet::new(rows.iter().map(|r| {
            LabeledUtterance::new(
                r.session_id.clone(),
                r.utterance_index,
                r.recipient,
                r.nature,
                source,
            )
        }))
    }

    pub fn get(&self, session_id: &str, index: usize) -> Option<&LabeledUtterance> {
        self.labels.get(&(session_id.to_string(), index))
    }

    /// All labels of one session in utterance order.
    pub fn session(&self, session_id: &str) -> Vec<&LabeledUtterance> {
        let from = (session_id.to_string(), 0usize);
        self.labels
            .range(from..)
            .take_while(|((s, _), _)| s == session_id)
            .map(|(_, l)| l)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledUtterance> {
        self.labels.values()
    }

    pub fn to_rows(&self, annotator_id: &str) -> Vec<LabelRow> {
        self.labels
            .values()
            .map(|l| LabelRow {
                session_id: l.session_id.clone(),
                utterance_index: l.utterance_index,
                recipient: l.recipient,
                nature: l.nature,
                annotator_id: annotator_id.to_string(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = "session_id,utterance_index,recipient,nature,annotator_id\n\
                        s1,0,1,content,ann1\n\
                        s1,1,NA,management,ann1\n\
                        s2,0,0,relationship,ann1\n";

    #[test]
    fn parse_and_write_back() {
        let rows = read_labels(FILE.as_bytes(), "g").unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].recipient, RecipientLabel::NA);
        assert_eq!(rows[2].nature, NatureLabel::Relationship);
        let mut out = Vec::new();
        write_labels(&mut out, &rows).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), FILE);
    }

    #[test]
    fn bad_rows_are_line_addressed() {
        let bad = "session_id,utterance_index,recipient,nature,annotator_id\ns1,0,7,content,a\n";
        let err = read_labels(bad.as_bytes(), "g").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let bad_header = "session,utterance_index,recipient,nature,annotator_id\n";
        assert!(read_labels(bad_header.as_bytes(), "g").is_err());
    }

    #[test]
    fn label_set_lookup_and_duplicates() {
        let rows = read_labels(FILE.as_bytes(), "g").unwrap();
        let set = LabelSet::from_rows(&rows, LabelSource::Gold).unwrap();
        assert_eq!(set.session("s1").len(), 2);
        assert_eq!(set.session("s").len(), 0);
        assert_eq!(set.get("s2", 0).unwrap().recipient, RecipientLabel::Both);
        let dup = [rows[0].clone(), rows[0].clone()];
        assert!(LabelSet::from_rows(&dup, LabelSource::Gold).is_err());
    }
}
