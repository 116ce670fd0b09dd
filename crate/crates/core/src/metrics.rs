//! Duration-weighted attention shares per session.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classify::{LabelSet, LabeledUtterance, NatureLabel, RecipientLabel};
use crate::corpus::{PairComposition, RelativeAchievement, SessionRecord, Slot};
use crate::{Error, Result};

/// What the recipient durations are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Total labeled tutor-utterance time; the four recipient shares sum to 1.
    #[default]
    TalkTime,
    /// Observed session length (first utterance start to last utterance end).
    SessionLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NatureShares {
    pub content: f64,
    pub relationship: f64,
    pub management: f64,
}

impl NatureShares {
    pub fn get(&self, nature: NatureLabel) -> f64 {
        match nature {
            NatureLabel::Content => self.content,
            NatureLabel::Relationship => self.relationship,
            NatureLabel::Management => self.management,
        }
    }

    fn get_mut(&mut self, nature: NatureLabel) -> &mut f64 {
        match nature {
            NatureLabel::Content => &mut self.content,
            NatureLabel::Relationship => &mut self.relationship,
            NatureLabel::Management => &mut self.management,
        }
    }

    pub fn total(&self) -> f64 {
        self.content + self.relationship + self.management
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionShares {
    pub session_id: String,
    pub pair_id: String,
    pub student_a_id: String,
    pub student_b_id: String,
    pub a: f64,
    pub b: f64,
    pub both: f64,
    pub one_of: f64,
    pub a_nature: NatureShares,
    pub b_nature: NatureShares,
    pub total_labeled_time_s: f64,
    pub denominator: Denominator,
}

impl AttentionShares {
    pub fn student(&self, slot: Slot) -> f64 {
        match slot {
            Slot::A => self.a,
            Slot::B => self.b,
        }
    }

    pub fn nature(&self, slot: Slot) -> &NatureShares {
        match slot {
            Slot::A => &self.a_nature,
            Slot::B => &self.b_nature,
        }
    }

    pub fn recipient(&self, label: RecipientLabel) -> f64 {
        match label {
            RecipientLabel::StudentA => self.a,
            RecipientLabel::StudentB => self.b,
            RecipientLabel::Both => self.both,
            RecipientLabel::OneOfStudents => self.one_of,
            RecipientLabel::NA => 0.0,
        }
    }
}

/// Shares for one session. Labels of other sessions or of utterances no
/// longer present after trimming are ignored; every remaining utterance
/// needs exactly one non-NA label.
pub fn compute_shares<'a>(
    session: &SessionRecord,
    labels: impl IntoIterator<Item = &'a LabeledUtterance>,
    denominator: Denominator,
) -> Result<AttentionShares> {
    let mut by_index: BTreeMap<usize, &LabeledUtterance> = BTreeMap::new();
    for l in labels {
        if l.session_id != session.session_id {
            continue;
        }
        if by_index.insert(l.utterance_index, l).is_some() {
            return Err(Error::InvalidInput(format!(
                "session {}: utterance {} labeled more than once",
                session.session_id, l.utterance_index
            )));
        }
    }
    let mut rec = [0.0f64; 4];
    let mut nat = [NatureShares::default(), NatureShares::default()];
    let mut total = 0.0;
    for u in &session.utterances {
        let label = by_index.get(&u.index).ok_or_else(|| Error::Unlabeled {
            session_id: session.session_id.clone(),
            index: u.index,
        })?;
        let Some(code) = label.recipient.code() else {
            return Err(Error::InvalidInput(format!(
                "session {}: utterance {} is labeled NA; adjudicate before computing shares",
                session.session_id, u.index
            )));
        };
        let d = u.duration_s();
        rec[code as usize] += d;
        total += d;
        match label.recipient {
            RecipientLabel::StudentA => *nat[0].get_mut(label.nature) += d,
            RecipientLabel::StudentB => *nat[1].get_mut(label.nature) += d,
            _ => {}
        }
    }
    let denom = match denominator {
        Denominator::TalkTime => total,
        Denominator::SessionLength => session.observed_duration_s(),
    };
    if !(denom > 0.0) {
        return Err(Error::ZeroDuration(session.session_id.clone()));
    }
    let scale = |n: NatureShares| NatureShares {
        content: n.content / denom,
        relationship: n.relationship / denom,
        management: n.management / denom,
    };
    Ok(AttentionShares {
        session_id: session.session_id.clone(),
        pair_id: session.pair_id.clone(),
        student_a_id: session.student_a_id.clone(),
        student_b_id: session.student_b_id.clone(),
        both: rec[0] / denom,
        a: rec[1] / denom,
        b: rec[2] / denom,
        one_of: rec[3] / denom,
        a_nature: scale(nat[0]),
        b_nature: scale(nat[1]),
        total_labeled_time_s: total,
        denominator,
    })
}

/// Shares for every kept session, in input order.
pub fn compute_all_shares(
    sessions: &[SessionRecord],
    labels: &LabelSet,
    denominator: Denominator,
) -> Result<Vec<AttentionShares>> {
    sessions
        .iter()
        .filter(|s| s.kept())
        .map(|s| compute_shares(s, labels.session(&s.session_id), denominator))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeShares {
    pub lower_slot: Slot,
    pub lower: f64,
    pub higher: f64,
    /// 100 × (lower − higher).
    pub lower_minus_higher_pp: f64,
    pub lower_nature: NatureShares,
    pub higher_nature: NatureShares,
}

impl RelativeShares {
    pub fn nature_gap_pp(&self, nature: NatureLabel) -> f64 {
        100.0 * (self.lower_nature.get(nature) - self.higher_nature.get(nature))
    }
}

pub fn shares_by_relative_achievement(
    shares: &AttentionShares,
    composition: &PairComposition,
) -> Result<RelativeShares> {
    let lower_slot = composition
        .lower_slot()
        .ok_or_else(|| Error::TiePair(shares.pair_id.clone()))?;
    debug_assert_eq!(composition.relative(lower_slot), RelativeAchievement::Lower);
    let higher_slot = lower_slot.other();
    let lower = shares.student(lower_slot);
    let higher = shares.student(higher_slot);
    Ok(RelativeShares {
        lower_slot,
        lower,
        higher,
        lower_minus_higher_pp: 100.0 * (lower - higher),
        lower_nature: *shares.nature(lower_slot),
        higher_nature: *shares.nature(higher_slot),
    })
}

/// Column order of the shares export.
pub const SHARES_HEADER: [&str; 12] = [
    "session_id",
    "pair_id",
    "slot",
    "student_id",
    "own",
    "partner",
    "both",
    "one_of",
    "own_content",
    "own_relationship",
    "own_management",
    "total_labeled_time_s",
];

/// One row per (session, student): the student's own share, the partner's
/// share, the shared categories and the student's nature split.
pub fn write_shares<W: Write>(writer: W, shares: &[AttentionShares]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SHARES_HEADER)?;
    for s in shares {
        for (slot, name, id) in [(Slot::A, "a", &s.student_a_id), (Slot::B, "b", &s.student_b_id)] {
            let n = s.nature(slot);
            w.write_record([
                s.session_id.clone(),
                s.pair_id.clone(),
                name.to_string(),
                id.clone(),
                s.student(slot).to_string(),
                s.student(slot.other()).to_string(),
                s.both.to_string(),
                s.one_of.to_string(),
                n.content.to_string(),
                n.relationship.to_string(),
                n.management.to_string(),
                s.total_labeled_time_s.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::LabelSource;
    use crate::corpus::Utterance;
    use proptest::prelude::*;

    fn session(durations: &[f64]) -> SessionRecord {
        let mut t = 0.0;
        let utterances = durations
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let u = Utterance {
                    index: i,
                    start_s: t,
                    end_s: t + d,
                    text: String::new(),
                };
                t += d;
                u
            })
            .collect();
        SessionRecord {
            session_id: "s1".into(),
            pair_id: "a|b".into(),
            student_a_id: "a".into(),
            student_b_id: "b".into(),
            student_a: None,
            student_b: None,
            planned_duration_s: 1.0,
            entry_a_s: 0.0,
            entry_b_s: 0.0,
            utterances,
            exclusion: None,
        }
    }

    fn labels(recipients: &[RecipientLabel]) -> Vec<LabeledUtterance> {
        recipients
            .iter()
            .enumerate()
            .map(|(i, r)| LabeledUtterance::new("s1", i, *r, NatureLabel::Content, LabelSource::Gold))
            .collect()
    }

    use RecipientLabel::*;

    #[test]
    fn partition_arithmetic() {
        let s = compute_shares(
            &session(&[10.0, 20.0, 10.0]),
            &labels(&[StudentA, StudentB, Both]),
            Denominator::TalkTime,
        )
        .unwrap();
        assert_eq!((s.a, s.b, s.both, s.one_of), (0.25, 0.5, 0.25, 0.0));
        assert_eq!(s.total_labeled_time_s, 40.0);
    }

    #[test]
    fn all_both() {
        let s = compute_shares(&session(&[3.0, 4.0]), &labels(&[Both, Both]), Denominator::TalkTime)
            .unwrap();
        assert_eq!((s.a, s.b, s.both), (0.0, 0.0, 1.0));
    }

    #[test]
    fn session_length_denominator() {
        let mut sess = session(&[10.0, 10.0]);
        sess.utterances[1].start_s = 30.0;
        sess.utterances[1].end_s = 40.0;
        let s = compute_shares(&sess, &labels(&[StudentA, StudentB]), Denominator::SessionLength)
            .unwrap();
        assert_eq!((s.a, s.b), (0.25, 0.25));
    }

    #[test]
    fn errors() {
        let sess = session(&[1.0, 2.0]);
        assert!(matches!(
            compute_shares(&sess, &labels(&[StudentA]), Denominator::TalkTime),
            Err(Error::Unlabeled { index: 1, .. })
        ));
        assert!(matches!(
            compute_shares(&session(&[0.0, 0.0]), &labels(&[StudentA, Both]), Denominator::TalkTime),
            Err(Error::ZeroDuration(_))
        ));
        assert!(compute_shares(&sess, &labels(&[StudentA, NA]), Denominator::TalkTime).is_err());
        let mut dup = labels(&[StudentA, StudentB]);
        dup.push(dup[0].clone());
        assert!(compute_shares(&sess, &dup, Denominator::TalkTime).is_err());
    }

    #[test]
    fn zero_duration_utterance_needs_label_but_weighs_nothing() {
        let sess = session(&[0.0, 5.0]);
        let s = compute_shares(&sess, &labels(&[StudentA, StudentB]), Denominator::TalkTime).unwrap();
        assert_eq!((s.a, s.b), (0.0, 1.0));
    }

    fn student(id: &str, z: f64) -> crate::corpus::StudentRecord {
        use crate::corpus::*;
        StudentRecord {
            student_id: id.into(),
            gender: Gender::Female,
            race: Race::Black,
            race_detail: None,
            el_status: ElStatus::El,
            grade: Grade::K,
            baseline_raw: z,
            baseline_z: Some(z),
        }
    }

    #[test]
    fn relative_mapping() {
        let mut s = compute_shares(&session(&[1.0]), &labels(&[Both]), Denominator::TalkTime).unwrap();
        s.a = 0.30;
        s.b = 0.25;
        let comp = PairComposition::from_students(&student("a", -1.0), &student("b", 1.0)).unwrap();
        let r = shares_by_relative_achievement(&s, &comp).unwrap();
        assert!((r.lower_minus_higher_pp - 5.0).abs() < 1e-9);
        let comp = PairComposition::from_students(&student("a", 1.0), &student("b", -1.0)).unwrap();
        let r = shares_by_relative_achievement(&s, &comp).unwrap();
        assert!((r.lower_minus_higher_pp + 5.0).abs() < 1e-9);
        s.b = 0.30;
        assert_eq!(shares_by_relative_achievement(&s, &comp).unwrap().lower_minus_higher_pp, 0.0);
        let tie = PairComposition::from_students(&student("a", 0.5), &student("b", 0.5)).unwrap();
        assert!(matches!(shares_by_relative_achievement(&s, &tie), Err(Error::TiePair(_))));
    }

    #[test]
    fn export_has_two_rows_per_session() {
        let s = compute_shares(&session(&[1.0, 3.0]), &labels(&[StudentA, StudentB]), Denominator::TalkTime)
            .unwrap();
        let mut buf = Vec::new();
        write_shares(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], SHARES_HEADER.join(","));
        assert_eq!(lines[1], "s1,a|b,a,a,0.25,0.75,0,0,0.25,0,0,4");
        assert_eq!(lines[2], "s1,a|b,b,b,0.75,0.25,0,0,0.75,0,0,4");
    }

    fn recipient() -> impl Strategy<Value = RecipientLabel> {
        prop_oneof![Just(Both), Just(StudentA), Just(StudentB), Just(OneOfStudents)]
    }

    fn nature() -> impl Strategy<Value = NatureLabel> {
        prop_oneof![
            Just(NatureLabel::Content),
            Just(NatureLabel::Relationship),
            Just(NatureLabel::Management)
        ]
    }

    fn labeled_session() -> impl Strategy<Value = (Vec<f64>, Vec<(RecipientLabel, NatureLabel)>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..30.0, n),
                prop::collection::vec((recipient(), nature()), n),
            )
        })
    }

    fn build(durs: &[f64], labs: &[(RecipientLabel, NatureLabel)]) -> (SessionRecord, Vec<LabeledUtterance>) {
        let ls = labs
            .iter()
            .enumerate()
            .map(|(i, (r, n))| LabeledUtterance::new("s1", i, *r, *n, LabelSource::Gold))
            .collect();
        (session(durs), ls)
    }

    proptest! {
        #[test]
        fn partition_invariants((durs, labs) in labeled_session()) {
            let (sess, ls) = build(&durs, &labs);
            if let Ok(s) = compute_shares(&sess, &ls, Denominator::TalkTime) {
                for v in [s.a, s.b, s.both, s.one_of] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                prop_assert!((s.a + s.b + s.both + s.one_of - 1.0).abs() < 1e-9);
                prop_assert!((s.a - s.a_nature.total()).abs() < 1e-9);
                prop_assert!((s.b - s.b_nature.total()).abs() < 1e-9);
            }
        }

        #[test]
        fn swapping_labels_swaps_shares((durs, labs) in labeled_session()) {
            let (sess, ls) = build(&durs, &labs);
            let swapped: Vec<LabeledUtterance> = ls
                .iter()
                .map(|l| LabeledUtterance { recipient: l.recipient.swapped(), ..l.clone() })
                .collect();
            if let (Ok(x), Ok(y)) = (
                compute_shares(&sess, &ls, Denominator::TalkTime),
                compute_shares(&sess, &swapped, Denominator::TalkTime),
            ) {
                prop_assert_eq!(x.a, y.b);
                prop_assert_eq!(x.b, y.a);
                prop_assert_eq!(x.a_nature, y.b_nature);
            }
        }

        #[test]
        fn dropping_one_of_raises_others((durs, labs) in labeled_session(), pick in 0usize..40) {
            let (sess, ls) = build(&durs, &labs);
            let Some(k) = labs.iter().enumerate().filter(|(_, l)| l.0 == OneOfStudents).map(|(i, _)| i).nth(pick % labs.len().max(1)) else {
                return Ok(());
            };
            let mut reduced = sess.clone();
            reduced.utterances.retain(|u| u.index != k);
            if let (Ok(x), Ok(y)) = (
                compute_shares(&sess, &ls, Denominator::TalkTime),
                compute_shares(&reduced, &ls, Denominator::TalkTime),
            ) {
                prop_assert!(y.a >= x.a - 1e-12);
                prop_assert!(y.b >= x.b - 1e-12);
                prop_assert!(y.both >= x.both - 1e-12);
            }
        }
    }
}
