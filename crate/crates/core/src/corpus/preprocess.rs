use super::{ExclusionReason, Roster, SessionRecord};

/// Attaches roster records. Sessions with either student missing are marked
/// `unmatched_metadata`.
pub fn link_roster(sessions: Vec<SessionRecord>, roster: &Roster) -> Vec<SessionRecord> {
    sessions
        .into_iter()
        .map(|mut s| {
            s.student_a = roster.get(&s.student_a_id).cloned();
            s.student_b = roster.get(&s.student_b_id).cloned();
            if (s.student_a.is_none() || s.student_b.is_none()) && s.exclusion.is_none() {
                s.exclusion = Some(ExclusionReason::UnmatchedMetadata);
            }
            s
        })
        .collect()
}

/// Drops utterances that start before both students have entered.
pub fn trim_to_copresence(mut session: SessionRecord) -> SessionRecord {
    let from = session.copresence_start_s();
    session.utterances.retain(|u| u.start_s >= from);
    session
}

/// Marks sessions whose observed duration is below half the planned length.
/// Exactly half is kept.
pub fn apply_exclusions(mut session: SessionRecord) -> SessionRecord {
    if session.exclusion.is_none() && session.observed_duration_s() < session.planned_duration_s / 2.0
    {
        session.exclusion = Some(ExclusionReason::TooShort);
    }
    session
}

/// Link, trim, then apply exclusions.
pub fn preprocess(sessions: Vec<SessionRecord>, roster: &Roster) -> Vec<SessionRecord> {
    link_roster(sessions, roster)
        .into_iter()
        .map(trim_to_copresence)
        .map(apply_exclusions)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Utterance, ElStatus, Gender, Grade, Race, StudentRecord};
    use proptest::prelude::*;

    fn session(entry_a: f64, entry_b: f64, spans: &[(f64, f64)], planned: f64) -> SessionRecord {
        SessionRecord {
            session_id: "s".into(),
            pair_id: "p".into(),
            student_a_id: "a".into(),
            student_b_id: "b".into(),
            student_a: None,
            student_b: None,
            planned_duration_s: planned,
            entry_a_s: entry_a,
            entry_b_s: entry_b,
            utterances: spans
                .iter()
                .enumerate()
                .map(|(index, &(start_s, end_s))| Utterance {
                    index,
                    start_s,
                    end_s,
                    text: String::new(),
                })
                .collect(),
            exclusion: None,
        }
    }

    fn student(id: &str) -> StudentRecord {
        StudentRecord {
            student_id: id.into(),
            gender: Gender::Female,
            race: Race::Black,
            race_detail: None,
            el_status: ElStatus::El,
            grade: Grade::K,
            baseline_raw: 1.0,
            baseline_z: None,
        }
    }

    #[test]
    fn trims_before_later_entry() {
        let s = trim_to_copresence(session(30.0, 60.0, &[(45.0, 50.0), (75.0, 80.0)], 100.0));
        assert_eq!(s.utterances.len(), 1);
        assert_eq!(s.utterances[0].start_s, 75.0);
        assert_eq!(s.utterances[0].index, 1);
    }

    #[test]
    fn entries_at_zero_leave_session_unchanged() {
        let s = session(0.0, 0.0, &[(0.0, 1.0), (2.0, 3.0)], 100.0);
        assert_eq!(trim_to_copresence(s.clone()), s);
    }

    #[test]
    fn exclusion_boundary() {
        let planned = 1200.0;
        let short = apply_exclusions(session(0.0, 0.0, &[(0.0, 540.0)], planned));
        assert_eq!(short.exclusion, Some(ExclusionReason::TooShort));
        let half = apply_exclusions(session(0.0, 0.0, &[(0.0, 600.0)], planned));
        assert!(half.kept());
        let long = apply_exclusions(session(0.0, 0.0, &[(0.0, 100.0), (200.0, 1100.0)], planned));
        assert!(long.kept());
        let empty = apply_exclusions(session(0.0, 0.0, &[], planned));
        assert_eq!(empty.exclusion, Some(ExclusionReason::TooShort));
    }

    #[test]
    fn link_marks_unmatched() {
        let roster = Roster::new([student("a"), student("b")]).unwrap();
        let linked = link_roster(vec![session(0.0, 0.0, &[], 1.0)], &roster);
        assert!(linked[0].kept());
        assert_eq!(linked[0].student_b.as_ref().unwrap().student_id, "b");

        let partial = Roster::new([student("a")]).unwrap();
        let linked = link_roster(vec![session(0.0, 0.0, &[], 1.0)], &partial);
        assert_eq!(linked[0].exclusion, Some(ExclusionReason::UnmatchedMetadata));
        assert_eq!(linked[0].exclusion.unwrap().as_str(), "unmatched_metadata");
    }

    fn arb_session() -> impl Strategy<Value = SessionRecord> {
        (
            0.0..100.0f64,
            0.0..100.0f64,
            prop::collection::vec((0.0..5.0f64, 0.0..5.0f64), 0..30),
            1.0..400.0f64,
        )
            .prop_map(|(ea, eb, steps, planned)| {
                let mut t = 0.0;
                let spans: Vec<(f64, f64)> = steps
                    .into_iter()
                    .map(|(gap, dur)| {
                        let start = t + gap;
                        t = start + dur;
                        (start, t)
                    })
                    .collect();
                session(ea, eb, &spans, planned)
            })
    }

    proptest! {
        #[test]
        fn trim_is_idempotent_and_shrinking(s in arb_session()) {
            let once = trim_to_copresence(s.clone());
            prop_assert!(once.utterances.len() <= s.utterances.len());
            prop_assert!(once.utterances.iter().all(|u| u.start_s >= s.copresence_start_s()));
            prop_assert_eq!(trim_to_copresence(once.clone()), once);
        }

        #[test]
        fn exclusions_touch_only_the_flag(s in arb_session()) {
            let s = trim_to_copresence(s);
            let out = apply_exclusions(s.clone());
            prop_assert_eq!(&out.utterances, &s.utterances);
            prop_assert_eq!(out.kept(), s.observed_duration_s() >= s.planned_duration_s / 2.0);
            if out.kept() {
                let talk: f64 = out.utterances.iter().map(|u| u.duration_s()).sum();
                prop_assert!(talk <= out.observed_duration_s() + 1e-9);
            }
        }
    }
}
