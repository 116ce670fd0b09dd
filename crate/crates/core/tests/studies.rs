use proptest::prelude::*;
use serde_json::Value;

use tutor_attention::classify::{LabelSet, RecipientLabel};
use tutor_attention::corpus::SessionRecord;
use tutor_attention::metrics::Denominator;
use tutor_attention::studies::{
    build_corpus, emit_report, read_report, residual_gap, run_study, Analysis, StudyConfig, StudyId, StudyReport,
    FIGURE_SCHEMA,
};
use tutor_attention::synth::{generate, paper_scenario, SyntheticCorpus};

fn small_corpus(seed: u64) -> SyntheticCorpus {
    let mut c = paper_scenario(seed, 150);
    c.utterances_per_session.mean = 60.0;
    c.utterances_per_session.sd = 10.0;
    generate(&c).unwrap()
}

fn all_reports(corpus: &SyntheticCorpus) -> Vec<StudyReport> {
    corpus.run_studies(&StudyId::ALL, &StudyConfig::default()).unwrap()
}

#[test]
fn reports_round_trip_through_json() {
    let corpus = small_corpus(4);
    let dir = tempfile::tempdir().unwrap();
    for report in all_reports(&corpus) {
        let written = emit_report(&report, dir.path()).unwrap();
        assert_eq!(read_report(&written[0]).unwrap(), report);
    }
}

#[test]
fn figure_files_carry_schema_line_and_header() {
    let corpus = small_corpus(5);
    let dir = tempfile::tempdir().unwrap();
    let expected = [
        ("achievement", "outcome,group,mean_share,se,n"),
        ("pairing_coefficients", "axis,outcome,role,estimate,se,ci_low,ci_high,reference"),
        ("interaction", "axis,cell,outcome,group,mean_share,se,n"),
        ("both_share", "axis,pairing,mean,sd,n"),
        ("ambiguity_bound", "axis,role,gap_pp,ambiguity_range_pp,residual_gap_pp"),
    ];
    let mut seen = 0;
    for report in all_reports(&corpus) {
        for path in emit_report(&report, dir.path()).unwrap() {
            let name = path.file_name().unwrap().to_str().unwrap().to_string();
            let Some((_, header)) = expected.iter().find(|(f, _)| name.ends_with(&format!(".{f}.csv"))) else {
                continue;
            };
            let text = std::fs::read_to_string(&path).unwrap();
            let mut lines = text.lines();
            let first = lines.next().unwrap();
            assert!(first.starts_with(&format!("# {FIGURE_SCHEMA} v1 study={}", report.study)), "{first}");
            assert!(first.ends_with(&format!("run_id={}", report.run_id)));
            assert!(lines.next().unwrap().starts_with(header), "{name}");
            assert!(lines.count() > 0, "{name} has no rows");
            seen += 1;
        }
    }
    assert_eq!(seen, expected.len());
}

#[test]
fn omitted_studies_are_not_emitted() {
    let corpus = small_corpus(6);
    let reports = corpus.run_studies(&[StudyId::Study1], &StudyConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&reports[0], dir.path()).unwrap();
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().all(|n| n.contains(".study1.")), "{names:?}");
}

fn swap_slots(sessions: &[SessionRecord]) -> Vec<SessionRecord> {
    sessions
        .iter()
        .map(|s| {
            let mut t = s.clone();
            std::mem::swap(&mut t.student_a_id, &mut t.student_b_id);
            std::mem::swap(&mut t.student_a, &mut t.student_b);
            std::mem::swap(&mut t.entry_a_s, &mut t.entry_b_s);
            t
        })
        .collect()
}

fn assert_numbers_close(a: &Value, b: &Value, path: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{path}: {x} vs {y}");
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (k, v) in x {
                assert_numbers_close(v, &y[k], &format!("{path}/{k}"));
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                assert_numbers_close(u, v, &format!("{path}[{i}]"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

#[test]
fn swapping_student_slots_leaves_estimates_unchanged() {
    let corpus = small_corpus(7);
    let labels = LabelSet::new(corpus.labels.iter().cloned()).unwrap();
    let swapped_labels = LabelSet::new(corpus.labels.iter().cloned().map(|mut l| {
        l.recipient = match l.recipient {
            RecipientLabel::StudentA => RecipientLabel::StudentB,
            RecipientLabel::StudentB => RecipientLabel::StudentA,
            other => other,
        };
        l
    }))
    .unwrap();
    let original = build_corpus(corpus.sessions.clone(), &corpus.roster, &labels, Denominator::TalkTime).unwrap();
    let swapped = build_corpus(swap_slots(&corpus.sessions), &corpus.roster, &swapped_labels, Denominator::TalkTime)
        .unwrap();
    let config = StudyConfig::default();
    for study in StudyId::ALL {
        let a = run_study(study, &original, &config).unwrap();
        let b = run_study(study, &swapped, &config).unwrap();
        assert_numbers_close(
            &serde_json::to_value(&a.analyses).unwrap(),
            &serde_json::to_value(&b.analyses).unwrap(),
            study.as_str(),
        );
    }
}

#[test]
fn bounds_never_exceed_their_gaps() {
    let corpus = small_corpus(8);
    let report = corpus.run_studies(&[StudyId::Robustness], &StudyConfig::default()).unwrap().remove(0);
    let mut n = 0;
    for analysis in report.analyses.values() {
        if let Analysis::Bound(b) = analysis {
            assert!(b.residual_gap_pp.abs() <= b.gap_pp.abs());
            assert!(b.residual_gap_pp == 0.0 || b.residual_gap_pp.signum() == b.gap_pp.signum());
            n += 1;
        }
    }
    assert_eq!(n, 9);
}

proptest! {
    #[test]
    fn residual_gap_shrinks_toward_zero(gap in -50.0f64..50.0, range in 0.0f64..20.0) {
        let r = residual_gap(gap, range);
        prop_assert!(r.abs() <= gap.abs());
        prop_assert!((r.abs() - (gap.abs() - range).max(0.0)).abs() < 1e-12);
        prop_assert!(r == 0.0 || r.signum() == gap.signum());
        prop_assert!(!(r == 0.0 && r.is_sign_negative()));
    }
}
