use super::study2::fit_axis;
use super::{num, Analysis, AnalysisCorpus, FigureTable, RobustnessBound, StudyConfig, StudyId, StudyReport};
use crate::corpus::{Axis, PairKind, AXES};
use crate::stats::{ols_clustered_at, summarize, DesignMatrix};
use crate::Result;

/// Homogeneous pairings entering the one-of regression, mixed pairings
/// being the baseline on every axis.
pub const AMBIGUITY_REGRESSORS: [(Axis, PairKind); 6] = [
    (Axis::Gender, PairKind::BothFocal),
    (Axis::Gender, PairKind::BothOther),
    (Axis::Race, PairKind::BothFocal),
    (Axis::Race, PairKind::BothOther),
    (Axis::El, PairKind::BothFocal),
    (Axis::El, PairKind::BothOther),
];

/// Session-level regression of the one-of share on homogeneous-pairing
/// dummies, descriptive statistics of the both-students share by pairing,
/// and the ambiguity bound on each Study 2 role coefficient: the spread of
/// one-of shares across the axis's pairings (baseline 0 and the two
/// homogeneous coefficients) is taken away from the coefficient's
/// magnitude.
/// Portion of a gap left after shrinking its magnitude by the ambiguity
/// range; zero when the range covers the whole gap.
pub fn residual_gap(gap_pp: f64, range_pp: f64) -> f64 {
    let r = (gap_pp.abs() - range_pp).max(0.0);
    if r == 0.0 {
        0.0
    } else {
        gap_pp.signum() * r
    }
}

pub fn run_robustness(corpus: &AnalysisCorpus, config: &StudyConfig) -> Result<StudyReport> {
    let mut report = StudyReport::new(StudyId::Robustness, config, &corpus.fingerprint);

    let mut names = vec!["intercept".to_string()];
    let mut active = Vec::new();
    for (axis, kind) in AMBIGUITY_REGRESSORS {
        if corpus.sessions.iter().any(|s| s.composition.kind(axis) == kind) {
            names.push(axis.pair_name(kind).to_string());
            active.push((axis, kind));
        } else {
            report
                .notices
                .push(format!("no {} sessions; dummy dropped", axis.pair_name(kind)));
        }
    }
    let rows: Vec<Vec<f64>> = corpus
        .sessions
        .iter()
        .map(|s| {
            let mut row = vec![1.0];
            row.extend(
                active
                    .iter()
                    .map(|(axis, kind)| if s.composition.kind(*axis) == *kind { 1.0 } else { 0.0 }),
            );
            row
        })
        .collect();
    let y: Vec<f64> = corpus.sessions.iter().map(|s| s.shares.one_of).collect();
    let clusters: Vec<&str> = corpus.sessions.iter().map(|s| s.pair_id.as_str()).collect();
    let design = DesignMatrix::from_rows(names, &rows)?;
    let one_of = match ols_clustered_at(&y, &design, &clusters, config.confidence) {
        Ok(fit) => Some(fit),
        Err(e) => {
            report.notices.push(format!("one-of regression not estimated: {e}"));
            None
        }
    };

    let mut both = FigureTable::new(&["axis", "pairing", "mean", "sd", "n"]);
    for axis in AXES {
        for kind in [PairKind::Mixed, PairKind::BothFocal, PairKind::BothOther] {
            let values: Vec<f64> = corpus
                .sessions
                .iter()
                .filter(|s| s.composition.kind(axis) == kind)
                .map(|s| s.shares.both)
                .collect();
            let Some(summary) = summarize(&values) else {
                continue;
            };
            both.push(vec![
                axis.name().into(),
                axis.pair_name(kind).into(),
                num(summary.mean),
                summary.sd.map(num).unwrap_or_default(),
                summary.n.to_string(),
            ]);
            report.analyses.insert(
                format!("robustness/both/{}/{}", axis.name(), axis.pair_name(kind)),
                Analysis::Describe(summary),
            );
        }
    }
    report.figures.insert("both_share".into(), both);

    let mut bounds = FigureTable::new(&["axis", "role", "gap_pp", "ambiguity_range_pp", "residual_gap_pp"]);
    if let Some(fit) = &one_of {
        for axis in AXES {
            let mut levels = vec![0.0];
            levels.extend(
                [PairKind::BothFocal, PairKind::BothOther]
                    .iter()
                    .filter_map(|k| fit.coefficient(axis.pair_name(*k)))
                    .map(|c| 100.0 * c.estimate),
            );
            let range = levels.iter().cloned().fold(f64::MIN, f64::max)
                - levels.iter().cloned().fold(f64::MAX, f64::min);
            let gaps = match fit_axis(corpus, axis, None, config) {
                Ok(g) => g,
                Err(e) => {
                    report
                        .notices
                        .push(format!("{}: no demographic fit for the bound: {e}", axis.name()));
                    continue;
                }
            };
            for role in &axis.roles()[1..] {
                let gap_pp = 100.0 * gaps.coefficient(&role.name()).expect("role column").estimate;
                let bound = RobustnessBound {
                    gap_pp,
                    ambiguity_range_pp: range,
                    residual_gap_pp: residual_gap(gap_pp, range),
                };
                bounds.push(vec![
                    axis.name().into(),
                    role.name(),
                    num(bound.gap_pp),
                    num(bound.ambiguity_range_pp),
                    num(bound.residual_gap_pp),
                ]);
                report.analyses.insert(
                    format!("robustness/bound/{}/{}", axis.name(), role.name()),
                    Analysis::Bound(bound),
                );
            }
        }
        report.analyses.insert("robustness/one_of".into(), Analysis::Regression(fit.clone()));
    }
    report.figures.insert("ambiguity_bound".into(), bounds);
    Ok(report)
}
