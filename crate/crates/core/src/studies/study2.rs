use super::{
    num, outcome_name, Analysis, AnalysisCorpus, FigureTable, StudyConfig, StudyId, StudyReport,
    OUTCOMES,
};
use crate::classify::NatureLabel;
use crate::corpus::{Axis, RelativeAchievement, Slot, AXES};
use crate::stats::{ols_clustered_at, DesignMatrix};
use crate::{Error, Result};

pub const OWN_ACHIEVEMENT: &str = "own_achievement";
pub const PARTNER_ACHIEVEMENT: &str = "partner_achievement";
pub const LOWER_ACHIEVING: &str = "lower_achieving";

/// Outcome, regressors and pair clusters for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Study2Design {
    pub y: Vec<f64>,
    pub design: DesignMatrix,
    pub clusters: Vec<String>,
}

/// One row per (student, session) of every untied session: intercept,
/// dummies for the three non-reference roles on `axis`, own and partner
/// standardized baseline, and a lower-achiever indicator. The outcome is
/// the student's share, or the student's share of one nature.
pub fn build_study2_design(
    corpus: &AnalysisCorpus,
    axis: Axis,
    nature: Option<NatureLabel>,
) -> Result<Study2Design> {
    let roles = axis.roles();
    let mut names = vec!["intercept".to_string()];
    names.extend(roles[1..].iter().map(|r| r.name()));
    names.extend([OWN_ACHIEVEMENT, PARTNER_ACHIEVEMENT, LOWER_ACHIEVING].map(String::from));
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut clusters = Vec::new();
    let mut role_counts = [0usize; 4];
    for s in corpus.sessions.iter().filter(|s| !s.composition.is_tie()) {
        for slot in [Slot::A, Slot::B] {
            let role = s.composition.role(axis, slot);
            let ri = roles.iter().position(|r| *r == role).expect("role on axis");
            role_counts[ri] += 1;
            let mut row = vec![1.0];
            row.extend((1..4).map(|j| if j == ri { 1.0 } else { 0.0 }));
            row.push(s.z(slot));
            row.push(s.z(slot.other()));
            row.push(if s.composition.relative(slot) == RelativeAchievement::Lower { 1.0 } else { 0.0 });
            rows.push(row);
            y.push(match nature {
                None => s.shares.student(slot),
                Some(n) => s.shares.nature(slot).get(n),
            });
            clusters.push(s.pair_id.clone());
        }
    }
    if let Some(i) = role_counts.iter().position(|c| *c == 0) {
        return Err(Error::EmptyCategory(roles[i].name()));
    }
    Ok(Study2Design {
        y,
        design: DesignMatrix::from_rows(names, &rows)?,
        clusters,
    })
}

pub(crate) fn fit_axis(
    corpus: &AnalysisCorpus,
    axis: Axis,
    nature: Option<NatureLabel>,
    config: &StudyConfig,
) -> Result<crate::stats::RegressionFit> {
    let d = build_study2_design(corpus, axis, nature)?;
    ols_clustered_at(&d.y, &d.design, &d.clusters, config.confidence)
}

/// Role coefficients per axis, overall and by nature, against the
/// reference role (the non-focal student in a mixed pair).
pub fn run_study2(corpus: &AnalysisCorpus, config: &StudyConfig) -> Result<StudyReport> {
    let mut report = StudyReport::new(StudyId::Study2, config, &corpus.fingerprint);
    if corpus.fingerprint.n_tie_pairs > 0 {
        report
            .notices
            .push(format!("{} tie pair(s) excluded", corpus.fingerprint.n_tie_pairs));
    }
    let mut fig = FigureTable::new(&["axis", "outcome", "role", "estimate", "se", "ci_low", "ci_high", "reference"]);
    for axis in AXES {
        let roles = axis.roles();
        for nature in OUTCOMES {
            let fit = fit_axis(corpus, axis, nature, config)?;
            let outcome = outcome_name(nature);
            fig.push(vec![
                axis.name().into(),
                outcome.into(),
                roles[0].name(),
                num(0.0),
                num(0.0),
                num(0.0),
                num(0.0),
                "true".into(),
            ]);
            for role in &roles[1..] {
                let c = fit.coefficient(&role.name()).expect("role column");
                fig.push(vec![
                    axis.name().into(),
                    outcome.into(),
                    role.name(),
                    num(c.estimate),
                    num(c.se),
                    num(c.ci_low),
                    num(c.ci_high),
                    "false".into(),
                ]);
            }
            report
                .analyses
                .insert(format!("study2/{}/{outcome}", axis.name()), Analysis::Regression(fit));
        }
    }
    report.figures.insert("pairing_coefficients".into(), fig);
    Ok(report)
}
