use std::collections::BTreeMap;

use super::{
    num, outcome_name, Aggregation, Analysis, AnalysisCorpus, AnalysisSession, FigureTable, GapTest,
    StudyConfig, StudyId, StudyReport, OUTCOMES,
};
use crate::classify::NatureLabel;
use crate::metrics::shares_by_relative_achievement;
use crate::stats::{paired_t_test_at, summarize};
use crate::{Error, Result};

/// Lower and higher student's share for the overall outcome and each
/// nature, indexed like `OUTCOMES`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct GapObservation {
    pub lower: [f64; 4],
    pub higher: [f64; 4],
}

fn observe(s: &AnalysisSession) -> Result<GapObservation> {
    let rel = shares_by_relative_achievement(&s.shares, &s.composition)?;
    let mut obs = GapObservation::default();
    for (k, nature) in OUTCOMES.iter().enumerate() {
        (obs.lower[k], obs.higher[k]) = match nature {
            None => (rel.lower, rel.higher),
            Some(n) => (rel.lower_nature.get(*n), rel.higher_nature.get(*n)),
        };
    }
    Ok(obs)
}

/// One observation per pair (unweighted session mean) or per session.
/// Tie pairs must already be filtered out.
pub(crate) fn aggregate<'a>(
    sessions: impl IntoIterator<Item = &'a AnalysisSession>,
    aggregation: Aggregation,
) -> Result<(Vec<GapObservation>, usize, usize)> {
    let mut groups: BTreeMap<&str, Vec<GapObservation>> = BTreeMap::new();
    let mut pairs = std::collections::BTreeSet::new();
    let mut n_sessions = 0;
    for s in sessions {
        pairs.insert(s.pair_id.as_str());
        let key = match aggregation {
            Aggregation::PairMean => s.pair_id.as_str(),
            Aggregation::Pooled => s.session_id.as_str(),
        };
        groups.entry(key).or_default().push(observe(s)?);
        n_sessions += 1;
    }
    let obs = groups
        .into_values()
        .map(|g| {
            let n = g.len() as f64;
            let mut m = GapObservation::default();
            for o in &g {
                for k in 0..4 {
                    m.lower[k] += o.lower[k] / n;
                    m.higher[k] += o.higher[k] / n;
                }
            }
            m
        })
        .collect();
    Ok((obs, pairs.len(), n_sessions))
}

/// Tests for the overall outcome and each nature.
pub(crate) fn gap_tests(
    obs: &[GapObservation],
    n_pairs: usize,
    n_sessions: usize,
    config: &StudyConfig,
) -> Result<Vec<(Option<NatureLabel>, GapTest)>> {
    let se = |v: &[f64]| {
        let s = summarize(v).expect("non-empty");
        s.sd.unwrap_or(0.0) / (s.n as f64).sqrt()
    };
    OUTCOMES
        .iter()
        .enumerate()
        .map(|(k, nature)| {
            let lower: Vec<f64> = obs.iter().map(|o| o.lower[k]).collect();
            let higher: Vec<f64> = obs.iter().map(|o| o.higher[k]).collect();
            let diffs: Vec<f64> = obs.iter().map(|o| 100.0 * (o.lower[k] - o.higher[k])).collect();
            let test = paired_t_test_at(&diffs, config.confidence)?;
            Ok((
                *nature,
                GapTest {
                    test,
                    n_pairs,
                    n_sessions,
                    lower_mean: summarize(&lower).expect("non-empty").mean,
                    higher_mean: summarize(&higher).expect("non-empty").mean,
                    lower_se: se(&lower),
                    higher_se: se(&higher),
                    low_n: n_pairs < config.min_cell_pairs,
                },
            ))
        })
        .collect()
}

pub(crate) const GAP_FIGURE_COLUMNS: [&str; 5] = ["outcome", "group", "mean_share", "se", "n"];

pub(crate) fn push_gap_rows(fig: &mut FigureTable, prefix: &[String], outcome: &str, g: &GapTest) {
    for (group, mean, se) in [("lower", g.lower_mean, g.lower_se), ("higher", g.higher_mean, g.higher_se)] {
        let mut row = prefix.to_vec();
        row.extend([outcome.to_string(), group.to_string(), num(mean), num(se), g.test.n.to_string()]);
        fig.push(row);
    }
}

/// Lower- versus higher-achieving student of each pair, overall and by
/// nature. Tie pairs are excluded.
pub fn run_study1(corpus: &AnalysisCorpus, config: &StudyConfig) -> Result<StudyReport> {
    let mut report = StudyReport::new(StudyId::Study1, config, &corpus.fingerprint);
    let untied = corpus.sessions.iter().filter(|s| !s.composition.is_tie());
    let (obs, n_pairs, n_sessions) = aggregate(untied, config.aggregation)?;
    if obs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "lower-vs-higher test needs at least 2 untied {}, got {}",
            match config.aggregation {
                Aggregation::PairMean => "pairs",
                Aggregation::Pooled => "sessions",
            },
            obs.len()
        )));
    }
    if corpus.fingerprint.n_tie_pairs > 0 {
        report
            .notices
            .push(format!("{} tie pair(s) excluded", corpus.fingerprint.n_tie_pairs));
    }
    let mut fig = FigureTable::new(&GAP_FIGURE_COLUMNS);
    for (nature, g) in gap_tests(&obs, n_pairs, n_sessions, config)? {
        let name = outcome_name(nature);
        push_gap_rows(&mut fig, &[], name, &g);
        report.analyses.insert(format!("study1/{name}"), Analysis::Gap(g));
    }
    report.figures.insert("achievement".into(), fig);
    Ok(report)
}
