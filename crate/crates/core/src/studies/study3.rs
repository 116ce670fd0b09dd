use super::study1::{aggregate, gap_tests, push_gap_rows, GAP_FIGURE_COLUMNS};
use super::{outcome_name, Analysis, AnalysisCorpus, FigureTable, StudyConfig, StudyId, StudyReport};
use crate::corpus::AXES;
use crate::Result;

/// Lower- versus higher-achieving student within each pairing cell of
/// every axis, overall and by nature. Cells with fewer than two
/// observations are skipped with a notice.
pub fn run_study3(corpus: &AnalysisCorpus, config: &StudyConfig) -> Result<StudyReport> {
    let mut report = StudyReport::new(StudyId::Study3, config, &corpus.fingerprint);
    let mut columns = vec!["axis", "cell"];
    columns.extend(GAP_FIGURE_COLUMNS);
    let mut fig = FigureTable::new(&columns);
    for axis in AXES {
        for cell in axis.cells() {
            let name = cell.name(axis);
            let members = corpus
                .sessions
                .iter()
                .filter(|s| s.composition.cell(axis) == Some(cell));
            let (obs, n_pairs, n_sessions) = aggregate(members, config.aggregation)?;
            if obs.len() < 2 {
                report.notices.push(format!(
                    "{}/{name}: {} observation(s), cell skipped",
                    axis.name(),
                    obs.len()
                ));
                continue;
            }
            for (nature, g) in gap_tests(&obs, n_pairs, n_sessions, config)? {
                let outcome = outcome_name(nature);
                if nature.is_none() && g.low_n {
                    report.notices.push(format!(
                        "{}/{name}: {n_pairs} pair(s), below the minimum of {}",
                        axis.name(),
                        config.min_cell_pairs
                    ));
                }
                push_gap_rows(&mut fig, &[axis.name().to_string(), name.clone()], outcome, &g);
                report
                    .analyses
                    .insert(format!("study3/{}/{name}/{outcome}", axis.name()), Analysis::Gap(g));
            }
        }
    }
    report.figures.insert("interaction".into(), fig);
    Ok(report)
}
