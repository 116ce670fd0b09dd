use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Analysis, StudyId, StudyReport, SCHEMA_VERSION};
use crate::stats::render_regression_table;
use crate::{Error, Result};

/// First line of every figure file, followed by the CSV header.
pub const FIGURE_SCHEMA: &str = "tutor-attention-figure";

pub fn report_path(dir: &Path, run_id: &str, study: StudyId) -> PathBuf {
    dir.join(format!("{run_id}.{study}.json"))
}

pub fn figure_path(dir: &Path, run_id: &str, study: StudyId, figure: &str) -> PathBuf {
    dir.join(format!("{run_id}.{study}.{figure}.csv"))
}

fn tables_path(dir: &Path, run_id: &str, study: StudyId) -> PathBuf {
    dir.join(format!("{run_id}.{study}.tables.txt"))
}

/// Writes the JSON report, one CSV per figure and, when the report has
/// regressions, a text file of rendered tables. Returns the paths written.
pub fn emit_report(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = report_path(dir, &report.run_id, report.study);
    let mut out = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    written.push(path);

    for (name, fig) in &report.figures {
        let path = figure_path(dir, &report.run_id, report.study, name);
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(
            out,
            "# {FIGURE_SCHEMA} v{SCHEMA_VERSION} study={} figure={name} run_id={}",
            report.study, report.run_id
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&fig.columns)?;
        for row in &fig.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        written.push(path);
    }

    let tables = render_tables(report);
    if !tables.is_empty() {
        let path = tables_path(dir, &report.run_id, report.study);
        fs::write(&path, tables)?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<StudyReport> {
    let path = path.as_ref();
    let report: StudyReport = serde_json::from_str(&fs::read_to_string(path)?)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "{}: report schema v{}, expected v{SCHEMA_VERSION}",
            path.display(),
            report.schema_version
        )));
    }
    Ok(report)
}

/// Every regression of the report as a text table, intercept omitted.
pub fn render_tables(report: &StudyReport) -> String {
    let mut out = String::new();
    for (key, analysis) in &report.analyses {
        if let Analysis::Regression(fit) = analysis {
            let labels: Vec<(&str, &str)> = fit
                .coefficients
                .iter()
                .filter(|c| c.name != "intercept")
                .map(|c| (c.name.as_str(), c.name.as_str()))
                .collect();
            out.push_str(&render_regression_table(key, fit, &labels));
            out.push('\n');
        }
    }
    out
}
