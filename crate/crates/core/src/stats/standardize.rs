use std::collections::BTreeMap;

use crate::corpus::{Grade, StudentRecord};
use crate::{Error, Result};

/// z-scores with the sample standard deviation.
pub fn standardize_values(values: &[f64]) -> std::result::Result<Vec<f64>, String> {
    if values.len() < 2 {
        return Err(format!("{} student(s); need at least 2", values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err("baseline scores have zero variance".into());
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Sets `baseline_z` from `baseline_raw`, standardizing each grade
/// separately.
pub fn standardize_within_grade(students: &mut [StudentRecord]) -> Result<()> {
    let mut groups: BTreeMap<Grade, Vec<usize>> = BTreeMap::new();
    for (i, s) in students.iter().enumerate() {
        groups.entry(s.grade).or_default().push(i);
    }
    for (grade, idx) in groups {
        let raw: Vec<f64> = idx.iter().map(|&i| students[i].baseline_raw).collect();
        let z = standardize_values(&raw).map_err(|message| Error::Standardization {
            grade: grade.as_str().to_string(),
            message,
        })?;
        for (&i, z) in idx.iter().zip(z) {
            students[i].baseline_z = Some(z);
        }
    }
    Ok(())
}
