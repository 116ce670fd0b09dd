use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Label;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Row and column order of `confusion`.
    pub labels: Vec<String>,
    /// `confusion[gold][pred]`.
    pub confusion: Vec<Vec<u64>>,
}

/// Accuracy, confusion matrix and macro F1 over the labels that occur in
/// either vector.
pub fn evaluate_classifier<L: Label>(pred: &[L], gold: &[L]) -> Result<Evaluation> {
    if pred.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InsufficientData("nothing to evaluate".into()));
    }
    if let Some(na) = gold.iter().position(Label::is_na) {
        return Err(Error::InvalidInput(format!("gold label {na} is NA")));
    }
    let classes: BTreeSet<&L> = pred.iter().chain(gold).collect();
    let index: BTreeMap<&L, usize> = classes.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let k = classes.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for (p, g) in pred.iter().zip(gold) {
        confusion[index[g]][index[p]] += 1;
    }
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let per_class: Vec<ClassMetrics> = classes
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let tp = confusion[i][i] as f64;
            let predicted: u64 = (0..k).map(|g| confusion[g][i]).sum();
            let actual: u64 = confusion[i].iter().sum();
            let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
            let recall = if actual > 0 { tp / actual as f64 } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label: l.to_string(),
                precision,
                recall,
                f1,
                support: actual as usize,
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64;
    Ok(Evaluation {
        n: gold.len(),
        accuracy: correct as f64 / gold.len() as f64,
        macro_f1,
        labels: classes.iter().map(|l| l.to_string()).collect(),
        per_class,
        confusion,
    })
}
