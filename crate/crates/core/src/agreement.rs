//! Inter-rater agreement and adjudication of doubly annotated labels.
//!
//! `NA` is an ordinary category here: agreement is measured before
//! disagreements and unusable utterances are resolved.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;

use serde::Serialize;

use crate::classify::{Label, LabelRow, NatureLabel, RecipientLabel};
use crate::{Error, Result};

/// Ratings of items by annotators, one label per (item, annotator).
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet<L: Label> {
    items: Vec<(String, String, L)>,
    categories: BTreeSet<L>,
}

impl<L: Label> AnnotationSet<L> {
    /// Fails on a repeated (item, annotator) pair or a label outside
    /// `categories`.
    pub fn new(
        items: Vec<(String, String, L)>,
        categories: impl IntoIterator<Item = L>,
    ) -> Result<AnnotationSet<L>> {
        let categories: BTreeSet<L> = categories.into_iter().collect();
        let mut seen = BTreeSet::new();
        for (item, annotator, label) in &items {
            if !seen.insert((item.as_str(), annotator.as_str())) {
                return Err(Error::InvalidInput(format!(
                    "item {item} rated twice by annotator {annotator}"
                )));
            }
            if !categories.contains(label) {
                return Err(Error::InvalidInput(format!(
                    "item {item}: label {label} is not a declared category"
                )));
            }
        }
        Ok(AnnotationSet { items, categories })
    }

    pub fn items(&self) -> &[(String, String, L)] {
        &self.items
    }

    pub fn categories(&self) -> &BTreeSet<L> {
        &self.categories
    }

    /// Ratings keyed by item, in item order.
    pub fn by_item(&self) -> BTreeMap<&str, Vec<&L>> {
        let mut map: BTreeMap<&str, Vec<&L>> = BTreeMap::new();
        for (item, _, label) in &self.items {
            map.entry(item.as_str()).or_default().push(label);
        }
        map
    }
}

impl AnnotationSet<RecipientLabel> {
    /// Recipient ratings from label-file rows; items are
    /// `session_id:utterance_index`.
    pub fn recipients(rows: &[LabelRow]) -> Result<AnnotationSet<RecipientLabel>> {
        let items = rows
            .iter()
            .map(|r| (item_id(r), r.annotator_id.clone(), r.recipient))
            .collect();
        let mut categories = RecipientLabel::CLASSES.to_vec();
        categories.push(RecipientLabel::NA);
        AnnotationSet::new(items, categories)
    }
}

impl AnnotationSet<NatureLabel> {
    pub fn natures(rows: &[LabelRow]) -> Result<AnnotationSet<NatureLabel>> {
        let items = rows
            .iter()
            .map(|r| (item_id(r), r.annotator_id.clone(), r.nature))
            .collect();
        AnnotationSet::new(items, NatureLabel::ALL)
    }
}

pub fn item_id(row: &LabelRow) -> String {
    format!("{}:{}", row.session_id, row.utterance_index)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryAgreement {
    pub category: String,
    /// Share of all ratings falling in this category.
    pub proportion: f64,
    /// `None` when the category is never or always used.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleissKappa {
    pub kappa: f64,
    pub p_bar: f64,
    pub p_e: f64,
    pub n_items: usize,
    pub n_raters: usize,
    pub per_category: Vec<CategoryAgreement>,
}

impl FleissKappa {
    /// Unweighted mean of the defined per-category kappas.
    pub fn mean_category_kappa(&self) -> Option<f64> {
        let ks: Vec<f64> = self.per_category.iter().filter_map(|c| c.kappa).collect();
        if ks.is_empty() {
            None
        } else {
            Some(ks.iter().sum::<f64>() / ks.len() as f64)
        }
    }
}

/// Pooled Fleiss kappa with per-category components.
pub fn fleiss_kappa<L: Label>(set: &AnnotationSet<L>) -> Result<FleissKappa> {
    let by_item = set.by_item();
    if by_item.is_empty() {
        return Err(Error::InsufficientData("no annotated items".into()));
    }
    let n = by_item.values().next().map(Vec::len).unwrap_or(0);
    if let Some((item, r)) = by_item.iter().find(|(_, r)| r.len() != n) {
        return Err(Error::InvalidInput(format!(
            "item {item} has {} ratings, expected {n}",
            r.len()
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData("fewer than 2 raters per item".into()));
    }
    let cats: Vec<&L> = set.categories.iter().collect();
    let n_items = by_item.len();
    let nf = n as f64;
    let mut totals = vec![0.0f64; cats.len()];
    // Σ_i n_ij (n − n_ij) per category
    let mut disagreement = vec![0.0f64; cats.len()];
    let mut p_sum = 0.0;
    for ratings in by_item.values() {
        let mut agree = 0.0;
        for (j, c) in cats.iter().enumerate() {
            let nij = ratings.iter().filter(|l| **l == *c).count() as f64;
            totals[j] += nij;
            disagreement[j] += nij * (nf - nij);
            agree += nij * (nij - 1.0);
        }
        p_sum += agree / (nf * (nf - 1.0));
    }
    let p_bar = p_sum / n_items as f64;
    let total = n_items as f64 * nf;
    let props: Vec<f64> = totals.iter().map(|t| t / total).collect();
    let p_e: f64 = props.iter().map(|p| p * p).sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Err(Error::DegenerateAgreement);
    }
    let per_category = cats
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let p = props[j];
            let kappa = if p > 0.0 && p < 1.0 {
                Some(1.0 - disagreement[j] / (total * (nf - 1.0) * p * (1.0 - p)))
            } else {
                None
            };
            CategoryAgreement {
                category: c.to_string(),
                proportion: p,
                kappa,
            }
        })
        .collect();
    Ok(FleissKappa {
        kappa: (p_bar - p_e) / (1.0 - p_e),
        p_bar,
        p_e,
        n_items,
        n_raters: n,
        per_category,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohenKappa {
    pub kappa: f64,
    pub p_o: f64,
    pub p_e: f64,
    pub n: usize,
}

pub fn cohen_kappa<L: Label>(a: &[L], b: &[L]) -> Result<CohenKappa> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "label vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InsufficientData("no labels".into()));
    }
    let n = a.len() as f64;
    let mut ma: BTreeMap<&L, f64> = BTreeMap::new();
    let mut mb: BTreeMap<&L, f64> = BTreeMap::new();
    let mut agree = 0.0;
    for (x, y) in a.iter().zip(b) {
        *ma.entry(x).or_default() += 1.0;
        *mb.entry(y).or_default() += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let p_o = agree / n;
    let p_e: f64 = ma
        .iter()
        .map(|(l, ca)| ca * mb.get(l).copied().unwrap_or(0.0))
        .sum::<f64>()
        / (n * n);
    if (1.0 - p_e).abs() < 1e-12 {
        return Err(Error::DegenerateAgreement);
    }
    Ok(CohenKappa {
        kappa: (p_o - p_e) / (1.0 - p_e),
        p_o,
        p_e,
        n: a.len(),
    })
}

/// Merges two annotations of the same items. Items where the annotators
/// disagree or either says NA take the label from `resolutions`; the
/// result contains no NA.
pub fn adjudicate<K, L>(
    primary: &BTreeMap<K, L>,
    secondary: &BTreeMap<K, L>,
    resolutions: &BTreeMap<K, L>,
) -> Result<BTreeMap<K, L>>
where
    K: Ord + Clone + Display,
    L: Label,
{
    if let Some(k) = primary
        .keys()
        .find(|k| !secondary.contains_key(*k))
        .or_else(|| secondary.keys().find(|k| !primary.contains_key(*k)))
    {
        return Err(Error::InvalidInput(format!("item {k} is not in both annotations")));
    }
    let mut out = BTreeMap::new();
    let mut unresolved = Vec::new();
    for (k, p) in primary {
        let s = &secondary[k];
        if p == s && !p.is_na() {
            out.insert(k.clone(), p.clone());
            continue;
        }
        match resolutions.get(k) {
            Some(r) if r.is_na() => {
                return Err(Error::InvalidInput(format!("item {k} resolved to NA")));
            }
            Some(r) => {
                out.insert(k.clone(), r.clone());
            }
            None => unresolved.push(k.to_string()),
        }
    }
    if !unresolved.is_empty() {
        return Err(Error::Unresolved(unresolved));
    }
    Ok(out)
}
