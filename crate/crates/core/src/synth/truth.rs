use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{gains, GeneratorConfig};
use crate::classify::NatureLabel;
use crate::corpus::{Axis, PairKind, Role, StudyCell, AXES};
use crate::studies::{Analysis, StudyId, StudyReport};
use crate::{Error, Result};

pub const TRUTH_SCHEMA: &str = "tutor-attention-truth";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Percentage points, as in lower-vs-higher tests and bounds.
    Pp,
    /// Share units, as in regression coefficients.
    Share,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: f64,
    pub unit: Unit,
}

impl Expectation {
    fn pp(value: f64) -> Expectation {
        Expectation { value, unit: Unit::Pp }
    }

    fn share_from_pp(value_pp: f64) -> Expectation {
        Expectation {
            value: value_pp / 100.0,
            unit: Unit::Share,
        }
    }

    pub fn value_pp(&self) -> f64 {
        match self.unit {
            Unit::Pp => self.value,
            Unit::Share => 100.0 * self.value,
        }
    }
}

/// Planted parameters and the population value of every estimate the
/// studies report, keyed like the report analyses. Regression
/// coefficients append the coefficient name to the analysis key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub schema: String,
    pub run_id: String,
    pub digest: String,
    pub config: GeneratorConfig,
    pub expectations: BTreeMap<String, Expectation>,
}

impl TruthRecord {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<TruthRecord> {
        let t: TruthRecord = serde_json::from_str(text)?;
        if t.schema != TRUTH_SCHEMA {
            return Err(Error::Config(format!("not a truth record: schema `{}`", t.schema)));
        }
        Ok(t)
    }
}

/// Noise-free shares (pp) of one composition: overall then the three
/// natures, for student A and student B.
struct Composition {
    flags: [[bool; 3]; 2],
    a_lower: bool,
    probability: f64,
    shares: [[f64; 4]; 2],
}

impl Composition {
    fn lower(&self) -> usize {
        if self.a_lower {
            0
        } else {
            1
        }
    }
}

/// Every focal-flag combination and achievement order with its probability.
fn compositions(config: &GeneratorConfig) -> Vec<Composition> {
    let e = &config.effects;
    let mut out = Vec::with_capacity(128);
    for code in 0u32..64 {
        let flags = [
            [code & 1 != 0, code & 2 != 0, code & 4 != 0],
            [code & 8 != 0, code & 16 != 0, code & 32 != 0],
        ];
        let mut p = 1.0;
        for student in &flags {
            for (k, axis) in AXES.into_iter().enumerate() {
                let q = config.marginals.focal(axis);
                p *= if student[k] { q } else { 1.0 - q };
            }
        }
        for a_lower in [true, false] {
            let (base_a, base_b, lambda, _) = config.targets_pp(flags[0], flags[1], a_lower);
            let (gain_a, gain_b) = gains(lambda, a_lower);
            let student = |base: f64, gain: f64| {
                let mut y = [base + gain, 0.0, 0.0, 0.0];
                for (j, n) in NatureLabel::ALL.into_iter().enumerate() {
                    y[j + 1] = e.nature_base.get(n) * base + e.nature_bonus.get(n) * gain;
                }
                y
            };
            out.push(Composition {
                flags,
                a_lower,
                probability: 0.5 * p,
                shares: [student(base_a, gain_a), student(base_b, gain_b)],
            });
        }
    }
    out
}

const OUTCOME_NAMES: [&str; 4] = ["overall", "content", "relationship", "management"];

/// Weighted mean of `f` over compositions passing `keep`; None when they
/// have no probability.
fn mean_over(pop: &[Composition], keep: impl Fn(&Composition) -> bool, f: impl Fn(&Composition) -> f64) -> Option<f64> {
    let (mut w, mut sum) = (0.0, 0.0);
    for c in pop.iter().filter(|c| keep(c)) {
        w += c.probability;
        sum += c.probability * f(c);
    }
    (w > 0.0).then(|| sum / w)
}

/// Study 2 coefficients (pp) for one axis and outcome: role effects
/// relative to the reference role and the lower-achiever coefficient.
///
/// With roles r and the lower indicator L, the conditional mean is
/// a_r + (L − ½)·c_r. Role dummies and L absorb a_r and the
/// probability-weighted mean of c_r; the remainder is orthogonal to every
/// regressor, achievement scores included.
fn role_coefficients(pop: &[Composition], axis: Axis, outcome: usize) -> Option<(Vec<(String, f64)>, f64)> {
    let k = AXES.iter().position(|&a| a == axis).expect("axis listed");
    let roles = axis.roles();
    let mut sums = [[0.0f64; 2]; 4];
    let mut weights = [[0.0f64; 2]; 4];
    for c in pop {
        let kind = PairKind::of(c.flags[0][k], c.flags[1][k]);
        for slot in 0..2 {
            let role = Role::new(axis, c.flags[slot][k], kind);
            let r = roles.iter().position(|x| *x == role).expect("role listed");
            let l = usize::from(c.lower() == slot);
            sums[r][l] += c.probability * c.shares[slot][outcome];
            weights[r][l] += c.probability;
        }
    }
    let mut level = [0.0; 4];
    let mut slope = [0.0; 4];
    for r in 0..4 {
        if weights[r][0] <= 0.0 || weights[r][1] <= 0.0 {
            return None;
        }
        let m0 = sums[r][0] / weights[r][0];
        let m1 = sums[r][1] / weights[r][1];
        level[r] = 0.5 * (m0 + m1);
        slope[r] = m1 - m0;
    }
    let total: f64 = weights.iter().map(|w| w[0] + w[1]).sum();
    let lower = (0..4).map(|r| (weights[r][0] + weights[r][1]) / total * slope[r]).sum();
    let effects = (1..4).map(|r| (roles[r].name(), level[r] - level[0])).collect();
    Some((effects, lower))
}

/// Population values of the planted model, by exact enumeration of pair
/// compositions. Noise terms are symmetric around zero and drop out.
pub fn derive_truth(config: &GeneratorConfig, digest: &str) -> TruthRecord {
    let e = &config.effects;
    let pop = compositions(config);
    let gap = |c: &Composition, o: usize| c.shares[c.lower()][o] - c.shares[1 - c.lower()][o];

    let mut x = BTreeMap::new();
    for (o, name) in OUTCOME_NAMES.into_iter().enumerate() {
        let v = mean_over(&pop, |_| true, |c| gap(c, o)).expect("compositions have probability");
        x.insert(format!("study1/{name}"), Expectation::pp(v));
    }

    for (k, axis) in AXES.into_iter().enumerate() {
        for cell in StudyCell::ALL {
            let in_cell = |c: &Composition| {
                StudyCell::classify(c.flags[c.lower()][k], c.flags[1 - c.lower()][k]) == cell
            };
            for (o, name) in OUTCOME_NAMES.into_iter().enumerate() {
                if let Some(v) = mean_over(&pop, in_cell, |c| gap(c, o)) {
                    x.insert(
                        format!("study3/{}/{}/{name}", axis.name(), cell.name(axis)),
                        Expectation::pp(v),
                    );
                }
            }
        }

        let amb = e.ambiguity_pp.get(axis);
        for kind in [PairKind::BothFocal, PairKind::BothOther] {
            x.insert(
                format!("robustness/one_of/{}", axis.pair_name(kind)),
                Expectation::share_from_pp(amb.get(kind)),
            );
        }
        let spread = [0.0, amb.both_focal, amb.both_other];
        let range = spread.iter().cloned().fold(f64::MIN, f64::max) - spread.iter().cloned().fold(f64::MAX, f64::min);

        for (o, name) in OUTCOME_NAMES.into_iter().enumerate() {
            let Some((effects, lower)) = role_coefficients(&pop, axis, o) else {
                continue;
            };
            let key = format!("study2/{}/{name}", axis.name());
            for (role, v) in &effects {
                x.insert(format!("{key}/{role}"), Expectation::share_from_pp(*v));
                if o == 0 {
                    x.insert(
                        format!("robustness/bound/{}/{role}", axis.name()),
                        Expectation::pp(crate::studies::residual_gap(*v, range)),
                    );
                }
            }
            x.insert(format!("{key}/lower_achieving"), Expectation::share_from_pp(lower));
            x.insert(format!("{key}/own_achievement"), Expectation::share_from_pp(0.0));
            x.insert(format!("{key}/partner_achievement"), Expectation::share_from_pp(0.0));
        }
    }
    x.insert("robustness/one_of/intercept".into(), Expectation { value: e.one_of_share, unit: Unit::Share });

    TruthRecord {
        schema: TRUTH_SCHEMA.into(),
        run_id: digest.chars().take(16).collect(),
        digest: digest.into(),
        config: config.clone(),
        expectations: x,
    }
}

/// Allowed absolute deviation in pp; the longest matching key prefix in
/// `overrides` wins over `default_pp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub default_pp: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            default_pp: 0.5,
            overrides: BTreeMap::new(),
        }
    }
}

impl Tolerances {
    pub fn uniform(pp: f64) -> Tolerances {
        Tolerances {
            default_pp: pp,
            overrides: BTreeMap::new(),
        }
    }

    pub fn for_key(&self, key: &str) -> f64 {
        self.overrides
            .iter()
            .filter(|(prefix, _)| key.starts_with(prefix.as_str()))
            .max_by_key(|(prefix, _)| prefix.len())
            .map_or(self.default_pp, |(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub key: String,
    pub planted_pp: f64,
    /// None when the report lacks the estimate.
    pub estimate_pp: Option<f64>,
    /// Estimate minus planted value.
    pub deviation_pp: Option<f64>,
    pub tolerance_pp: f64,
    /// Whether the reported confidence interval contains the planted value.
    pub ci_covers: Option<bool>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthCheck {
    pub run_id: String,
    pub verdicts: Vec<Verdict>,
}

impl TruthCheck {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.pass)
    }

    pub fn verdict(&self, key: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.key == key)
    }

    /// One line per verdict.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let status = if v.pass { "PASS" } else { "FAIL" };
            let _ = match (v.estimate_pp, v.deviation_pp) {
                (Some(est), Some(dev)) => writeln!(
                    out,
                    "{status} {} planted={:.4} estimate={est:.4} deviation={dev:+.4} tolerance={:.4}{}",
                    v.key,
                    v.planted_pp,
                    v.tolerance_pp,
                    match v.ci_covers {
                        Some(true) => " ci=covers",
                        Some(false) => " ci=misses",
                        None => "",
                    }
                ),
                _ => writeln!(out, "{status} {} planted={:.4} estimate=missing", v.key, v.planted_pp),
            };
        }
        out
    }
}

/// Estimate and interval (pp) for a truth key.
fn lookup(report: &StudyReport, key: &str) -> Option<(f64, Option<(f64, f64)>)> {
    match report.analyses.get(key) {
        Some(Analysis::Gap(g)) => return Some((g.test.mean_difference, Some((g.test.ci_low, g.test.ci_high)))),
        Some(Analysis::Bound(b)) => return Some((b.residual_gap_pp, None)),
        _ => {}
    }
    let (analysis, coef) = key.rsplit_once('/')?;
    let c = report.regression(analysis)?.coefficient(coef)?;
    Some((100.0 * c.estimate, Some((100.0 * c.ci_low, 100.0 * c.ci_high))))
}

/// Compares every expectation belonging to one of the given reports'
/// studies with the reported estimate.
pub fn truth_check(truth: &TruthRecord, reports: &[StudyReport], tolerances: &Tolerances) -> Result<TruthCheck> {
    let mut verdicts = Vec::new();
    for report in reports {
        if report.run_id != truth.run_id || report.fingerprint.digest != truth.digest {
            return Err(Error::RunIdMismatch {
                truth: truth.run_id.clone(),
                report: report.run_id.clone(),
            });
        }
        let prefix = format!("{}/", report.study.as_str());
        for (key, expected) in truth.expectations.range(prefix.clone()..).take_while(|(k, _)| k.starts_with(&prefix)) {
            let planted_pp = expected.value_pp();
            let tolerance_pp = tolerances.for_key(key);
            let found = lookup(report, key);
            let verdict = match found {
                Some((est, ci)) => {
                    let dev = est - planted_pp;
                    Verdict {
                        key: key.clone(),
                        planted_pp,
                        estimate_pp: Some(est),
                        deviation_pp: Some(dev),
                        tolerance_pp,
                        ci_covers: ci.map(|(lo, hi)| lo <= planted_pp && planted_pp <= hi),
                        pass: dev.abs() <= tolerance_pp,
                    }
                }
                None => Verdict {
                    key: key.clone(),
                    planted_pp,
                    estimate_pp: None,
                    deviation_pp: None,
                    tolerance_pp,
                    ci_covers: None,
                    pass: false,
                },
            };
            verdicts.push(verdict);
        }
    }
    Ok(TruthCheck {
        run_id: truth.run_id.clone(),
        verdicts,
    })
}

/// Studies with at least one expectation.
pub fn studies_in(truth: &TruthRecord) -> Vec<StudyId> {
    StudyId::ALL
        .into_iter()
        .filter(|s| truth.expectations.keys().any(|k| k.starts_with(&format!("{}/", s.as_str()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::config::paper_scenario;

    #[test]
    fn paper_scenario_truths() {
        let t = derive_truth(&paper_scenario(0, 10), "ab");
        let get = |k: &str| t.expectations[k].value_pp();
        assert!((get("study1/overall") - 2.3).abs() < 1e-12);
        assert!((get("study1/content") - 1.25).abs() < 1e-12);
        assert!((get("study3/gender/mixed_lower_female/overall") + 1.4).abs() < 1e-12);
        assert!((get("study3/gender/mixed_lower_male/overall") - 9.1).abs() < 1e-12);
        assert!((get("study3/race/black_black/overall") - 8.6).abs() < 1e-12);
        assert!((get("study3/el/el_el/overall") + 4.6).abs() < 1e-12);
        assert!((get("study2/gender/overall/female_in_mixed") + 5.25).abs() < 1e-12);
        assert!((get("robustness/one_of/male_male") + 4.2).abs() < 1e-12);
        assert!((get("robustness/bound/gender/female_in_mixed") + 1.05).abs() < 1e-12);
        let parts: f64 = ["content", "relationship", "management"]
            .iter()
            .map(|n| get(&format!("study3/race/black_black/{n}")))
            .sum();
        assert!((parts - 8.6).abs() < 1e-12);
        assert!((get("study2/gender/overall/lower_achieving") - 2.3).abs() < 1e-12);
        assert_eq!(t.run_id, "ab");
    }

    #[test]
    fn tolerance_prefixes() {
        let mut tol = Tolerances::uniform(0.5);
        tol.overrides.insert("study3".into(), 1.0);
        tol.overrides.insert("study3/race".into(), 2.0);
        assert_eq!(tol.for_key("study1/overall"), 0.5);
        assert_eq!(tol.for_key("study3/gender/x"), 1.0);
        assert_eq!(tol.for_key("study3/race/x"), 2.0);
    }

    #[test]
    fn truth_json_round_trip() {
        let t = derive_truth(&paper_scenario(3, 10), "00ff");
        assert_eq!(TruthRecord::from_json(&t.to_json().unwrap()).unwrap(), t);
        assert!(TruthRecord::from_json(&t.to_json().unwrap().replace(TRUTH_SCHEMA, "other")).is_err());
    }
}
