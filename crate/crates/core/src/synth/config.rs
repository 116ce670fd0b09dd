use serde::{Deserialize, Serialize};

use crate::classify::NatureLabel;
use crate::corpus::{Axis, Grade, PairKind, StudyCell, AXES};
use crate::{Error, Result};

/// One value per demographic axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerAxis<T> {
    pub gender: T,
    pub race: T,
    pub el: T,
}

impl<T> PerAxis<T> {
    pub fn get(&self, axis: Axis) -> &T {
        match axis {
            Axis::Gender => &self.gender,
            Axis::Race => &self.race,
            Axis::El => &self.el,
        }
    }

    pub fn get_mut(&mut self, axis: Axis) -> &mut T {
        match axis {
            Axis::Gender => &mut self.gender,
            Axis::Race => &mut self.race,
            Axis::El => &mut self.el,
        }
    }
}

/// Share offsets (pp) by student role; `other_in_mixed` is the regression
/// reference and is usually 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoleLevels {
    pub focal_in_mixed: f64,
    pub other_in_mixed: f64,
    pub focal_pair: f64,
    pub other_pair: f64,
}

impl RoleLevels {
    pub fn get(&self, focal: bool, kind: PairKind) -> f64 {
        match (kind, focal) {
            (PairKind::Mixed, true) => self.focal_in_mixed,
            (PairKind::Mixed, false) => self.other_in_mixed,
            (PairKind::BothFocal, _) => self.focal_pair,
            (PairKind::BothOther, _) => self.other_pair,
        }
    }
}

/// Extra lower-achiever bonus (pp) by pairing cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellBonus {
    pub mixed_lower_focal: f64,
    pub mixed_lower_other: f64,
    pub both_focal: f64,
    pub both_other: f64,
}

impl CellBonus {
    pub fn get(&self, cell: StudyCell) -> f64 {
        match cell {
            StudyCell::MixedLowerFocal => self.mixed_lower_focal,
            StudyCell::MixedLowerOther => self.mixed_lower_other,
            StudyCell::BothFocal => self.both_focal,
            StudyCell::BothOther => self.both_other,
        }
    }
}

/// One-of share offsets (pp) of homogeneous pairings relative to mixed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ambiguity {
    pub both_focal: f64,
    pub both_other: f64,
}

impl Ambiguity {
    pub fn get(&self, kind: PairKind) -> f64 {
        match kind {
            PairKind::Mixed => 0.0,
            PairKind::BothFocal => self.both_focal,
            PairKind::BothOther => self.both_other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NatureMix {
    pub content: f64,
    pub relationship: f64,
    pub management: f64,
}

impl NatureMix {
    pub fn get(&self, nature: NatureLabel) -> f64 {
        match nature {
            NatureLabel::Content => self.content,
            NatureLabel::Relationship => self.relationship,
            NatureLabel::Management => self.management,
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        let v = [self.content, self.relationship, self.management];
        if v.iter().any(|x| !(*x >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InfeasibleConfig(format!("{what} must be non-negative and sum to 1")));
        }
        Ok(())
    }
}

/// Planted attention model. For student i of a session,
///
/// base_i = individual_share + Σ_axis level(role_i) + pair tilt ± session noise
/// λ = lower_bonus + Σ_axis bonus(cell)
///
/// The lower achiever gains max(λ, 0) over its base and the higher achiever
/// max(−λ, 0), so the lower-minus-higher gap is λ either way. The base is
/// split over natures by `nature_base` and the gain by `nature_bonus`. The
/// one-of share is `one_of_share` plus the ambiguity offsets of the pair's
/// kinds; "both" takes the remainder.
/// Offsets are in percentage points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedEffects {
    pub individual_share: f64,
    pub one_of_share: f64,
    pub lower_bonus_pp: f64,
    pub role_levels_pp: PerAxis<RoleLevels>,
    pub cell_bonus_pp: PerAxis<CellBonus>,
    pub ambiguity_pp: PerAxis<Ambiguity>,
    pub nature_base: NatureMix,
    pub nature_bonus: NatureMix,
}

/// Half-widths (pp) of bounded uniform noise terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Pair-level, added to student A and subtracted from student B.
    pub pair_tilt_pp: f64,
    /// Session-level, independent for each student.
    pub session_pp: f64,
    /// Session-level, on the one-of share.
    pub one_of_pp: f64,
}

/// How utterance labels realize the session's target shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Each utterance's recipient and nature drawn independently from the
    /// target shares.
    #[default]
    Iid,
    /// Label counts by largest remainder, then durations rescaled within
    /// each label so observed shares equal the targets.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradeSpec {
    pub grade: Grade,
    pub weight: f64,
    /// Raw baseline score distribution, rounded to 0.1.
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Marginals {
    pub p_female: f64,
    pub p_black: f64,
    pub p_el: f64,
}

impl Marginals {
    pub fn focal(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Gender => self.p_female,
            Axis::Race => self.p_black,
            Axis::El => self.p_el,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_pairs: usize,
    pub sessions_per_pair: usize,
    pub planned_duration_s: f64,
    /// Co-present session length.
    pub session_duration_s: MeanSd,
    pub utterances_per_session: MeanSd,
    pub min_utterances: usize,
    /// Log-normal utterance duration, clipped to [1 s, 60 s].
    pub utterance_median_s: f64,
    pub utterance_log_sd: f64,
    /// Later student's entry is uniform on [0, max]; tutor talk before it is
    /// trimmed away.
    pub max_entry_delay_s: f64,
    /// Share of sessions cut below half the planned length.
    pub short_session_rate: f64,
    /// Share of sessions whose second student is missing from the roster.
    pub unmatched_rate: f64,
    /// Probability that an individually addressed utterance names its
    /// recipient.
    pub name_rate: f64,
    pub marginals: Marginals,
    pub grades: Vec<GradeSpec>,
    pub effects: PlantedEffects,
    pub noise: NoiseConfig,
    pub sampling: SamplingMode,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        paper_scenario(0, 1000)
    }
}

/// Effects sized to the published estimates: overall lower-achiever bonus
/// 2.3 pp (1.25 pp of it content), mixed-gender cells at −1.4 pp (lower
/// female) and +9.1 pp (lower male), Black–Black +8.6 pp, EL–EL −4.6 pp,
/// role gaps of −5.25 pp (female in mixed), −5.9 pp (non-Black pair) and
/// −5.7 pp (non-EL pair), and the one-of offsets of the ambiguity table.
/// Cell bonuses are solved so these cell means hold at the configured
/// marginals.
pub fn paper_scenario(seed: u64, n_pairs: usize) -> GeneratorConfig {
    let marginals = Marginals {
        p_female: 0.5,
        p_black: 0.35,
        p_el: 0.35,
    };
    let p_mixed_gender = 2.0 * marginals.p_female * (1.0 - marginals.p_female);
    let p_bb = marginals.p_black * marginals.p_black;
    let p_ee = marginals.p_el * marginals.p_el;
    let gender_gap = -5.25;
    // Mixed-gender cells: −1.4 = gap + λ0 + x + E_o, 9.1 = −gap + λ0 + x + E_o.
    let x = (3.85 - 2.3) / (1.0 - p_mixed_gender);
    let y = (8.6 - 2.3) / (1.0 - p_bb);
    let z = (-4.6 - 2.3) / (1.0 - p_ee);
    let lambda0 = 2.3 - p_mixed_gender * x - p_bb * y - p_ee * z;
    let content = 1.25 / 2.3;
    let rest = 1.0 - content;
    GeneratorConfig {
        seed,
        n_pairs,
        sessions_per_pair: 1,
        planned_duration_s: 1200.0,
        session_duration_s: MeanSd { mean: 1068.0, sd: 180.0 },
        utterances_per_session: MeanSd { mean: 220.0, sd: 72.0 },
        min_utterances: 20,
        utterance_median_s: 2.5,
        utterance_log_sd: 0.6,
        max_entry_delay_s: 60.0,
        short_session_rate: 0.0,
        unmatched_rate: 0.0,
        name_rate: 0.3,
        marginals,
        grades: vec![
            GradeSpec { grade: Grade::K, weight: 0.27, mean: 120.0, sd: 40.0 },
            GradeSpec { grade: Grade::First, weight: 0.39, mean: 200.0, sd: 60.0 },
            GradeSpec { grade: Grade::Second, weight: 0.34, mean: 280.0, sd: 80.0 },
        ],
        effects: PlantedEffects {
            individual_share: 0.25,
            one_of_share: 0.13,
            lower_bonus_pp: lambda0,
            role_levels_pp: PerAxis {
                gender: RoleLevels {
                    focal_in_mixed: gender_gap,
                    other_in_mixed: 0.0,
                    focal_pair: -4.0,
                    other_pair: -1.0,
                },
                race: RoleLevels {
                    focal_in_mixed: 1.0,
                    other_in_mixed: 0.0,
                    focal_pair: 0.0,
                    other_pair: -5.9,
                },
                el: RoleLevels {
                    focal_in_mixed: 0.0,
                    other_in_mixed: 0.0,
                    focal_pair: -3.0,
                    other_pair: -5.7,
                },
            },
            cell_bonus_pp: PerAxis {
                gender: CellBonus { mixed_lower_focal: x, mixed_lower_other: x, ..CellBonus::default() },
                race: CellBonus { both_focal: y, ..CellBonus::default() },
                el: CellBonus { both_focal: z, ..CellBonus::default() },
            },
            ambiguity_pp: PerAxis {
                gender: Ambiguity { both_focal: -1.5, both_other: -4.2 },
                race: Ambiguity { both_focal: 3.4, both_other: -2.1 },
                el: Ambiguity { both_focal: 1.1, both_other: 0.1 },
            },
            nature_base: NatureMix { content: 0.7, relationship: 0.15, management: 0.15 },
            nature_bonus: NatureMix {
                content,
                relationship: rest * 0.12 / 0.28,
                management: rest * 0.16 / 0.28,
            },
        },
        noise: NoiseConfig { pair_tilt_pp: 3.0, session_pp: 2.0, one_of_pp: 2.0 },
        sampling: SamplingMode::Iid,
    }
}

/// No planted effects at all: every role, cell and pairing alike.
pub fn null_scenario(seed: u64, n_pairs: usize) -> GeneratorConfig {
    let mut c = paper_scenario(seed, n_pairs);
    c.effects.lower_bonus_pp = 0.0;
    c.effects.role_levels_pp = PerAxis::default();
    c.effects.cell_bonus_pp = PerAxis::default();
    c.effects.ambiguity_pp = PerAxis::default();
    c
}

impl GeneratorConfig {
    /// Checks ranges and that every share stays within [0, 1] for every
    /// composition, achievement order and noise extreme.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleConfig(m));
        if self.n_pairs == 0 || self.sessions_per_pair == 0 {
            return bad("n_pairs and sessions_per_pair must be positive".into());
        }
        if !(self.planned_duration_s > 0.0) {
            return bad("planned_duration_s must be positive".into());
        }
        if !(self.session_duration_s.mean > 0.0) || self.session_duration_s.sd < 0.0 {
            return bad("session duration must have positive mean and non-negative sd".into());
        }
        if !(self.utterances_per_session.mean >= 1.0) || self.utterances_per_session.sd < 0.0 {
            return bad("utterances per session must have mean >= 1 and non-negative sd".into());
        }
        if self.min_utterances == 0 {
            return bad("min_utterances must be at least 1".into());
        }
        if !(self.utterance_median_s > 0.0) || self.utterance_log_sd < 0.0 {
            return bad("utterance duration parameters out of range".into());
        }
        for (name, p) in [
            ("short_session_rate", self.short_session_rate),
            ("unmatched_rate", self.unmatched_rate),
            ("name_rate", self.name_rate),
            ("p_female", self.marginals.p_female),
            ("p_black", self.marginals.p_black),
            ("p_el", self.marginals.p_el),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.max_entry_delay_s < 0.0 {
            return bad("max_entry_delay_s must be non-negative".into());
        }
        if self.grades.is_empty()
            || self.grades.iter().any(|g| !(g.weight >= 0.0) || !(g.sd > 0.0))
            || !(self.grades.iter().map(|g| g.weight).sum::<f64>() > 0.0)
        {
            return bad("grades need non-negative weights (not all zero) and positive sd".into());
        }
        let e = &self.effects;
        e.nature_base.check("nature_base")?;
        e.nature_bonus.check("nature_bonus")?;
        let n = &self.noise;
        if n.pair_tilt_pp < 0.0 || n.session_pp < 0.0 || n.one_of_pp < 0.0 {
            return bad("noise half-widths must be non-negative".into());
        }

        let signs = [-1.0, 1.0];
        for code in 0u32..64 {
            let fa: [bool; 3] = [code & 1 != 0, code & 2 != 0, code & 4 != 0];
            let fb: [bool; 3] = [code & 8 != 0, code & 16 != 0, code & 32 != 0];
            for a_lower in [true, false] {
                let (base_a, base_b, lambda, one_of) = self.targets_pp(fa, fb, a_lower);
                let (gain_a, gain_b) = gains(lambda, a_lower);
                for ta in signs {
                    for sa in signs {
                        for sb in signs {
                            for so in signs {
                                let a = base_a + ta * n.pair_tilt_pp + sa * n.session_pp;
                                let b = base_b - ta * n.pair_tilt_pp + sb * n.session_pp;
                                let o = one_of + so * n.one_of_pp;
                                let share_a = a + gain_a;
                                let share_b = b + gain_b;
                                let both = 100.0 - share_a - share_b - o;
                                if a < 0.0 || b < 0.0 || o < 0.0 || both < 0.0 {
                                    return bad(format!(
                                        "shares leave [0, 1] for focal flags A={fa:?} B={fb:?}, \
                                         A lower={a_lower}: base A {a:.3} pp, base B {b:.3} pp, \
                                         bonus {lambda:.3} pp, one-of {o:.3} pp, both {both:.3} pp"
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Noise-free (base A, base B, lower bonus, one-of) in pp for students
    /// with the given focal flags (gender, race, EL).
    pub(crate) fn targets_pp(&self, fa: [bool; 3], fb: [bool; 3], a_lower: bool) -> (f64, f64, f64, f64) {
        let e = &self.effects;
        let mut base_a = 100.0 * e.individual_share;
        let mut base_b = base_a;
        let mut lambda = e.lower_bonus_pp;
        let mut one_of = 100.0 * e.one_of_share;
        for (k, axis) in AXES.into_iter().enumerate() {
            let kind = PairKind::of(fa[k], fb[k]);
            let levels = e.role_levels_pp.get(axis);
            base_a += levels.get(fa[k], kind);
            base_b += levels.get(fb[k], kind);
            let cell = if a_lower {
                StudyCell::classify(fa[k], fb[k])
            } else {
                StudyCell::classify(fb[k], fa[k])
            };
            lambda += e.cell_bonus_pp.get(axis).get(cell);
            one_of += e.ambiguity_pp.get(axis).get(kind);
        }
        (base_a, base_b, lambda, one_of)
    }
}

/// (gain of A, gain of B) in pp for bonus `lambda`.
pub(crate) fn gains(lambda: f64, a_lower: bool) -> (f64, f64) {
    let (lower, higher) = (lambda.max(0.0), (-lambda).max(0.0));
    if a_lower {
        (lower, higher)
    } else {
        (higher, lower)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_are_feasible() {
        paper_scenario(1, 10).validate().unwrap();
        null_scenario(1, 10).validate().unwrap();
    }

    #[test]
    fn paper_scenario_solves_cell_means() {
        let c = paper_scenario(0, 10);
        let e = &c.effects;
        let p_mix = 0.5;
        let p_bb = 0.35 * 0.35;
        let p_ee = p_bb;
        let x = e.cell_bonus_pp.gender.mixed_lower_focal;
        let y = e.cell_bonus_pp.race.both_focal;
        let z = e.cell_bonus_pp.el.both_focal;
        let overall = e.lower_bonus_pp + p_mix * x + p_bb * y + p_ee * z;
        assert!((overall - 2.3).abs() < 1e-12);
        let gap = e.role_levels_pp.gender.focal_in_mixed;
        let e_other = p_bb * y + p_ee * z;
        assert!((gap + e.lower_bonus_pp + x + e_other + 1.4).abs() < 1e-12);
        assert!((-gap + e.lower_bonus_pp + x + e_other - 9.1).abs() < 1e-12);
        assert!((e.lower_bonus_pp + y + p_mix * x + p_ee * z - 8.6).abs() < 1e-12);
        assert!((e.lower_bonus_pp + z + p_mix * x + p_bb * y + 4.6).abs() < 1e-12);
    }

    #[test]
    fn infeasible_configs_rejected() {
        let mut c = paper_scenario(0, 10);
        c.effects.role_levels_pp.race.other_pair = -30.0;
        assert!(matches!(c.validate(), Err(Error::InfeasibleConfig(_))));
        let mut c = paper_scenario(0, 10);
        c.effects.nature_bonus.content = 0.9;
        assert!(c.validate().is_err());
        let mut c = paper_scenario(0, 10);
        c.noise.one_of_pp = 20.0;
        assert!(c.validate().is_err());
        let mut c = paper_scenario(0, 10);
        c.marginals.p_black = 1.5;
        assert!(c.validate().is_err());
    }
}
