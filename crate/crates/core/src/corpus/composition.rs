use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ElStatus, Gender, Race, Slot, StudentRecord};
use crate::{Error, Result};

/// A demographic axis along which pairs are compared. Each axis splits
/// students into a focal group and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Gender,
    Race,
    El,
}

pub const AXES: [Axis; 3] = [Axis::Gender, Axis::Race, Axis::El];

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Gender => "gender",
            Axis::Race => "race",
            Axis::El => "el",
        }
    }

    pub fn is_focal(self, student: &StudentRecord) -> bool {
        match self {
            Axis::Gender => student.gender == Gender::Female,
            Axis::Race => student.race == Race::Black,
            Axis::El => student.el_status == ElStatus::El,
        }
    }

    pub fn group_name(self, focal: bool) -> &'static str {
        match (self, focal) {
            (Axis::Gender, true) => "female",
            (Axis::Gender, false) => "male",
            (Axis::Race, true) => "black",
            (Axis::Race, false) => "non_black",
            (Axis::El, true) => "el",
            (Axis::El, false) => "non_el",
        }
    }

    pub fn pair_name(self, kind: PairKind) -> &'static str {
        match (self, kind) {
            (_, PairKind::Mixed) => "mixed",
            (Axis::Gender, PairKind::BothFocal) => "female_female",
            (Axis::Gender, PairKind::BothOther) => "male_male",
            (Axis::Race, PairKind::BothFocal) => "black_black",
            (Axis::Race, PairKind::BothOther) => "other_other",
            (Axis::El, PairKind::BothFocal) => "el_el",
            (Axis::El, PairKind::BothOther) => "nonel_nonel",
        }
    }

    /// All four student roles; the first is the regression reference.
    pub fn roles(self) -> [Role; 4] {
        [
            Role::new(self, false, PairKind::Mixed),
            Role::new(self, true, PairKind::Mixed),
            Role::new(self, true, PairKind::BothFocal),
            Role::new(self, false, PairKind::BothOther),
        ]
    }

    /// The other-group student in a mixed pair (male, non-Black, non-EL).
    pub fn reference_role(self) -> Role {
        Role::new(self, false, PairKind::Mixed)
    }

    pub fn cells(self) -> [StudyCell; 4] {
        StudyCell::ALL
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Mixed,
    BothFocal,
    BothOther,
}

impl PairKind {
    pub fn of(focal_a: bool, focal_b: bool) -> PairKind {
        match (focal_a, focal_b) {
            (true, true) => PairKind::BothFocal,
            (false, false) => PairKind::BothOther,
            _ => PairKind::Mixed,
        }
    }
}

/// A student's position on one axis: own group plus pair composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Role {
    pub axis: Axis,
    pub focal: bool,
    pub kind: PairKind,
}

impl Role {
    pub fn new(axis: Axis, focal: bool, kind: PairKind) -> Role {
        Role { axis, focal, kind }
    }

    /// e.g. `female_in_mixed`, `non_el_in_nonel_nonel`.
    pub fn name(&self) -> String {
        format!(
            "{}_in_{}",
            self.axis.group_name(self.focal),
            self.axis.pair_name(self.kind)
        )
    }
}

/// Pair cells compared in the lower-vs-higher interaction analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyCell {
    /// Mixed pair whose lower-achieving student is in the focal group.
    MixedLowerFocal,
    MixedLowerOther,
    BothFocal,
    BothOther,
}

impl StudyCell {
    pub const ALL: [StudyCell; 4] = [
        StudyCell::MixedLowerFocal,
        StudyCell::MixedLowerOther,
        StudyCell::BothFocal,
        StudyCell::BothOther,
    ];

    pub fn name(self, axis: Axis) -> String {
        match self {
            StudyCell::MixedLowerFocal => format!("mixed_lower_{}", axis.group_name(true)),
            StudyCell::MixedLowerOther => format!("mixed_lower_{}", axis.group_name(false)),
            StudyCell::BothFocal => axis.pair_name(PairKind::BothFocal).to_string(),
            StudyCell::BothOther => axis.pair_name(PairKind::BothOther).to_string(),
        }
    }

    /// Cell of a pair given each member's focal flag and who is lower.
    pub fn classify(focal_lower: bool, focal_higher: bool) -> StudyCell {
        match (focal_lower, focal_higher) {
            (true, true) => StudyCell::BothFocal,
            (false, false) => StudyCell::BothOther,
            (true, false) => StudyCell::MixedLowerFocal,
            (false, true) => StudyCell::MixedLowerOther,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelativeAchievement {
    Lower,
    Higher,
    Tie,
}

/// Demographic pairing on every axis plus relative achievement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairComposition {
    pub gender_pair: PairKind,
    pub race_pair: PairKind,
    pub el_pair: PairKind,
    pub relative_a: RelativeAchievement,
    pub relative_b: RelativeAchievement,
    focal_a: [bool; 3],
    focal_b: [bool; 3],
}

fn axis_index(axis: Axis) -> usize {
    match axis {
        Axis::Gender => 0,
        Axis::Race => 1,
        Axis::El => 2,
    }
}

impl PairComposition {
    /// Requires standardized baselines on both students.
    pub fn from_students(a: &StudentRecord, b: &StudentRecord) -> Result<PairComposition> {
        let za = a.baseline_z.ok_or_else(|| {
            Error::InvalidInput(format!("student {} has no standardized baseline", a.student_id))
        })?;
        let zb = b.baseline_z.ok_or_else(|| {
            Error::InvalidInput(format!("student {} has no standardized baseline", b.student_id))
        })?;
        let (relative_a, relative_b) = if za < zb {
            (RelativeAchievement::Lower, RelativeAchievement::Higher)
        } else if za > zb {
            (RelativeAchievement::Higher, RelativeAchievement::Lower)
        } else {
            (RelativeAchievement::Tie, RelativeAchievement::Tie)
        };
        let focal_a = AXES.map(|axis| axis.is_focal(a));
        let focal_b = AXES.map(|axis| axis.is_focal(b));
        Ok(PairComposition {
            gender_pair: PairKind::of(focal_a[0], focal_b[0]),
            race_pair: PairKind::of(focal_a[1], focal_b[1]),
            el_pair: PairKind::of(focal_a[2], focal_b[2]),
            relative_a,
            relative_b,
            focal_a,
            focal_b,
        })
    }

    pub fn kind(&self, axis: Axis) -> PairKind {
        match axis {
            Axis::Gender => self.gender_pair,
            Axis::Race => self.race_pair,
            Axis::El => self.el_pair,
        }
    }

    pub fn is_focal(&self, axis: Axis, slot: Slot) -> bool {
        match slot {
            Slot::A => self.focal_a[axis_index(axis)],
            Slot::B => self.focal_b[axis_index(axis)],
        }
    }

    pub fn role(&self, axis: Axis, slot: Slot) -> Role {
        Role::new(axis, self.is_focal(axis, slot), self.kind(axis))
    }

    pub fn relative(&self, slot: Slot) -> RelativeAchievement {
        match slot {
            Slot::A => self.relative_a,
            Slot::B => self.relative_b,
        }
    }

    pub fn is_tie(&self) -> bool {
        self.relative_a == RelativeAchievement::Tie
    }

    /// Slot of the lower-achieving student; `None` for ties.
    pub fn lower_slot(&self) -> Option<Slot> {
        match self.relative_a {
            RelativeAchievement::Lower => Some(Slot::A),
            RelativeAchievement::Higher => Some(Slot::B),
            RelativeAchievement::Tie => None,
        }
    }

    pub fn cell(&self, axis: Axis) -> Option<StudyCell> {
        let lower = self.lower_slot()?;
        Some(StudyCell::classify(
            self.is_focal(axis, lower),
            self.is_focal(axis, lower.other()),
        ))
    }

    /// Same composition seen with the A and B slots exchanged.
    pub fn swapped(&self) -> PairComposition {
        PairComposition {
            relative_a: self.relative_b,
            relative_b: self.relative_a,
            focal_a: self.focal_b,
            focal_b: self.focal_a,
            ..*self
        }
    }
}
