use serde::{Deserialize, Serialize};

use super::{ClassifierContext, NatureLabel, RecipientLabel};

pub const STUDENT_A: &str = "[Student A]";
pub const STUDENT_B: &str = "[Student B]";

fn names_in(text: &str) -> (bool, bool) {
    (text.contains(STUDENT_A), text.contains(STUDENT_B))
}

fn label_for(a: bool, b: bool) -> RecipientLabel {
    match (a, b) {
        (true, true) => RecipientLabel::Both,
        (true, false) => RecipientLabel::StudentA,
        (false, true) => RecipientLabel::StudentB,
        (false, false) => RecipientLabel::OneOfStudents,
    }
}

/// Recipient from the name placeholders present in the target alone.
pub fn classify_name_in_text(target: &str) -> RecipientLabel {
    let (a, b) = names_in(target);
    label_for(a, b)
}

/// Like [`classify_name_in_text`], falling back to names anywhere in the
/// pretext when the target names nobody.
pub fn classify_name_in_context(ctx: &ClassifierContext) -> RecipientLabel {
    let (a, b) = names_in(&ctx.target);
    if a || b {
        return label_for(a, b);
    }
    let (a, b) = ctx.pretext.iter().fold((false, false), |(a, b), line| {
        let (la, lb) = names_in(line);
        (a || la, b || lb)
    });
    label_for(a, b)
}

/// Keyword nature labeler for synthetic corpora. Management keywords win over
/// relationship keywords; anything else is content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NatureLexicon {
    pub management: Vec<String>,
    pub relationship: Vec<String>,
}

impl Default for NatureLexicon {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        NatureLexicon {
            management: owned(&[
                "mute",
                "headphones",
                "earphones",
                "screen",
                "camera",
                "can't see you",
                "can you hear",
                "sit down",
                "listening ears",
                "focus",
                "next page",
                "click",
            ]),
            relationship: owned(&[
                "awesome",
                "weekend",
                "birthday",
                "likes to",
                "proud of",
                "favorite",
                "how are you",
                "years old",
                "fun thing",
                "good morning",
            ]),
        }
    }
}

impl NatureLexicon {
    pub fn label(&self, text: &str) -> NatureLabel {
        let lower = text.to_lowercase();
        let hit = |words: &[String]| words.iter().any(|w| lower.contains(&w.to_lowercase()));
        if hit(&self.management) {
            NatureLabel::Management
        } else if hit(&self.relationship) {
            NatureLabel::Relationship
        } else {
            NatureLabel::Content
        }
    }
}
