use super::ClassifierContext;
use crate::{Error, Result};

pub const PRETEXT_TOKEN: &str = "[PRETEXT_TOKEN]";
pub const TARGET_TOKEN: &str = "[TARGET]";

const INSTRUCTIONS: &str = "Your task is to read the following conversation snippet and classify whom the tutor is talking to. The conversation comes from a K-2 early literacy tutoring session between a tutor and two students. These students have been de-identified as [Student A] and [Student B].

The possible labels are:
0: The tutor is addressing both students. e.g., \"Let's do it together, [Student A], [Student B] and me.\"
1: The tutor is addressing Student A. e.g., \"Okay, [Student A], it's your turn.\"
2. The tutor is addressing Student B. e.g., \"Good job, [Student B].\"
3. The tutor is addressing one of the students, but it is unclear which one. e.g., \"Let's wait for him.\"

Only output the label number. Do not output anything else.

";

const SHOT_STUDENT_B: &str = "Context: Don't do it, don't do it, don't do it, don't do it, don't do it. She can circle it, but this is, it's for [Student B] to circle. It's for [Student B] to circle. It's hers, because Gamela had a turn. We got to learn to take turns.
Text: You got it, you have it, [Student B].
Label (number): 2

";

const SHOT_BOTH: &str = "Context: Who is like this or how? [Student A] has hair. How does she have hair? [Student A] has hair. have, however, horses have We missed it too. We can't- it has to start with the letter H. I'm gonna put headphones. This is funny. Oh [Student B], why do I keep doing that? There you go.
Text: So that's- that's- that's the sentence.
Label (number): 0

";

const SHOT_STUDENT_A: &str = "Context: This just helps us kind of map out the sounds that we hear. Oh, your word is bonnet. I'm going to move them for you. No, your word is kitten, [Student B]. Are you missing any? Good job, [Student B]. OK. [Student A], I'm going to tell you your word one more time. Bonnet. So let's see where we can fix it.
Text: Because you put bonnet.
Label (number): 1

";

/// Zero-, one- or three-shot recipient prompt. The pretext is joined with
/// single spaces; the result ends with `Label (number):` and no newline.
pub fn build_prompt(ctx: &ClassifierContext, k: usize) -> Result<String> {
    let shots: &[&str] = match k {
        0 => &[],
        1 => &[SHOT_STUDENT_B],
        3 => &[SHOT_STUDENT_B, SHOT_BOTH, SHOT_STUDENT_A],
        other => {
            return Err(Error::InvalidInput(format!(
                "unsupported shot count {other}; expected 0, 1 or 3"
            )))
        }
    };
    let mut out = String::with_capacity(INSTRUCTIONS.len() + 1600);
    out.push_str(INSTRUCTIONS);
    for shot in shots {
        out.push_str(shot);
    }
    out.push_str("Context: ");
    out.push_str(&ctx.pretext.join(" "));
    out.push_str("\nText: ");
    out.push_str(&ctx.target);
    out.push_str("\nLabel (number):");
    Ok(out)
}

/// Sequence-classifier input: `[PRETEXT_TOKEN] {pretext} [TARGET] {target}`.
pub fn build_input(ctx: &ClassifierContext) -> String {
    format!(
        "{PRETEXT_TOKEN} {} {TARGET_TOKEN} {}",
        ctx.pretext.join(" "),
        ctx.target
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(pretext: &[&str], target: &str) -> ClassifierContext {
        ClassifierContext::new(pretext.iter().map(|s| s.to_string()).collect(), target)
    }

    #[test]
    fn zero_shot_shape() {
        let p = build_prompt(&ctx(&["Hi.", "Ready?"], "Go."), 0).unwrap();
        assert!(p.ends_with("Context: Hi. Ready?\nText: Go.\nLabel (number):"));
        for code in ["0: ", "1: ", "2. ", "3. "] {
            assert!(p.contains(&format!("\n{code}The tutor is addressing")));
        }
    }

    #[test]
    fn three_shot_has_bonnet_exemplar() {
        let p = build_prompt(&ctx(&[], "x"), 3).unwrap();
        assert!(p.contains("Text: Because you put bonnet.\nLabel (number): 1\n"));
    }

    #[test]
    fn empty_pretext() {
        let p = build_prompt(&ctx(&[], "Ball."), 0).unwrap();
        assert!(p.ends_with("Context: \nText: Ball.\nLabel (number):"));
    }

    #[test]
    fn unsupported_k() {
        assert!(build_prompt(&ctx(&[], "x"), 2).is_err());
    }

    #[test]
    fn k0_is_prefix_template_of_k1_and_k3() {
        let c = ctx(&["a", "b"], "c");
        let p0 = build_prompt(&c, 0).unwrap();
        let tail = p0.strip_prefix(INSTRUCTIONS).unwrap();
        for k in [1, 3] {
            let pk = build_prompt(&c, k).unwrap();
            assert!(pk.starts_with(INSTRUCTIONS));
            assert!(pk.ends_with(tail));
            assert!(pk.len() > p0.len());
        }
    }

    #[test]
    fn model_input() {
        assert_eq!(build_input(&ctx(&["a", "b"], "c")), "[PRETEXT_TOKEN] a b [TARGET] c");
        assert_eq!(build_input(&ctx(&[], "c")), "[PRETEXT_TOKEN]  [TARGET] c");
        let s = build_input(&ctx(&["x [TARGET] y"], "the target"));
        assert_eq!(s.rsplit_once("[TARGET] ").unwrap().1, "the target");
    }
}
