use serde::{Deserialize, Serialize};

use crate::text::{split_sentences, word_count};

pub const DEFAULT_MAX_INSTRUCTION_WORDS: usize = 40;

/// One step of a task, split into a short instruction plus optional
/// details and tips.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub index: usize,
    pub text: String,
    pub instruction: String,
    pub details: Option<String>,
    pub tips: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepParts {
    pub instruction: String,
    pub details: Option<String>,
    pub tips: Option<String>,
}

impl Step {
    pub fn new(index: usize, raw: &str, max_words: usize) -> Self {
        let parts = decompose_step(raw, max_words);
        Self {
            index,
            text: raw.trim().to_string(),
            instruction: parts.instruction,
            details: parts.details,
            tips: parts.tips,
        }
    }

    pub fn has_details(&self) -> bool {
        self.details.is_some()
    }

    pub fn has_tips(&self) -> bool {
        self.tips.is_some()
    }
}

fn is_tip(sentence: &str) -> bool {
    let lower = sentence.trim_start().to_lowercase();
    lower.starts_with("tip:") || lower.starts_with("note:")
}

fn join(parts: &[&str]) -> Option<String> {
    (!parts.is_empty()).then(|| parts.join(" "))
}

/// Splits raw step text into an instruction (leading sentences up to
/// `max_words`, at least one), tip/note sentences, and the remaining details.
pub fn decompose_step(raw_text: &str, max_words: usize) -> StepParts {
    let sentences = split_sentences(raw_text);
    let (mut tips, body): (Vec<&str>, Vec<&str>) = sentences.iter().partition(|s| is_tip(s));

    if body.is_empty() {
        // only markers: promote the first one so the instruction is non-empty
        let first = if tips.is_empty() { raw_text.trim() } else { tips.remove(0) };
        return StepParts {
            instruction: first.to_string(),
            details: None,
            tips: join(&tips),
        };
    }

    let mut taken = 1;
    let mut words = word_count(body[0]);
    while taken < body.len() {
        let next = word_count(body[taken]);
        if words + next > max_words {
            break;
        }
        words += next;
        taken += 1;
    }

    StepParts {
        instruction: body[..taken].join(" "),
        details: join(&body[taken..]),
        tips: join(&tips),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentences_of(parts: &StepParts) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in [Some(&parts.instruction), parts.details.as_ref(), parts.tips.as_ref()]
            .into_iter()
            .flatten()
        {
            out.extend(split_sentences(p).into_iter().map(str::to_string));
        }
        out
    }

    #[test]
    fn single_short_sentence() {
        let p = decompose_step("Preheat oven to 350F.", 40);
        assert_eq!(p.instruction, "Preheat oven to 350F.");
        assert_eq!(p.details, None);
        assert_eq!(p.tips, None);
    }

    #[test]
    fn tip_marker_goes_to_tips() {
        let p = decompose_step(
            "Line a tray. Spread the dough evenly. Tip: use parchment.",
            40,
        );
        assert_eq!(p.instruction, "Line a tray. Spread the dough evenly.");
        assert_eq!(p.details, None);
        assert_eq!(p.tips.as_deref(), Some("Tip: use parchment."));
        let p = decompose_step("Stir. NOTE: it will be thick. Rest it.", 40);
        assert_eq!(p.tips.as_deref(), Some("NOTE: it will be thick."));
        assert_eq!(p.instruction, "Stir. Rest it.");
    }

    #[test]
    fn only_markers_promotes_first() {
        let p = decompose_step("Tip: be gentle. Note: it is hot.", 40);
        assert_eq!(p.instruction, "Tip: be gentle.");
        assert_eq!(p.tips.as_deref(), Some("Note: it is hot."));
    }

    /// 5 sentences, 120 words; the expected split comes from a brute-force
    /// scan over sentence prefixes.
    #[test]
    fn long_step_prefix_scan() {
        let s1 = "Place the chicken pieces in a large heavy pot and cover them completely with cold water by about two inches."; // 20
        let s2 = "Bring the pot slowly to a gentle boil over medium heat and skim off any foam that rises to the surface."; // 21
        let s3 = "Lower the heat until the surface barely trembles and let the stock cook uncovered for at least three hours while you prepare everything else."; // 24
        let s4 = "Strain the finished stock through a fine sieve lined with cheesecloth into a clean bowl and discard the bones and the spent vegetables completely."; // 24
        let s5 = "Cool the stock quickly in an ice bath, then refrigerate it overnight so that the fat hardens on top and can be lifted away with a large spoon in the morning."; // 31
        let raw = [s1, s2, s3, s4, s5].join(" ");
        let counts: Vec<usize> = [s1, s2, s3, s4, s5].iter().map(|s| word_count(s)).collect();
        assert_eq!(counts.iter().sum::<usize>(), 120);

        // brute-force oracle: longest prefix with cumulative count <= 40, min 1
        let mut k = 1;
        while k < counts.len() && counts[..=k].iter().sum::<usize>() <= 40 {
            k += 1;
        }
        assert_eq!(k, 1, "20 + 21 > 40");

        let p = decompose_step(&raw, 40);
        assert_eq!(p.instruction, s1);
        assert_eq!(p.details.as_deref(), Some([s2, s3, s4, s5].join(" ").as_str()));
        assert!(word_count(&p.instruction) <= 40);

        let p = decompose_step(&raw, 45);
        assert_eq!(p.instruction, [s1, s2].join(" "));
    }

    #[test]
    fn first_sentence_longer_than_limit_still_taken() {
        let p = decompose_step("One two three four five. Six.", 3);
        assert_eq!(p.instruction, "One two three four five.");
        assert_eq!(p.details.as_deref(), Some("Six."));
    }

    #[test]
    fn parts_preserve_sentences() {
        let raw = "Cut the butter. Tip: keep it cold. Rub it into the flour until sandy. Add water. Note: go slowly.";
        let p = decompose_step(raw, 6);
        let mut got = sentences_of(&p);
        let mut want: Vec<String> = split_sentences(raw).into_iter().map(str::to_string).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }
}
