//! Keyword blacklist shared by search filtering and response safety.

use crate::text::tokenize;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blacklist {
    entries: Vec<Vec<String>>,
}

impl Blacklist {
    pub fn new<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Self {
        let mut entries: Vec<Vec<String>> = words
            .into_iter()
            .map(|w| tokenize(w.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        entries.sort();
        entries.dedup();
        Self { entries }
    }

    /// One entry per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First blacklisted entry found as whole words in `text`. A word
    /// also matches with a trailing `s` or `es`.
    pub fn find(&self, text: &str) -> Option<String> {
        if self.entries.is_empty() {
            return None;
        }
        let tokens = tokenize(text);
        self.entries
            .iter()
            .find(|e| {
                e.len() <= tokens.len()
                    && tokens
                        .windows(e.len())
                        .any(|w| w.iter().zip(e.iter()).all(|(t, x)| word_matches(t, x)))
            })
            .map(|e| e.join(" "))
    }

    pub fn matches(&self, text: &str) -> bool {
        self.find(text).is_some()
    }
}

fn word_matches(token: &str, entry: &str) -> bool {
    token == entry
        || token
            .strip_prefix(entry)
            .is_some_and(|rest| rest == "s" || rest == "es")
}
