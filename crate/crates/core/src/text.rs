//! Text utilities shared by every stage: tokenization, stopwords, sentence
//! splitting, lemmatization and whole-word phrase matching.

use std::collections::HashMap;

/// Closed-class words plus request scaffolding ("find", "recipe", ...) that
/// carries no topical signal for retrieval.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "don't", "down", "during", "each",
    "few", "find", "for", "from", "further", "get", "give", "had", "has", "have", "having",
    "he", "help", "her", "here", "hers", "him", "his", "how", "i", "i'd", "i'll", "i'm",
    "i've", "if", "in", "into", "is", "it", "it's", "its", "just", "learn", "let", "let's",
    "lets", "like", "look", "me", "more", "most", "my", "need", "no", "nor", "not", "now", "of",
    "off", "on", "once", "one", "only", "or", "other", "our", "out", "over", "own", "please",
    "recipe", "recipes", "same", "search", "she", "should", "show", "so", "some", "something",
    "such", "teach", "tell", "than", "that", "the", "their", "them", "then", "there", "these",
    "they", "this", "those", "through", "to", "too", "under", "until", "up", "us", "very",
    "want", "was", "way", "we", "were", "what", "when", "where", "which", "while", "who",
    "whom", "why", "will", "with", "would", "you", "your",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercased alphanumeric tokens; inner apostrophes are kept ("don't").
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' || ch == '\u{2019}' {
            let ch = if ch == '\u{2019}' { '\'' } else { ch };
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            push_token(&mut out, &mut cur);
        }
    }
    if !cur.is_empty() {
        push_token(&mut out, &mut cur);
    }
    out
}

fn push_token(out: &mut Vec<String>, cur: &mut String) {
    let t = cur.trim_matches('\'');
    if !t.is_empty() {
        out.push(t.to_string());
    }
    cur.clear();
}

/// Tokens with stopwords removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .collect()
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

const ABBREVIATIONS: &[&str] = &["e.g.", "i.e.", "mr.", "dr.", "oz.", "tsp.", "tbsp."];

/// Splits on `.`, `!` or `?` followed by whitespace and then an uppercase
/// letter or end of text. Known abbreviations never end a sentence.
/// Returned slices are trimmed substrings of `text`.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0usize;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        if matches!(ch, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            let had_space = j > i + 1;
            let boundary = if j >= chars.len() {
                true
            } else {
                had_space && chars[j].1.is_uppercase()
            };
            if boundary && !(ch == '.' && ends_with_abbreviation(&text[start..=pos])) {
                let end = pos + ch.len_utf8();
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = if j < chars.len() { chars[j].0 } else { text.len() };
                i = j;
                continue;
            }
        }
        i += 1;
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest);
    }
    out
}

fn ends_with_abbreviation(segment: &str) -> bool {
    let last = segment
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .to_lowercase();
    ABBREVIATIONS.contains(&last.as_str())
}

/// Suffix-stripping lemmatizer with an exception table.
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Lemmatizer {
    pub fn new(exceptions: HashMap<String, String>) -> Self {
        Self { exceptions }
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(json)?))
    }

    /// Base form of `token`; returns the token itself when no rule applies.
    pub fn lemma(&self, token: &str) -> String {
        if let Some(base) = self.exceptions.get(token) {
            return base.clone();
        }
        let n = token.chars().count();
        if !token.is_ascii() || n <= 3 {
            return token.to_string();
        }
        if let Some(stem) = token.strip_suffix("ies") {
            if n > 4 {
                return format!("{stem}y");
            }
        }
        if let Some(stem) = token.strip_suffix("oes") {
            return format!("{stem}o");
        }
        for suf in ["sses", "shes", "ches", "xes", "zes"] {
            if token.ends_with(suf) {
                return token[..token.len() - 2].to_string();
            }
        }
        if token.ends_with('s')
            && !token.ends_with("ss")
            && !token.ends_with("us")
            && !token.ends_with("is")
        {
            return token[..token.len() - 1].to_string();
        }
        if let Some(stem) = token.strip_suffix("ing") {
            if stem.len() >= 3 && stem.chars().any(is_vowel) {
                return undouble(stem);
            }
        }
        if let Some(stem) = token.strip_suffix("ed") {
            if stem.len() >= 3 && stem.chars().any(is_vowel) {
                return undouble(stem);
            }
        }
        token.to_string()
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn undouble(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !matches!(b[n - 1], b'l' | b's' | b'z') && !is_vowel(b[n - 1] as char) {
        stem[..n - 1].to_string()
    } else {
        stem.to_string()
    }
}

/// Finds `phrase` (already tokenized) as a contiguous run in `tokens`,
/// returning the start index of the first occurrence.
/// Joins items as "a, b and c".
pub fn sentence_join<S: AsRef<str>>(items: &[S]) -> String {
    match items {
        [] => String::new(),
        [one] => one.as_ref().to_string(),
        [init @ .., last] => {
            let head: Vec<&str> = init.iter().map(AsRef::as_ref).collect();
            format!("{} and {}", head.join(", "), last.as_ref())
        }
    }
}

pub fn find_phrase(tokens: &[String], phrase: &[String]) -> Option<usize> {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return None;
    }
    tokens
        .windows(phrase.len())
        .position(|w| w.iter().zip(phrase).all(|(a, b)| a == b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn join_lists() {
        let none: [&str; 0] = [];
        assert_eq!(sentence_join(&none), "");
        assert_eq!(sentence_join(&["a"]), "a");
        assert_eq!(sentence_join(&["a", "b"]), "a and b");
        assert_eq!(sentence_join(&["a", "b", "c"]), "a, b and c");
    }

    #[test]
    fn stopwords_sorted_for_binary_search() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn tokenize_keeps_inner_apostrophes() {
        assert_eq!(tokenize("Don't  STOP, now!"), vec!["don't", "stop", "now"]);
        assert_eq!(tokenize("painter's tape"), vec!["painter's", "tape"]);
        assert!(tokenize("  ... ").is_empty());
    }

    #[test]
    fn sentences_split_on_terminal_punctuation() {
        let s = split_sentences("Preheat oven to 350F. Mix well! Done? Yes.");
        assert_eq!(s, vec!["Preheat oven to 350F.", "Mix well!", "Done?", "Yes."]);
    }

    #[test]
    fn sentences_respect_abbreviations_and_lowercase() {
        let s = split_sentences("Add 2 tbsp. Butter and stir. Use 1 oz. Cheese.");
        assert_eq!(s, vec!["Add 2 tbsp. Butter and stir.", "Use 1 oz. Cheese."]);
        let s = split_sentences("Bake 10 min. then cool. Serve.");
        assert_eq!(s, vec!["Bake 10 min. then cool.", "Serve."]);
        let s = split_sentences("Use spices, e.g. Cumin. Stir.");
        assert_eq!(s, vec!["Use spices, e.g. Cumin.", "Stir."]);
    }

    #[test]
    fn sentence_without_terminal_punctuation() {
        assert_eq!(split_sentences("Season to taste"), vec!["Season to taste"]);
        assert_eq!(split_sentences("Mix. season to taste"), vec!["Mix. season to taste"]);
    }

    #[test]
    fn lemma_rules() {
        let lem = Lemmatizer::new(
            [("making", "make"), ("cookies", "cookie")]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        );
        assert_eq!(lem.lemma("making"), "make");
        assert_eq!(lem.lemma("cookies"), "cookie");
        assert_eq!(lem.lemma("cleaning"), "clean");
        assert_eq!(lem.lemma("sneakers"), "sneaker");
        assert_eq!(lem.lemma("berries"), "berry");
        assert_eq!(lem.lemma("tomatoes"), "tomato");
        assert_eq!(lem.lemma("dishes"), "dish");
        assert_eq!(lem.lemma("running"), "run");
        assert_eq!(lem.lemma("roasted"), "roast");
        assert_eq!(lem.lemma("glass"), "glass");
        assert_eq!(lem.lemma("hummus"), "hummus");
        assert_eq!(lem.lemma("pasta"), "pasta");
        assert_eq!(lem.lemma("egg"), "egg");
        assert_eq!(lem.lemma("eggs"), "egg");
    }

    #[test]
    fn phrase_search() {
        let toks = tokenize("yes next step please");
        assert_eq!(find_phrase(&toks, &tokenize("next step")), Some(1));
        assert_eq!(find_phrase(&toks, &tokenize("step next")), None);
    }
}
