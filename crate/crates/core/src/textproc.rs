//! Tokenization, sentence segmentation and vocabulary construction.
//!
//! Every function here is a pure function of its input. The rules are
//! deliberately small and frozen, because mutation labels and padding limits
//! are computed from their output.
//!
//! Tokenization works one whitespace-delimited chunk at a time:
//!
//! * runs of alphanumeric characters form a token;
//! * an apostrophe or hyphen between two alphanumerics stays inside the token
//!   (`don't`, `state-of-the-art`), as does a `.` or `,` between two digits
//!   (`3.5`, `1,000`);
//! * every other non-space character is a token by itself.
//!
//! Case is preserved. Sentence boundaries only ever fall on whitespace, so
//! tokenizing each sentence and concatenating the results gives exactly the
//! tokens of the whole text.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

/// An ordered list of word tokens taken from one document or summary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub source_id: String,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>, source_id: impl Into<String>) -> Self {
        Self {
            tokens,
            source_id: source_id.into(),
        }
    }

    pub fn from_text(text: &str, source_id: impl Into<String>) -> Self {
        Self::new(tokenize(text), source_id)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces. Re-tokenizing the result gives back
    /// the same tokens.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

fn joins_inside(c: char, prev: char, next: char) -> bool {
    match c {
        '\'' | '’' | '-' => prev.is_alphanumeric() && next.is_alphanumeric(),
        '.' | ',' => prev.is_ascii_digit() && next.is_ascii_digit(),
        _ => false,
    }
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        let prev = if i > 0 { chars[i - 1] } else { ' ' };
        let next = chars.get(i + 1).copied().unwrap_or(' ');
        if !word.is_empty() && joins_inside(c, prev, next) {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        out.push(c.to_string());
    }
    if !word.is_empty() {
        out.push(word);
    }
}

/// Splits `text` into word and punctuation tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, &mut out);
    }
    out
}

/// Abbreviations that end in a period without ending a sentence.
///
/// Entries are lowercase and include their trailing period (`"dr."`).
#[derive(Debug, Clone)]
pub struct Abbreviations {
    entries: HashSet<String>,
}

impl Abbreviations {
    /// Parses the plain-text list format: one abbreviation per line. Blank
    /// lines and lines starting with `#` are skipped.
    pub fn parse(list: &str) -> Self {
        let entries = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut e = l.to_lowercase();
                if !e.ends_with('.') {
                    e.push('.');
                }
                e
            })
            .collect();
        Self { entries }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let list = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&list))
    }

    /// The list shipped with the crate.
    pub fn builtin() -> &'static Abbreviations {
        static BUILTIN: OnceLock<Abbreviations> = OnceLock::new();
        BUILTIN.get_or_init(|| Abbreviations::parse(DEFAULT_ABBREVIATIONS))
    }

    pub fn contains(&self, word_with_period: &str) -> bool {
        self.entries.contains(&word_with_period.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '”' | '’' | '»')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '{' | '“' | '‘' | '«')
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// `u.s.`, `e.g.`: two or more single letters each followed by a period.
fn is_initialism(core: &str) -> bool {
    let chars: Vec<char> = core.chars().collect();
    chars.len() >= 4
        && chars.len().is_multiple_of(2)
        && chars
            .chunks(2)
            .all(|p| p[0].is_alphabetic() && p[1] == '.')
}

fn starts_lowercase(chunk: &str) -> bool {
    chunk
        .chars()
        .find(|c| c.is_alphanumeric())
        .is_some_and(|c| c.is_lowercase())
}

fn chunk_ends_sentence(chunk: &str, next: Option<&str>, abbrevs: &Abbreviations) -> bool {
    let core = chunk.trim_end_matches(is_closer);
    let Some(last) = core.chars().last() else {
        return false;
    };
    if !is_terminal(last) {
        return false;
    }
    if last == '.' {
        let word = core.trim_start_matches(is_opener);
        if abbrevs.contains(word) || is_initialism(&word.to_lowercase()) {
            return false;
        }
    }
    !next.is_some_and(starts_lowercase)
}

/// Rule-based sentence segmentation with the built-in abbreviation list.
pub fn split_sentences(text: &str) -> Vec<String> {
    split_sentences_with(text, Abbreviations::builtin())
}

/// Splits after chunks ending in `.`, `!` or `?` (optionally followed by
/// closing quotes or brackets), unless the chunk is a known abbreviation or an
/// initialism, or the following chunk starts in lowercase.
pub fn split_sentences_with(text: &str, abbrevs: &Abbreviations) -> Vec<String> {
    let chunks: Vec<(usize, &str)> = text
        .split_whitespace()
        .map(|c| (c.as_ptr() as usize - text.as_ptr() as usize, c))
        .collect();
    let mut sentences = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &(offset, chunk)) in chunks.iter().enumerate() {
        let begin = *start.get_or_insert(offset);
        let next = chunks.get(i + 1).map(|&(_, c)| c);
        if next.is_none() || chunk_ends_sentence(chunk, next, abbrevs) {
            sentences.push(text[begin..offset + chunk.len()].to_string());
            start = None;
        }
    }
    sentences
}

fn is_single_letter(token: &str) -> bool {
    let mut chars = token.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic())
}

/// Sentence segmentation over an already tokenized sequence, for summaries
/// that only exist as tokens (for example after mutation). Mirrors the text
/// rules: a `.`, `!` or `?` token (plus trailing closer tokens) ends a
/// sentence unless it completes an abbreviation or initialism, or the next
/// token starts in lowercase.
pub fn split_token_sentences(tokens: &[String]) -> Vec<Vec<String>> {
    split_token_sentences_with(tokens, Abbreviations::builtin())
}

pub fn split_token_sentences_with(tokens: &[String], abbrevs: &Abbreviations) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        current.push(tok.clone());
        let terminal = matches!(tok.as_str(), "." | "!" | "?");
        if terminal && !(tok == "." && period_is_internal(tokens, i, abbrevs)) {
            while i + 1 < tokens.len() && closes(&tokens[i + 1], &current) {
                i += 1;
                current.push(tokens[i].clone());
            }
            let next_lower = tokens.get(i + 1).is_some_and(|t| starts_lowercase(t));
            if !next_lower {
                sentences.push(std::mem::take(&mut current));
            }
        }
        i += 1;
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

/// Straight quotes both open and close; one closes the sentence only while
/// an earlier one in the same sentence is still unmatched.
fn closes(token: &str, sentence: &[String]) -> bool {
    if !token.chars().all(is_closer) {
        return false;
    }
    match token {
        "\"" | "'" => sentence.iter().filter(|t| *t == token).count() % 2 == 1,
        _ => true,
    }
}

fn period_is_internal(tokens: &[String], i: usize, abbrevs: &Abbreviations) -> bool {
    let Some(prev) = i.checked_sub(1).map(|p| tokens[p].as_str()) else {
        return false;
    };
    if abbrevs.contains(&format!("{prev}.")) {
        return true;
    }
    if !is_single_letter(prev) {
        return false;
    }
    // U . S . : a single letter whose period is preceded or followed by another
    // single-letter-period pair.
    let before = i >= 2 && tokens[i - 2] == ".";
    let after = tokens.get(i + 1).is_some_and(|t| is_single_letter(t))
        && tokens.get(i + 2).is_some_and(|t| t == ".");
    before || after
}

/// Token occurrence counts over a set of texts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    counts: BTreeMap<String, u64>,
    sorted: Vec<String>,
}

impl Vocabulary {
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Self {
        let counts: BTreeMap<String, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let sorted = counts.keys().cloned().collect();
        Self { counts, sorted }
    }

    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.to_string()).or_insert(0) += 1;
        }
        Self::from_counts(counts)
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.counts.contains_key(token)
    }

    /// Distinct tokens in lexicographic order.
    pub fn tokens(&self) -> &[String] {
        &self.sorted
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

/// Counts the tokens of every document and reference summary whose document
/// is in `doc_ids` (all documents when `None`). Pass the training split so
/// that held-out text never reaches the mutation samplers.
pub fn build_vocabulary(corpus: &Corpus, doc_ids: Option<&[String]>) -> Result<Vocabulary> {
    let selected: Option<HashSet<&str>> = doc_ids.map(|ids| ids.iter().map(String::as_str).collect());
    let keep = |id: &str| selected.as_ref().is_none_or(|s| s.contains(id));
    let mut counts = BTreeMap::new();
    let mut texts = 0usize;
    let mut add = |text: &str| {
        for t in tokenize(text) {
            *counts.entry(t).or_insert(0u64) += 1;
        }
    };
    for doc in corpus.documents().iter().filter(|d| keep(&d.doc_id)) {
        add(&doc.text);
        texts += 1;
    }
    for s in corpus.reference_summaries().filter(|s| keep(&s.doc_id)) {
        add(&s.text);
        texts += 1;
    }
    if texts == 0 {
        return Err(Error::InsufficientData(
            "no documents selected for the vocabulary".into(),
        ));
    }
    Ok(Vocabulary::from_counts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn whitespace_words() {
        assert_eq!(tokenize("I am happy"), toks(&["I", "am", "happy"]));
        assert_eq!(tokenize("I am not happy"), toks(&["I", "am", "not", "happy"]));
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t ").is_empty());
    }

    #[test]
    fn punctuation_is_separated() {
        assert_eq!(
            tokenize("Hello, world! (It's 3.5 km.)"),
            toks(&["Hello", ",", "world", "!", "(", "It's", "3.5", "km", ".", ")"])
        );
        assert_eq!(tokenize("U.S."), toks(&["U", ".", "S", "."]));
        assert_eq!(tokenize("state-of-the-art"), toks(&["state-of-the-art"]));
        assert_eq!(tokenize("--x"), toks(&["-", "-", "x"]));
    }

    #[test]
    fn retokenizing_joined_tokens_is_stable() {
        let t = TokenSequence::from_text("Don't stop: 1,000 U.S. firms (e.g. Acme) grew.", "x");
        assert_eq!(tokenize(&t.joined()), t.tokens);
    }

    #[test]
    fn sentence_basics() {
        assert_eq!(split_sentences("A. B."), vec!["A.", "B."]);
        assert_eq!(split_sentences("One sentence"), vec!["One sentence"]);
        assert_eq!(split_sentences("U.S. grew."), vec!["U.S. grew."]);
        assert!(split_sentences("").is_empty());
        assert_eq!(
            split_sentences("He said \"stop.\" Then left!  Why?"),
            vec!["He said \"stop.\"", "Then left!", "Why?"]
        );
        assert_eq!(
            split_sentences("Dr. Smith arrived. He sat."),
            vec!["Dr. Smith arrived.", "He sat."]
        );
    }

    #[test]
    fn custom_abbreviation_list() {
        let ab = Abbreviations::parse("# comment\nfoo\nBAR.\n");
        assert_eq!(ab.len(), 2);
        assert!(ab.contains("Foo."));
        assert_eq!(split_sentences_with("See foo. Bar.", &ab), vec!["See foo. Bar."]);
    }

    #[test]
    fn token_sentences_mirror_text_rules() {
        let t = tokenize("The U.S. grew. Dr. Who left! Fine.");
        let s = split_token_sentences(&t);
        assert_eq!(s.len(), 3);
        assert_eq!(s[0], toks(&["The", "U", ".", "S", ".", "grew", "."]));
        assert_eq!(s[2], toks(&["Fine", "."]));
        assert!(split_token_sentences(&[]).is_empty());
        assert_eq!(split_token_sentences(&toks(&["no", "end"])), vec![toks(&["no", "end"])]);
    }

    #[test]
    fn vocabulary_counts() {
        let v = Vocabulary::from_tokens(tokenize("a b a").iter().map(String::as_str));
        assert_eq!(v.count("a"), 2);
        assert_eq!(v.count("b"), 1);
        assert_eq!(v.tokens(), &toks(&["a", "b"])[..]);
        assert_eq!(v.count("zz"), 0);
    }
}
