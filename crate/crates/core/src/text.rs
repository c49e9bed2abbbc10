//! Normalization and tokenization shared by every stage.
//!
//! Normalization lowercases and collapses runs of whitespace into single
//! spaces. Tokenization additionally splits every character that is neither
//! alphanumeric nor whitespace into its own token, so `"in?"` becomes
//! `["in", "?"]`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Placeholder that stands in for the mention inside a pattern.
pub const MENTION_PLACEHOLDER: &str = "<m>";

pub fn normalize(s: &str) -> String {
    let lower = s.to_lowercase();
    let mut out = String::with_capacity(lower.len());
    for word in lower.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in s.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            current.push(c);
            continue;
        }
        if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Words of a dotted relation path: `"book.written-work.author"` gives
/// `["book", "written", "work", "author"]`.
pub fn relation_words(relation: &str) -> Vec<String> {
    relation
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

pub(crate) fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}
