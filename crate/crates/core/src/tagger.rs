//! Mention/pattern split of a question.
//!
//! Two taggers are provided: an oracle that aligns the question with a
//! known gold subject, and a lexicon tagger that picks the longest question
//! span present in the n-gram index.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::index::NGramIndex;
use crate::text::{is_punctuation, join_tokens, tokenize, MENTION_PLACEHOLDER};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedQuestion {
    pub question: String,
    pub mention_tokens: Vec<String>,
    pub pattern_tokens: Vec<String>,
    /// Half-open token span `[start, end)` of the mention.
    pub span: (usize, usize),
}

impl TaggedQuestion {
    fn from_span(question: &str, tokens: &[String], start: usize, end: usize) -> Self {
        let mut pattern = Vec::with_capacity(tokens.len() - (end - start) + 1);
        pattern.extend_from_slice(&tokens[..start]);
        pattern.push(MENTION_PLACEHOLDER.to_string());
        pattern.extend_from_slice(&tokens[end..]);
        Self {
            question: question.to_string(),
            mention_tokens: tokens[start..end].to_vec(),
            pattern_tokens: pattern,
            span: (start, end),
        }
    }

    pub fn mention(&self) -> String {
        join_tokens(&self.mention_tokens)
    }

    /// Substitutes the mention back into the pattern.
    pub fn reconstruct(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.pattern_tokens {
            if t == MENTION_PLACEHOLDER {
                out.extend(self.mention_tokens.iter().cloned());
            } else {
                out.push(t.clone());
            }
        }
        out
    }
}

fn token_lcs(a: &[String], b: &[String]) -> usize {
    let mut prev = alloc::vec![0usize; b.len() + 1];
    let mut cur = prev.clone();
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Tags `question` against a known gold subject.
///
/// The chosen span maximizes the token-level common subsequence with the
/// gold subject; among equally matching spans the shortest wins, then the
/// earliest. A verbatim occurrence of the subject is therefore always
/// chosen when present.
pub fn oracle_tag(question: &str, gold_subject: &str) -> Result<TaggedQuestion> {
    let tokens = tokenize(question);
    let gold = tokenize(gold_subject);
    let mut best: Option<(usize, usize, usize)> = None;
    for start in 0..tokens.len() {
        if !gold.contains(&tokens[start]) {
            continue;
        }
        for end in start + 1..=tokens.len() {
            if !gold.contains(&tokens[end - 1]) {
                continue;
            }
            let score = token_lcs(&tokens[start..end], &gold);
            let better = match best {
                None => true,
                Some((s, e, b)) => score > b || (score == b && end - start < e - s),
            };
            if better {
                best = Some((start, end, score));
            }
        }
    }
    match best {
        Some((start, end, _)) => Ok(TaggedQuestion::from_span(question, &tokens, start, end)),
        None => Err(Error::Untaggable),
    }
}

/// Tags `question` using the index as a lexicon: the longest span whose
/// joined form has a posting, earliest first on ties.
///
/// When no span is indexed the mention falls back to the single token with
/// the highest inverse document frequency, preferring word tokens over
/// punctuation, then longer tokens, then earlier ones.
pub fn lexicon_tag(question: &str, index: &NGramIndex) -> Result<TaggedQuestion> {
    let tokens = tokenize(question);
    if tokens.is_empty() {
        return Err(Error::InvalidArgument("empty question".into()));
    }
    for len in (1..=index.max_n().min(tokens.len())).rev() {
        for start in 0..=tokens.len() - len {
            if index
                .posting(&join_tokens(&tokens[start..start + len]))
                .is_some()
            {
                return Ok(TaggedQuestion::from_span(
                    question,
                    &tokens,
                    start,
                    start + len,
                ));
            }
        }
    }
    let rank = |i: usize| {
        let t = &tokens[i];
        (!is_punctuation(t), index.idf(t), t.chars().count())
    };
    let mut best = 0;
    for i in 1..tokens.len() {
        let (a, b) = (rank(i), rank(best));
        let order = a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2));
        if order == core::cmp::Ordering::Greater {
            best = i;
        }
    }
    Ok(TaggedQuestion::from_span(question, &tokens, best, best + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::KnowledgeGraph;
    use alloc::vec;

    fn rufus_index(max_n: usize) -> NGramIndex {
        let kg = KnowledgeGraph::from_triples([
            (
                "Rufus Scrimgeour",
                "book.book-characters.appears-in-book",
                "Harry Potter and the Deathly Hallows",
            ),
            (
                "Rufus Wainwright",
                "music.singer.singer-of",
                "I Don't Know What That Is",
            ),
        ])
        .unwrap();
        NGramIndex::build(&kg, max_n).unwrap()
    }

    #[test]
    fn oracle_running_example() {
        let tq = oracle_tag(
            "Which Harry Potter series did Rufus Scrimgeour appear in?",
            "Rufus Scrimgeour",
        )
        .unwrap();
        assert_eq!(tq.mention_tokens, vec!["rufus", "scrimgeour"]);
        assert_eq!(
            tq.pattern_tokens,
            vec!["which", "harry", "potter", "series", "did", "<m>", "appear", "in", "?"]
        );
        assert_eq!(tq.reconstruct(), tokenize(&tq.question));
    }

    #[test]
    fn oracle_single_token_and_failure() {
        let tq = oracle_tag("name x", "x").unwrap();
        assert_eq!(tq.mention_tokens, vec!["x"]);
        assert_eq!(tq.pattern_tokens, vec!["name", "<m>"]);
        assert_eq!(oracle_tag("who wrote y ?", "z"), Err(Error::Untaggable));
    }

    #[test]
    fn oracle_prefers_earliest_verbatim_and_tight_spans() {
        let tq = oracle_tag("x y and x y", "x y").unwrap();
        assert_eq!(tq.span, (0, 2));
        let tq = oracle_tag("who is rufus the scrimgeour", "rufus scrimgeour").unwrap();
        assert_eq!(tq.mention_tokens, vec!["rufus", "the", "scrimgeour"]);
        let tq = oracle_tag("is scrimgeour a rufus", "rufus scrimgeour").unwrap();
        assert_eq!(tq.mention_tokens, vec!["scrimgeour"]);
    }

    #[test]
    fn lexicon_longest_span() {
        let q = "which harry potter series did rufus scrimgeour appear in";
        let tq = lexicon_tag(q, &rufus_index(2)).unwrap();
        assert_eq!(tq.mention_tokens, vec!["rufus", "scrimgeour"]);
    }

    #[test]
    fn lexicon_tie_takes_earliest() {
        let tq = lexicon_tag("scrimgeour or wainwright", &rufus_index(1)).unwrap();
        assert_eq!(tq.mention_tokens, vec!["scrimgeour"]);
    }

    #[test]
    fn lexicon_fallback_and_empty() {
        let tq = lexicon_tag("who is the zookeeper ?", &rufus_index(1)).unwrap();
        assert_eq!(tq.mention_tokens, vec!["zookeeper"]);
        assert!(lexicon_tag("  ", &rufus_index(1)).is_err());
    }
}
