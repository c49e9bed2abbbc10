//! Subgraph ranking by a blend of literal and semantic relevance.
//!
//! The literal term is the character LCS between subject and mention. The
//! semantic term is a log co-occurrence likelihood built from unit word
//! vectors, where each conditional `P(w | w')` is approximated by
//! `exp(w · w')`:
//!
//! ```text
//! log P(s, m) = Σ_i Σ_k s_i · m_k            (cross)
//!             + Σ_j m_{j+1} · m_j            (mention chain)
//!             + log freq(m_1)                (marginal)
//! score(s, m) = τ·lcs(s, m) + (1 − τ)·log P(s, m)
//! ```
//!
//! The chain and marginal terms depend on the mention only, so they shift
//! every candidate of a question by the same amount.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::embedding::EmbeddingTable;
use crate::error::{bail, Error, Result};
use crate::index::{NGramIndex, DEFAULT_CANDIDATE_CAP};
use crate::kb::{FactId, KnowledgeGraph};
use crate::lcs::lcs_length;
use crate::tagger::TaggedQuestion;
use crate::text::{join_tokens, normalize, tokenize};

pub const DEFAULT_TAU: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankerConfig {
    pub tau: f64,
    pub top_n: usize,
    pub candidate_cap: usize,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            top_n: 50,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            bail!(Config, "tau must lie in [0, 1], got {}", self.tau);
        }
        if self.top_n < 1 {
            bail!(Config, "top_n must be >= 1");
        }
        if self.candidate_cap < self.top_n {
            bail!(
                Config,
                "candidate_cap ({}) must be >= top_n ({})",
                self.candidate_cap,
                self.top_n
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedEntry {
    pub fact: FactId,
    pub literal: f64,
    pub semantic: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedSubgraph {
    pub question_id: usize,
    pub entries: Vec<RankedEntry>,
}

impl RankedSubgraph {
    /// Position (0-based) of the first entry whose fact has `subject`.
    pub fn rank_of_subject(&self, kg: &KnowledgeGraph, subject: &str) -> Option<usize> {
        let subject = normalize(subject);
        self.entries
            .iter()
            .position(|e| kg.fact(e.fact).is_some_and(|f| f.subject == subject))
    }
}

/// The three additive pieces of the semantic log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SemanticParts {
    pub cross: f64,
    pub mention_chain: f64,
    pub marginal: f64,
}

impl SemanticParts {
    pub fn total(&self) -> f64 {
        self.cross + self.mention_chain + self.marginal
    }
}

pub fn semantic_parts<S: AsRef<str>, M: AsRef<str>>(
    subject_tokens: &[S],
    mention_tokens: &[M],
    emb: &EmbeddingTable,
) -> SemanticParts {
    let cross = subject_tokens
        .iter()
        .flat_map(|s| {
            mention_tokens
                .iter()
                .map(move |m| emb.dot(s.as_ref(), m.as_ref()))
        })
        .sum();
    let mention_chain = mention_tokens
        .windows(2)
        .map(|w| emb.dot(w[1].as_ref(), w[0].as_ref()))
        .sum();
    let marginal = mention_tokens
        .first()
        .map_or(0.0, |m| emb.log_freq(m.as_ref()));
    SemanticParts {
        cross,
        mention_chain,
        marginal,
    }
}

/// `log P(s, m)`; out-of-vocabulary words contribute zero dot products and
/// the table's floor log-frequency.
pub fn semantic_log_prob<S: AsRef<str>, M: AsRef<str>>(
    subject_tokens: &[S],
    mention_tokens: &[M],
    emb: &EmbeddingTable,
) -> f64 {
    semantic_parts(subject_tokens, mention_tokens, emb).total()
}

fn blend(literal: f64, semantic: f64, tau: f64) -> f64 {
    tau * literal + (1.0 - tau) * semantic
}

pub fn combined_score(subject: &str, mention: &str, emb: &EmbeddingTable, tau: f64) -> f64 {
    let literal = lcs_length(subject, mention) as f64;
    let semantic = semantic_log_prob(&tokenize(subject), &tokenize(mention), emb);
    blend(literal, semantic, tau)
}

/// Orders entries by combined score, highest first, ties by fact id.
pub fn sort_entries(entries: &mut [RankedEntry]) {
    entries.sort_by(|a, b| b.combined.total_cmp(&a.combined).then(a.fact.cmp(&b.fact)));
}

/// Ranks `candidates` with a caller-supplied `(literal, semantic)` scorer
/// evaluated once per distinct subject, and keeps the best `top_n`.
pub fn rank_candidates<F>(
    question_id: usize,
    candidates: &[FactId],
    kg: &KnowledgeGraph,
    tau: f64,
    top_n: usize,
    mut score: F,
) -> RankedSubgraph
where
    F: FnMut(&str) -> (f64, f64),
{
    let mut cache: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let mut entries: Vec<RankedEntry> = candidates
        .iter()
        .filter_map(|&id| kg.fact(id))
        .map(|fact| {
            let (literal, semantic) = *cache
                .entry(fact.subject.as_str())
                .or_insert_with(|| score(&fact.subject));
            RankedEntry {
                fact: fact.id,
                literal,
                semantic,
                combined: blend(literal, semantic, tau),
            }
        })
        .collect();
    sort_entries(&mut entries);
    entries.truncate(top_n);
    RankedSubgraph {
        question_id,
        entries,
    }
}

pub fn rank_subgraph(
    question_id: usize,
    tq: &TaggedQuestion,
    kg: &KnowledgeGraph,
    index: &NGramIndex,
    emb: &EmbeddingTable,
    cfg: &RankerConfig,
) -> RankedSubgraph {
    let candidates = index.retrieve(&tq.mention_tokens, cfg.candidate_cap);
    let mention = join_tokens(&tq.mention_tokens);
    rank_candidates(
        question_id,
        &candidates,
        kg,
        cfg.tau,
        cfg.top_n,
        |subject| {
            let literal = lcs_length(subject, &mention) as f64;
            (
                literal,
                semantic_log_prob(&tokenize(subject), &tq.mention_tokens, emb),
            )
        },
    )
}

/// Fraction of questions whose top-`n` entries include a fact with the gold
/// subject.
pub fn topn_recall<S: AsRef<str>>(
    ranked: &[RankedSubgraph],
    gold_subjects: &[S],
    n: usize,
    kg: &KnowledgeGraph,
) -> Result<f64> {
    if ranked.len() != gold_subjects.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} ranked subgraphs but {} gold subjects",
            ranked.len(),
            gold_subjects.len()
        )));
    }
    if ranked.is_empty() {
        return Ok(0.0);
    }
    let hits = ranked
        .iter()
        .zip(gold_subjects)
        .filter(|(r, g)| r.rank_of_subject(kg, g.as_ref()).is_some_and(|pos| pos < n))
        .count();
    Ok(hits as f64 / ranked.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::oracle_tag;
    use alloc::vec;

    fn table_a(log_freq: f64) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2).unwrap();
        t.insert("a", &[1.0, 0.0]).unwrap();
        t.insert("b", &[0.0, 1.0]).unwrap();
        t.set_log_freq("a", log_freq).unwrap();
        t
    }

    #[test]
    fn semantic_examples() {
        let ln_half = libm::log(0.5);
        let t = table_a(ln_half);
        assert!((semantic_log_prob(&["a"], &["a"], &t) - (1.0 + ln_half)).abs() < 1e-12);
        assert!((semantic_log_prob(&["x"], &["a"], &t) - ln_half).abs() < 1e-12);
        // (a·a + a·b + b·a + b·b) + b·a + ln 0.5
        assert!((semantic_log_prob(&["a", "b"], &["a", "b"], &t) - (2.0 + ln_half)).abs() < 1e-12);
        assert!((1.0 + ln_half - 0.306_852_819_4).abs() < 1e-9);
    }

    #[test]
    fn combined_examples() {
        let ln_half = libm::log(0.5);
        let t = table_a(ln_half);
        let v = combined_score("a", "a", &t, 0.9);
        assert!((v - (0.9 + 0.1 * (1.0 + ln_half))).abs() < 1e-12);
        assert!((v - 0.930_685).abs() < 1e-6);
        assert_eq!(combined_score("rufus scrimgeour", "rufus", &t, 1.0), 5.0);
        assert_eq!(
            combined_score("a", "a", &t, 0.0),
            semantic_log_prob(&["a"], &["a"], &t)
        );
    }

    fn rufus() -> (KnowledgeGraph, NGramIndex) {
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
            ("Rufus Wainwright", "people.person.profession", "Singer"),
        ])
        .unwrap();
        let idx = NGramIndex::build(&kg, 1).unwrap();
        (kg, idx)
    }

    #[test]
    fn running_example_ranks_scrimgeour_first() {
        let (kg, idx) = rufus();
        let emb = EmbeddingTable::new(4).unwrap();
        let tq = oracle_tag(
            "which harry potter series did rufus scrimgeour appear in",
            "rufus scrimgeour",
        )
        .unwrap();
        let cfg = RankerConfig {
            tau: 0.9,
            top_n: 1,
            candidate_cap: 200,
        };
        let r = rank_subgraph(0, &tq, &kg, &idx, &emb, &cfg);
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.entries[0].fact, 0);
        assert_eq!(r.entries[0].literal, 16.0);

        let all = rank_subgraph(0, &tq, &kg, &idx, &emb, &RankerConfig { top_n: 10, ..cfg });
        assert_eq!(
            all.entries.iter().map(|e| e.fact).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert_eq!(all.entries[1].literal, 9.0);
    }

    #[test]
    fn empty_retrieval_gives_empty_subgraph() {
        let (kg, idx) = rufus();
        let emb = EmbeddingTable::new(4).unwrap();
        let tq = oracle_tag("who is zed", "zed").unwrap();
        assert!(
            rank_subgraph(3, &tq, &kg, &idx, &emb, &RankerConfig::default())
                .entries
                .is_empty()
        );
    }

    #[test]
    fn recall_counts_hits_within_n() {
        let (kg, _) = rufus();
        let entry = |fact| RankedEntry {
            fact,
            literal: 0.0,
            semantic: 0.0,
            combined: 0.0,
        };
        let r = RankedSubgraph {
            question_id: 0,
            entries: vec![entry(1), entry(2), entry(0)],
        };
        let ranked = [r];
        assert_eq!(
            topn_recall(&ranked, &["rufus scrimgeour"], 5, &kg).unwrap(),
            1.0
        );
        assert_eq!(
            topn_recall(&ranked, &["rufus scrimgeour"], 1, &kg).unwrap(),
            0.0
        );
        assert!(topn_recall(&ranked, &["a", "b"], 1, &kg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RankerConfig::default().validate().is_ok());
        assert!(RankerConfig {
            tau: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RankerConfig {
            top_n: 300,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
