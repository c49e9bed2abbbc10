//! Inverted index from subject n-grams to fact ids.
//!
//! Keys are space-joined lowercase token tuples of length `1..=max_n`.
//! Posting lists are strictly increasing, so a capped retrieval is a k-way
//! merge that stops after `cap` distinct ids.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::{bail, Result};
use crate::kb::{FactId, KnowledgeGraph};
use crate::text::{join_tokens, tokenize};

/// Candidate cap used when none is given.
pub const DEFAULT_CANDIDATE_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct NGramIndex {
    max_n: usize,
    fact_count: usize,
    postings: BTreeMap<String, Vec<FactId>>,
}

/// All n-grams of `tokens` of order exactly `n`, space-joined.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> impl Iterator<Item = String> + '_ {
    let count = if n == 0 || n > tokens.len() {
        0
    } else {
        tokens.len() - n + 1
    };
    (0..count).map(move |i| join_tokens(&tokens[i..i + n]))
}

impl NGramIndex {
    pub fn build(kg: &KnowledgeGraph, max_n: usize) -> Result<Self> {
        if max_n < 1 {
            bail!(InvalidArgument, "max_n must be >= 1, got {max_n}");
        }
        let mut grams_of: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        let mut postings: BTreeMap<String, Vec<FactId>> = BTreeMap::new();
        for fact in kg.facts() {
            let grams = grams_of.entry(fact.subject.as_str()).or_insert_with(|| {
                let tokens = tokenize(&fact.subject);
                (1..=max_n.min(tokens.len()))
                    .flat_map(|n| ngrams(&tokens, n))
                    .collect()
            });
            for g in grams.iter() {
                let list = postings.entry(g.clone()).or_default();
                // Facts arrive in id order, so only the tail can repeat.
                if list.last() != Some(&fact.id) {
                    list.push(fact.id);
                }
            }
        }
        Ok(Self {
            max_n,
            fact_count: kg.len(),
            postings,
        })
    }

    /// Rebuilds an index from stored postings, checking that every list is
    /// strictly increasing and refers to facts below `fact_count`.
    pub fn from_postings(
        max_n: usize,
        fact_count: usize,
        postings: BTreeMap<String, Vec<FactId>>,
    ) -> Result<Self> {
        if max_n < 1 {
            bail!(InvalidArgument, "max_n must be >= 1, got {max_n}");
        }
        for (gram, list) in &postings {
            if list.is_empty() {
                bail!(InvalidArgument, "empty posting list for {gram:?}");
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                bail!(
                    InvalidArgument,
                    "posting list for {gram:?} is not strictly increasing"
                );
            }
            if let Some(&last) = list.last() {
                if last as usize >= fact_count {
                    bail!(
                        InvalidArgument,
                        "posting list for {gram:?} refers to missing fact {last}"
                    );
                }
            }
        }
        Ok(Self {
            max_n,
            fact_count,
            postings,
        })
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn fact_count(&self) -> usize {
        self.fact_count
    }

    pub fn postings(&self) -> &BTreeMap<String, Vec<FactId>> {
        &self.postings
    }

    pub fn posting(&self, gram: &str) -> Option<&[FactId]> {
        self.postings.get(gram).map(Vec::as_slice)
    }

    /// Inverse document frequency of a single token over indexed facts.
    pub fn idf(&self, token: &str) -> f64 {
        let df = self.posting(token).map_or(0, <[FactId]>::len);
        libm::log((1.0 + self.fact_count as f64) / (1.0 + df as f64))
    }

    /// Union of the postings of every n-gram of `mention` (n up to
    /// `max_n`), in ascending fact id order, truncated to `cap` ids.
    pub fn retrieve<S: AsRef<str>>(&self, mention: &[S], cap: usize) -> Vec<FactId> {
        let lists: Vec<&[FactId]> = (1..=self.max_n.min(mention.len()))
            .flat_map(|n| ngrams(mention, n))
            .filter_map(|g| self.posting(&g))
            .collect();

        let mut heap: BinaryHeap<Reverse<(FactId, usize)>> = lists
            .iter()
            .enumerate()
            .map(|(i, l)| Reverse((l[0], i)))
            .collect();
        let mut cursor = alloc::vec![0usize; lists.len()];
        let mut out = Vec::new();
        while let Some(Reverse((id, li))) = heap.pop() {
            if out.len() >= cap {
                break;
            }
            if out.last() != Some(&id) {
                out.push(id);
            }
            cursor[li] += 1;
            if let Some(&next) = lists[li].get(cursor[li]) {
                heap.push(Reverse((next, li)));
            }
        }
        out
    }
}
