//! Unit-normalized word vectors with log unigram frequencies.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
    word_log_freq: BTreeMap<String, f64>,
    oov_log_freq: f64,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            bail!(InvalidArgument, "embedding dimension must be >= 1");
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
            word_log_freq: BTreeMap::new(),
            oov_log_freq: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Stores `vector` scaled to unit Euclidean norm. A later insert of the
    /// same word replaces the earlier one.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            bail!(
                Shape,
                "vector for {word:?} has {} components, expected {}",
                vector.len(),
                self.dim
            );
        }
        if vector.iter().any(|v| !v.is_finite()) {
            bail!(
                InvalidArgument,
                "vector for {word:?} has non-finite components"
            );
        }
        let norm = libm::sqrt(vector.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 {
            bail!(
                InvalidArgument,
                "vector for {word:?} is zero and cannot be normalized"
            );
        }
        self.vectors.insert(
            String::from(word),
            vector.iter().map(|v| v / norm).collect(),
        );
        Ok(())
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    /// Inner product of two word vectors; 0 when either word is unknown.
    pub fn dot(&self, a: &str, b: &str) -> f64 {
        match (self.vector(a), self.vector(b)) {
            (Some(x), Some(y)) => x.iter().zip(y).map(|(p, q)| p * q).sum(),
            _ => 0.0,
        }
    }

    /// Sets log relative frequencies from a token corpus with add-one
    /// smoothing: `ln((count + 1) / (N + V))`. Unseen words get
    /// `ln(1 / (N + V))`.
    pub fn set_frequencies_from_corpus<I, S>(&mut self, tokens: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0u64;
        for t in tokens {
            *counts.entry(String::from(t.as_ref())).or_default() += 1;
            total += 1;
        }
        let denom = (total + counts.len() as u64).max(1) as f64;
        self.word_log_freq = counts
            .into_iter()
            .map(|(w, c)| (w, libm::log((c + 1) as f64 / denom)))
            .collect();
        self.oov_log_freq = libm::log(1.0 / denom);
    }

    pub fn set_log_freq(&mut self, word: &str, log_freq: f64) -> Result<()> {
        check_log_freq(log_freq)?;
        self.word_log_freq.insert(String::from(word), log_freq);
        Ok(())
    }

    pub fn set_oov_log_freq(&mut self, log_freq: f64) -> Result<()> {
        check_log_freq(log_freq)?;
        self.oov_log_freq = log_freq;
        Ok(())
    }

    pub fn log_freq(&self, word: &str) -> f64 {
        self.word_log_freq
            .get(word)
            .copied()
            .unwrap_or(self.oov_log_freq)
    }

    pub fn oov_log_freq(&self) -> f64 {
        self.oov_log_freq
    }
}

fn check_log_freq(v: f64) -> Result<()> {
    if !v.is_finite() || v > 0.0 {
        bail!(
            InvalidArgument,
            "log frequency must be finite and <= 0, got {v}"
        );
    }
    Ok(())
}
