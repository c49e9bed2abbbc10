//! Joint-input convolutional matchers.
//!
//! A matcher reads one pair as a single sequence `[left, SEP, right]` and
//! maps it straight to a scalar:
//!
//! ```text
//! ids → embed → conv1 → relu → conv2 → max over positions → affine → score
//! ```
//!
//! The character matcher scores (mention, subject) pairs; the word matcher
//! scores (pattern, relation) pairs. They differ only in how a side is cut
//! into units and in the vocabulary.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Error, Result};
use crate::nn::{
    adaptive_max_pool1, adaptive_max_pool1_backward, affine, affine_backward, conv1d,
    conv1d_backward, embed, embed_backward, relu, relu_backward, transpose, Conv1dSpec, Tensor,
};
use crate::text::join_tokens;

pub const UNK: u32 = 0;
pub const SEP: u32 = 1;
const UNK_SYMBOL: &str = "<unk>";
const SEP_SYMBOL: &str = "<sep>";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatcherMode {
    Char,
    Word,
}

/// Symbol table with `UNK` at id 0 and `SEP` at id 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<String>,
    lookup: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Builds from unit sequences, keeping the most frequent symbols (ties
    /// in lexicographic order) so that the total size, reserved symbols
    /// included, is at most `limit`.
    pub fn build<I, S>(sequences: I, limit: Option<usize>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for seq in sequences {
            for u in seq.as_ref() {
                if u != UNK_SYMBOL && u != SEP_SYMBOL {
                    *counts.entry(u.clone()).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(limit) = limit {
            ranked.truncate(limit.saturating_sub(2));
        }
        let mut symbols: Vec<String> = ranked.into_iter().map(|(s, _)| s).collect();
        symbols.sort();
        Self::from_symbols(symbols).expect("counted symbols are distinct and unreserved")
    }

    /// Vocabulary with the given non-reserved symbols at ids `2..`.
    pub fn from_symbols(symbols: Vec<String>) -> Result<Self> {
        let mut all = Vec::with_capacity(symbols.len() + 2);
        all.push(UNK_SYMBOL.to_string());
        all.push(SEP_SYMBOL.to_string());
        all.extend(symbols);
        let mut lookup = BTreeMap::new();
        for (i, s) in all.iter().enumerate() {
            if lookup.insert(s.clone(), i as u32).is_some() {
                bail!(
                    InvalidArgument,
                    "duplicate or reserved vocabulary symbol {s:?}"
                );
            }
        }
        Ok(Self {
            symbols: all,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, symbol: &str) -> u32 {
        self.lookup.get(symbol).copied().unwrap_or(UNK)
    }

    /// Non-reserved symbols in id order.
    pub fn symbols(&self) -> &[String] {
        &self.symbols[2..]
    }
}

/// Named architecture and vocabulary-size preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatcherPreset {
    pub name: &'static str,
    pub mode: MatcherMode,
    /// Upper bound on the vocabulary size; `None` keeps every corpus symbol.
    pub vocab_size: Option<usize>,
    pub embed_dim: usize,
    /// `(out_channels, kernel, stride, padding)`
    pub conv1: (usize, usize, usize, usize),
    pub conv2: (usize, usize, usize, usize),
}

pub const PAPER_CHAR: MatcherPreset = MatcherPreset {
    name: "paper-char",
    mode: MatcherMode::Char,
    vocab_size: Some(69),
    embed_dim: 60,
    conv1: (300, 3, 1, 1),
    conv2: (60, 3, 1, 1),
};

pub const PAPER_WORD: MatcherPreset = MatcherPreset {
    name: "paper-word",
    mode: MatcherMode::Word,
    vocab_size: Some(151_718),
    embed_dim: 300,
    conv1: (1500, 3, 1, 1),
    conv2: (300, 3, 1, 1),
};

pub const DESK_CHAR: MatcherPreset = MatcherPreset {
    name: "desk-char",
    mode: MatcherMode::Char,
    vocab_size: None,
    embed_dim: 16,
    conv1: (32, 3, 1, 1),
    conv2: (16, 3, 1, 1),
};

pub const DESK_WORD: MatcherPreset = MatcherPreset {
    name: "desk-word",
    mode: MatcherMode::Word,
    vocab_size: None,
    embed_dim: 16,
    conv1: (32, 3, 1, 1),
    conv2: (16, 3, 1, 1),
};

pub fn preset_by_name(name: &str) -> Option<MatcherPreset> {
    [PAPER_CHAR, PAPER_WORD, DESK_CHAR, DESK_WORD]
        .into_iter()
        .find(|p| p.name == name)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatcherConfig {
    pub mode: MatcherMode,
    pub embed_dim: usize,
    pub conv1: Conv1dSpec,
    pub conv2: Conv1dSpec,
    pub vocabulary: Vocabulary,
}

impl MatcherConfig {
    pub fn from_preset(preset: &MatcherPreset, vocabulary: Vocabulary) -> Self {
        let spec = |in_channels, (out_channels, kernel_size, stride, padding)| Conv1dSpec {
            in_channels,
            out_channels,
            kernel_size,
            stride,
            padding,
        };
        Self {
            mode: preset.mode,
            embed_dim: preset.embed_dim,
            conv1: spec(preset.embed_dim, preset.conv1),
            conv2: spec(preset.conv1.0, preset.conv2),
            vocabulary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.conv1.validate()?;
        self.conv2.validate()?;
        if self.embed_dim == 0 {
            bail!(Config, "embed_dim must be >= 1");
        }
        if self.conv1.in_channels != self.embed_dim {
            bail!(
                Config,
                "conv1 input channels {} != embed_dim {}",
                self.conv1.in_channels,
                self.embed_dim
            );
        }
        if self.conv2.in_channels != self.conv1.out_channels {
            bail!(
                Config,
                "conv2 input channels {} != conv1 output channels {}",
                self.conv2.in_channels,
                self.conv1.out_channels
            );
        }
        Ok(())
    }

    /// Declared parameter shapes, in checkpoint order.
    pub fn param_shapes(&self) -> [Vec<usize>; 7] {
        [
            alloc::vec![self.vocabulary.len(), self.embed_dim],
            self.conv1.weight_shape().to_vec(),
            alloc::vec![self.conv1.out_channels],
            self.conv2.weight_shape().to_vec(),
            alloc::vec![self.conv2.out_channels],
            alloc::vec![1, self.conv2.out_channels],
            alloc::vec![1],
        ]
    }

    /// Splits one side of a pair into units: characters of the space-joined
    /// tokens in char mode, the tokens themselves in word mode.
    pub fn units<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        match self.mode {
            MatcherMode::Char => join_tokens(tokens).chars().map(String::from).collect(),
            MatcherMode::Word => tokens.iter().map(|t| t.as_ref().to_string()).collect(),
        }
    }
}

/// Something that scores a (left, right) token-sequence pair.
pub trait PairScorer {
    fn score_pair(&self, left: &[String], right: &[String]) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matcher {
    config: MatcherConfig,
    params: [Tensor; 7],
}

/// Intermediate values kept by [`Matcher::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    ids: Vec<u32>,
    input: Tensor,
    conv1_out: Tensor,
    hidden: Tensor,
    conv2_len: usize,
    argmax: Vec<usize>,
    pooled: Tensor,
}

const EMBEDDING: usize = 0;
const CONV1_W: usize = 1;
const CONV1_B: usize = 2;
const CONV2_W: usize = 3;
const CONV2_B: usize = 4;
const HEAD_W: usize = 5;
const HEAD_B: usize = 6;

impl Matcher {
    /// Uniform initialization in `±1/√fan_in`; the embedding table counts
    /// as fan-in 1.
    pub fn new<R: Rng>(config: MatcherConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let fan_in = [
            1,
            config.embed_dim * config.conv1.kernel_size,
            config.embed_dim * config.conv1.kernel_size,
            config.conv1.out_channels * config.conv2.kernel_size,
            config.conv1.out_channels * config.conv2.kernel_size,
            config.conv2.out_channels,
            config.conv2.out_channels,
        ];
        let shapes = config.param_shapes();
        let mut make = |i: usize| {
            let bound = 1.0 / libm::sqrt(fan_in[i] as f64);
            Tensor::from_fn(&shapes[i], |_| rng.random_range(-bound..=bound))
        };
        let params = [
            make(0),
            make(1),
            make(2),
            make(3),
            make(4),
            make(5),
            make(6),
        ];
        Ok(Self { config, params })
    }

    /// All-zero parameters; every pair scores 0.
    pub fn zeroed(config: MatcherConfig) -> Result<Self> {
        config.validate()?;
        let shapes = config.param_shapes();
        let params = core::array::from_fn(|i| Tensor::zeros(&shapes[i]));
        Ok(Self { config, params })
    }

    /// Reassembles a matcher from stored parameters in declared order.
    pub fn from_parts(config: MatcherConfig, params: Vec<Tensor>) -> Result<Self> {
        config.validate()?;
        let shapes = config.param_shapes();
        if params.len() != shapes.len() {
            bail!(
                Shape,
                "expected {} parameter tensors, got {}",
                shapes.len(),
                params.len()
            );
        }
        for (i, (p, s)) in params.iter().zip(&shapes).enumerate() {
            if p.shape() != s.as_slice() {
                bail!(
                    Shape,
                    "parameter {i} has shape {:?}, expected {:?}",
                    p.shape(),
                    s
                );
            }
        }
        let params: [Tensor; 7] = params
            .try_into()
            .map_err(|_| Error::Shape("parameter count".into()))?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &MatcherConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor; 7] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor; 7] {
        &mut self.params
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(Tensor::zero_grad);
    }

    pub fn encode<S: AsRef<str>, T: AsRef<str>>(
        &self,
        left: &[S],
        right: &[T],
    ) -> Result<Vec<u32>> {
        let l = self.config.units(left);
        let r = self.config.units(right);
        if l.is_empty() || r.is_empty() {
            bail!(InvalidArgument, "both sides of a pair must be non-empty");
        }
        let vocab = &self.config.vocabulary;
        let mut ids: Vec<u32> = l.iter().map(|u| vocab.id(u)).collect();
        ids.push(SEP);
        ids.extend(r.iter().map(|u| vocab.id(u)));
        Ok(ids)
    }

    pub fn forward<S: AsRef<str>, T: AsRef<str>>(
        &self,
        left: &[S],
        right: &[T],
    ) -> Result<(f64, ForwardCache)> {
        let ids = self.encode(left, right)?;
        let p = &self.params;
        let input = transpose(&embed(&ids, &p[EMBEDDING])?)?;
        let conv1_out = conv1d(&input, &self.config.conv1, &p[CONV1_W], &p[CONV1_B])?;
        let hidden = relu(&conv1_out);
        let conv2_out = conv1d(&hidden, &self.config.conv2, &p[CONV2_W], &p[CONV2_B])?;
        let (pooled, argmax) = adaptive_max_pool1(&conv2_out)?;
        let score = affine(&pooled, &p[HEAD_W], &p[HEAD_B])?.values()[0];
        let conv2_len = conv2_out.shape()[1];
        Ok((
            score,
            ForwardCache {
                ids,
                input,
                conv1_out,
                hidden,
                conv2_len,
                argmax,
                pooled,
            },
        ))
    }

    /// Accumulates `d_score · ∂score/∂θ` into every parameter's gradient.
    pub fn backward(&mut self, cache: &ForwardCache, d_score: f64) {
        if d_score == 0.0 {
            return;
        }
        let [emb, w1, b1, w2, b2, hw, hb] = &mut self.params;
        let d_pooled = affine_backward(&cache.pooled, hw, hb, &[d_score]);
        let d_conv2 = adaptive_max_pool1_backward(&cache.argmax, cache.conv2_len, &d_pooled);
        let d_hidden = conv1d_backward(&cache.hidden, &self.config.conv2, w2, b2, &d_conv2);
        let d_conv1 = relu_backward(&cache.conv1_out, &d_hidden);
        let d_input = conv1d_backward(&cache.input, &self.config.conv1, w1, b1, &d_conv1);
        let (dim, len) = (cache.input.shape()[0], cache.input.shape()[1]);
        let d_input = Tensor::new(&[dim, len], d_input).expect("gradient matches input shape");
        let d_embedded = transpose(&d_input).expect("rank-2 gradient");
        embed_backward(&cache.ids, d_embedded.values(), emb);
    }
}

impl PairScorer for Matcher {
    fn score_pair(&self, left: &[String], right: &[String]) -> Result<f64> {
        self.forward(left, right).map(|(s, _)| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::text::tokenize;
    use alloc::vec;

    fn char_config() -> MatcherConfig {
        let seqs = [tokenize("rufus scrimgeour"), tokenize("rufus wainwright")];
        let units = seqs
            .iter()
            .map(|t| join_tokens(t).chars().map(String::from).collect::<Vec<_>>());
        MatcherConfig::from_preset(&DESK_CHAR, Vocabulary::build(units, None))
    }

    #[test]
    fn vocabulary_reserves_unk_and_sep() {
        let v = Vocabulary::build(
            [vec![
                String::from("a"),
                String::from("b"),
                String::from("a"),
            ]],
            None,
        );
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("a"), 2);
        assert_eq!(v.id("zz"), UNK);
        assert_eq!(v.id("<sep>"), SEP);
        let limited = Vocabulary::build(
            [vec![
                String::from("a"),
                String::from("b"),
                String::from("a"),
            ]],
            Some(3),
        );
        assert_eq!(limited.symbols(), &[String::from("a")]);
        assert!(Vocabulary::from_symbols(vec![String::from("<unk>")]).is_err());
    }

    #[test]
    fn presets_are_consistent() {
        for p in [PAPER_CHAR, PAPER_WORD, DESK_CHAR, DESK_WORD] {
            let cfg = MatcherConfig::from_preset(&p, Vocabulary::from_symbols(vec![]).unwrap());
            cfg.validate().unwrap();
            assert_eq!(preset_by_name(p.name), Some(p));
        }
        assert_eq!(PAPER_CHAR.conv1, (300, 3, 1, 1));
        assert_eq!(PAPER_WORD.conv2, (300, 3, 1, 1));
    }

    #[test]
    fn zero_network_scores_zero() {
        let m = Matcher::zeroed(char_config()).unwrap();
        let s = m
            .score_pair(&tokenize("rufus"), &tokenize("rufus scrimgeour"))
            .unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn scores_are_finite_and_repeatable() {
        let m = Matcher::new(char_config(), &mut stream(3, &[])).unwrap();
        let (l, r) = (tokenize("rufus scrimgeour"), tokenize("rufus wainwright"));
        let a = m.score_pair(&l, &r).unwrap();
        assert!(a.is_finite());
        assert_eq!(a, m.score_pair(&l, &r).unwrap());
        assert_eq!(m, Matcher::new(char_config(), &mut stream(3, &[])).unwrap());
    }

    #[test]
    fn empty_side_is_rejected() {
        let m = Matcher::zeroed(char_config()).unwrap();
        assert!(m.score_pair(&[], &tokenize("x")).is_err());
        assert!(m.score_pair(&tokenize("x"), &[]).is_err());
    }

    #[test]
    fn encode_places_separator() {
        let m = Matcher::zeroed(char_config()).unwrap();
        let ids = m.encode(&["ru"], &["f"]).unwrap();
        assert_eq!(ids.len(), 4);
        assert_eq!(ids[2], SEP);
        assert_ne!(ids[0], UNK);
        assert_eq!(m.encode(&["Q"], &["f"]).unwrap()[0], UNK);
    }
}
