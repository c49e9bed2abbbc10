//! Knowledge-graph simple question answering.
//!
//! The crate covers the two stages of answering a single-fact question
//! against a triple store:
//!
//! 1. **Subgraph selection.** The question is split into a subject mention
//!    and a pattern ([`tagger`]), the mention's n-grams pull candidate facts
//!    out of an inverted index ([`index`]), and the candidates are ranked by
//!    a blend of character LCS and embedding co-occurrence ([`ranker`]).
//! 2. **Fact selection.** Two joint-input convolutional matchers
//!    ([`matcher`]) score (mention, subject) and (pattern, relation) pairs;
//!    they are trained with the well-order or ranking hinge ([`loss`],
//!    [`pipeline`]) on top of a small layer-wise autodiff kernel ([`nn`]).
//!
//! Everything here is `no_std` + `alloc`. File formats, checkpoints and the
//! command line live in the companion `kbsqa` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod embedding;
pub mod error;
pub mod index;
pub mod kb;
pub mod lcs;
pub mod loss;
pub mod matcher;
pub mod nn;
pub mod pipeline;
pub mod ranker;
pub mod rng;
pub mod tagger;
pub mod text;

pub use embedding::EmbeddingTable;
pub use error::{Error, Result};
pub use index::NGramIndex;
pub use kb::{Fact, FactId, KnowledgeGraph};
pub use loss::ScoreGroup;
pub use matcher::{Matcher, MatcherConfig, MatcherMode, MatcherPreset, PairScorer, Vocabulary};
pub use pipeline::{EvalReport, LossKind, Models, Prediction, QuestionRecord, TrainConfig};
pub use ranker::{RankedEntry, RankedSubgraph, RankerConfig};
pub use tagger::TaggedQuestion;
