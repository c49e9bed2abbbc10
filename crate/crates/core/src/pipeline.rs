//! Training, answer selection and evaluation.
//!
//! Questions are prepared once (oracle tagging plus subgraph ranking), then
//! the two matchers are trained jointly: for every question the gold
//! subject and gold relation are positives, and distinct other subjects and
//! relations from the ranked subgraph are negatives. At answer time every
//! candidate fact is scored by the sum of its subject and relation scores.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::embedding::EmbeddingTable;
use crate::error::{bail, Error, Result};
use crate::index::NGramIndex;
use crate::kb::{FactId, KnowledgeGraph};
use crate::loss::{
    ranking_gradients, ranking_loss, well_order_gradients, well_order_term, GroupGradients,
    ScoreGroup,
};
use crate::matcher::{Matcher, MatcherConfig, MatcherPreset, PairScorer, Vocabulary};
use crate::nn::{AdamConfig, AdamState};
use crate::ranker::{rank_subgraph, topn_recall, RankedSubgraph, RankerConfig};
use crate::rng::stream;
use crate::tagger::{oracle_tag, TaggedQuestion};
use crate::text::{normalize, relation_words, tokenize};

/// One SimpleQuestions-style record: the gold fact and the question text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionRecord {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub question: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Ranking,
    WellOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub negatives_per_question: usize,
    pub lambda: f64,
    pub loss_kind: LossKind,
    /// Only the first `top_n_subgraph` ranked facts supply negatives.
    pub top_n_subgraph: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Divide batch gradients by the batch size instead of summing them.
    pub average_batch: bool,
    /// End training after the first epoch whose summed loss is exactly 0.
    pub stop_at_zero_loss: bool,
    /// Keep per-question gradient weights in the [`TrainLog`].
    pub record_weights: bool,
}

impl TrainConfig {
    /// Batch 32, 20 epochs, learning rate 0.01.
    pub fn paper() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            negatives_per_question: 50,
            lambda: 0.1,
            loss_kind: LossKind::WellOrder,
            top_n_subgraph: 50,
            seed: 0,
            learning_rate: 0.01,
            average_batch: false,
            stop_at_zero_loss: false,
            record_weights: false,
        }
    }

    pub fn desk() -> Self {
        Self {
            epochs: 200,
            batch_size: 4,
            negatives_per_question: 10,
            lambda: 0.1,
            loss_kind: LossKind::WellOrder,
            top_n_subgraph: 10,
            seed: 0,
            learning_rate: 0.01,
            average_batch: false,
            stop_at_zero_loss: true,
            record_weights: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            bail!(Config, "epochs must be >= 1");
        }
        if self.batch_size < 1 {
            bail!(Config, "batch_size must be >= 1");
        }
        if self.negatives_per_question < 1 {
            bail!(Config, "negatives_per_question must be >= 1");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            bail!(
                Config,
                "lambda must be positive and finite, got {}",
                self.lambda
            );
        }
        if self.top_n_subgraph < 1 {
            bail!(Config, "top_n_subgraph must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            bail!(
                Config,
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            );
        }
        Ok(())
    }
}

/// A question after tagging and subgraph ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedQuestion {
    pub id: usize,
    pub record: QuestionRecord,
    /// `None` when the oracle tagger found no overlap with the gold subject.
    pub tagged: Option<TaggedQuestion>,
    pub ranked: RankedSubgraph,
}

pub fn prepare(
    records: &[QuestionRecord],
    kg: &KnowledgeGraph,
    index: &NGramIndex,
    emb: &EmbeddingTable,
    ranker: &RankerConfig,
) -> Vec<PreparedQuestion> {
    records
        .iter()
        .enumerate()
        .map(|(id, record)| {
            let tagged = oracle_tag(&record.question, &record.subject).ok();
            let ranked = match &tagged {
                Some(tq) => rank_subgraph(id, tq, kg, index, emb, ranker),
                None => RankedSubgraph {
                    question_id: id,
                    entries: Vec::new(),
                },
            };
            PreparedQuestion {
                id,
                record: record.clone(),
                tagged,
                ranked,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Negatives {
    pub subjects: Vec<String>,
    pub relations: Vec<String>,
}

/// Every distinct subject and relation among the first `top_n` ranked
/// facts other than the gold ones, in rank order.
pub fn candidate_negatives(
    ranked: &RankedSubgraph,
    kg: &KnowledgeGraph,
    gold_subject: &str,
    gold_relation: &str,
    top_n: usize,
) -> Negatives {
    let gold_subject = normalize(gold_subject);
    let gold_relation = gold_relation.trim();
    let mut out = Negatives::default();
    for fact in ranked
        .entries
        .iter()
        .take(top_n)
        .filter_map(|e| kg.fact(e.fact))
    {
        if fact.subject != gold_subject && !out.subjects.contains(&fact.subject) {
            out.subjects.push(fact.subject.clone());
        }
        if fact.relation != gold_relation && !out.relations.contains(&fact.relation) {
            out.relations.push(fact.relation.clone());
        }
    }
    out
}

fn sample_in_order<R: rand::Rng>(pool: Vec<String>, k: usize, rng: &mut R) -> Vec<String> {
    if pool.len() <= k {
        return pool;
    }
    let mut picked = rand::seq::index::sample(rng, pool.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i].clone()).collect()
}

/// Up to `k` negative subjects and `k` negative relations drawn uniformly
/// without replacement from the ranked subgraph. The draw depends only on
/// `(seed, question_id, epoch)`; the result keeps subgraph rank order.
#[allow(clippy::too_many_arguments)]
pub fn sample_negatives(
    ranked: &RankedSubgraph,
    kg: &KnowledgeGraph,
    gold_subject: &str,
    gold_relation: &str,
    k: usize,
    seed: u64,
    question_id: usize,
    epoch: usize,
) -> Negatives {
    let pool = candidate_negatives(
        ranked,
        kg,
        gold_subject,
        gold_relation,
        ranked.entries.len(),
    );
    let mut rng = stream(seed, &[NEGATIVE_STREAM, question_id as u64, epoch as u64]);
    Negatives {
        subjects: sample_in_order(pool.subjects, k, &mut rng),
        relations: sample_in_order(pool.relations, k, &mut rng),
    }
}

const NEGATIVE_STREAM: u64 = 0x006e_6567;
const SHUFFLE_STREAM: u64 = 0x7368_7566;
const SUBJECT_INIT_STREAM: u64 = 1;
const RELATION_INIT_STREAM: u64 = 2;

/// The (mention, subject) and (pattern, relation) matchers.
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub subject: Matcher,
    pub relation: Matcher,
}

impl Models {
    /// Builds vocabularies from the knowledge graph and the prepared
    /// questions, then initializes both matchers from `seed`.
    pub fn build(
        subject_preset: &MatcherPreset,
        relation_preset: &MatcherPreset,
        kg: &KnowledgeGraph,
        questions: &[PreparedQuestion],
        seed: u64,
    ) -> Result<Self> {
        let tagged: Vec<&TaggedQuestion> =
            questions.iter().filter_map(|q| q.tagged.as_ref()).collect();

        let probe =
            MatcherConfig::from_preset(subject_preset, Vocabulary::from_symbols(Vec::new())?);
        let subject_units = kg
            .subjects()
            .iter()
            .map(|s| probe.units(&tokenize(s)))
            .chain(tagged.iter().map(|t| probe.units(&t.mention_tokens)));
        let subject_vocab = Vocabulary::build(subject_units, subject_preset.vocab_size);

        let probe =
            MatcherConfig::from_preset(relation_preset, Vocabulary::from_symbols(Vec::new())?);
        let relation_units = kg
            .relations()
            .iter()
            .map(|r| probe.units(&relation_words(r)))
            .chain(tagged.iter().map(|t| probe.units(&t.pattern_tokens)));
        let relation_vocab = Vocabulary::build(relation_units, relation_preset.vocab_size);

        Ok(Self {
            subject: Matcher::new(
                MatcherConfig::from_preset(subject_preset, subject_vocab),
                &mut stream(seed, &[SUBJECT_INIT_STREAM]),
            )?,
            relation: Matcher::new(
                MatcherConfig::from_preset(relation_preset, relation_vocab),
                &mut stream(seed, &[RELATION_INIT_STREAM]),
            )?,
        })
    }

    pub fn subject_score(&self, tq: &TaggedQuestion, subject: &str) -> Result<f64> {
        self.subject
            .score_pair(&tq.mention_tokens, &tokenize(subject))
    }

    pub fn relation_score(&self, tq: &TaggedQuestion, relation: &str) -> Result<f64> {
        self.relation
            .score_pair(&tq.pattern_tokens, &relation_words(relation))
    }

    /// Scores the gold pair and the given negatives for both matchers.
    pub fn score_groups(
        &self,
        tq: &TaggedQuestion,
        gold_subject: &str,
        gold_relation: &str,
        negatives: &Negatives,
    ) -> Result<(ScoreGroup, ScoreGroup)> {
        let ms = ScoreGroup::new(
            alloc::vec![self.subject_score(tq, gold_subject)?],
            negatives
                .subjects
                .iter()
                .map(|s| self.subject_score(tq, s))
                .collect::<Result<_>>()?,
        );
        let pr = ScoreGroup::new(
            alloc::vec![self.relation_score(tq, gold_relation)?],
            negatives
                .relations
                .iter()
                .map(|r| self.relation_score(tq, r))
                .collect::<Result<_>>()?,
        );
        Ok((ms, pr))
    }
}

/// Hinge coefficients applied to one question in one epoch. While a
/// well-order hinge is active the positive score's gradient has magnitude
/// equal to the number of negatives in its group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientWeights {
    pub epoch: usize,
    pub question_id: usize,
    pub ms_negatives: usize,
    pub pr_negatives: usize,
    pub ms_positive_weight: f64,
    pub pr_positive_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Summed loss of every epoch that ran.
    pub epoch_losses: Vec<f64>,
    pub weights: Vec<GradientWeights>,
    pub skipped_untaggable: usize,
}

struct GroupPass {
    loss: f64,
    positive_weight: f64,
}

/// Forward pass over one group, loss, then backward with `scale`.
fn group_pass(
    matcher: &mut Matcher,
    left: &[String],
    positive: &[String],
    negatives: &[Vec<String>],
    cfg: &TrainConfig,
    scale: f64,
) -> Result<GroupPass> {
    let (pos_score, pos_cache) = matcher.forward(left, positive)?;
    let mut neg_scores = Vec::with_capacity(negatives.len());
    let mut neg_caches = Vec::with_capacity(negatives.len());
    for n in negatives {
        let (s, c) = matcher.forward(left, n)?;
        neg_scores.push(s);
        neg_caches.push(c);
    }
    let group = ScoreGroup::new(alloc::vec![pos_score], neg_scores);
    let (
        loss,
        GroupGradients {
            positives,
            negatives: neg_grads,
        },
    ) = match cfg.loss_kind {
        LossKind::WellOrder => (
            well_order_term(&group, cfg.lambda),
            well_order_gradients(&group, cfg.lambda),
        ),
        LossKind::Ranking => (
            ranking_loss(&group, cfg.lambda),
            ranking_gradients(&group, cfg.lambda),
        ),
    };
    matcher.backward(&pos_cache, positives[0] * scale);
    for (cache, g) in neg_caches.iter().zip(&neg_grads) {
        matcher.backward(cache, g * scale);
    }
    Ok(GroupPass {
        loss,
        positive_weight: libm::fabs(positives[0]),
    })
}

fn optimizer_for(matcher: &Matcher, lr: f64) -> Result<AdamState> {
    let params: Vec<&crate::nn::Tensor> = matcher.params().iter().collect();
    AdamState::new(AdamConfig::with_learning_rate(lr), &params)
}

fn adam_step(opt: &mut AdamState, matcher: &mut Matcher) -> Result<()> {
    let mut params: Vec<&mut crate::nn::Tensor> = matcher.params_mut().iter_mut().collect();
    opt.step(&mut params)
}

/// Trains both matchers. Untaggable questions are skipped. A matcher whose
/// hinges were all inactive over a batch is not stepped for that batch.
pub fn train(
    questions: &[PreparedQuestion],
    kg: &KnowledgeGraph,
    models: &mut Models,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    let mut opt_subject = optimizer_for(&models.subject, cfg.learning_rate)?;
    let mut opt_relation = optimizer_for(&models.relation, cfg.learning_rate)?;
    let trainable: Vec<usize> = (0..questions.len())
        .filter(|&i| questions[i].tagged.is_some())
        .collect();
    let mut log = TrainLog {
        skipped_untaggable: questions.len() - trainable.len(),
        ..TrainLog::default()
    };
    models.subject.zero_grad();
    models.relation.zero_grad();

    for epoch in 0..cfg.epochs {
        let mut order = trainable.clone();
        order.shuffle(&mut stream(cfg.seed, &[SHUFFLE_STREAM, epoch as u64]));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let scale = if cfg.average_batch {
                1.0 / batch.len() as f64
            } else {
                1.0
            };
            let (mut subject_active, mut relation_active) = (false, false);
            for &qi in batch {
                let q = &questions[qi];
                let tq = q.tagged.as_ref().expect("trainable questions are tagged");
                let top = RankedSubgraph {
                    question_id: q.id,
                    entries: q
                        .ranked
                        .entries
                        .iter()
                        .take(cfg.top_n_subgraph)
                        .copied()
                        .collect(),
                };
                let negs = sample_negatives(
                    &top,
                    kg,
                    &q.record.subject,
                    &q.record.relation,
                    cfg.negatives_per_question,
                    cfg.seed,
                    q.id,
                    epoch,
                );
                let neg_subjects: Vec<Vec<String>> =
                    negs.subjects.iter().map(|s| tokenize(s)).collect();
                let neg_relations: Vec<Vec<String>> =
                    negs.relations.iter().map(|r| relation_words(r)).collect();
                let ms = group_pass(
                    &mut models.subject,
                    &tq.mention_tokens,
                    &tokenize(&q.record.subject),
                    &neg_subjects,
                    cfg,
                    scale,
                )?;
                let pr = group_pass(
                    &mut models.relation,
                    &tq.pattern_tokens,
                    &relation_words(&q.record.relation),
                    &neg_relations,
                    cfg,
                    scale,
                )?;
                let loss = ms.loss + pr.loss;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        question: q.id,
                    });
                }
                subject_active |= ms.loss > 0.0;
                relation_active |= pr.loss > 0.0;
                epoch_loss += loss;
                if cfg.record_weights {
                    log.weights.push(GradientWeights {
                        epoch,
                        question_id: q.id,
                        ms_negatives: neg_subjects.len(),
                        pr_negatives: neg_relations.len(),
                        ms_positive_weight: ms.positive_weight,
                        pr_positive_weight: pr.positive_weight,
                    });
                }
            }
            if subject_active {
                adam_step(&mut opt_subject, &mut models.subject)?;
            }
            if relation_active {
                adam_step(&mut opt_relation, &mut models.relation)?;
            }
            models.subject.zero_grad();
            models.relation.zero_grad();
        }
        log.epoch_losses.push(epoch_loss);
        if cfg.stop_at_zero_loss && epoch_loss == 0.0 {
            break;
        }
    }
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub fact: FactId,
    pub subject_score: f64,
    pub relation_score: f64,
    pub combined: f64,
}

/// Subject, relation and summed scores of every ranked candidate, in
/// subgraph order. Each distinct subject and relation is scored once.
pub fn score_candidates<S: PairScorer, R: PairScorer>(
    tq: &TaggedQuestion,
    ranked: &RankedSubgraph,
    kg: &KnowledgeGraph,
    subject_scorer: &S,
    relation_scorer: &R,
) -> Result<Vec<CandidateScore>> {
    let mut subject_cache: BTreeMap<&str, f64> = BTreeMap::new();
    let mut relation_cache: BTreeMap<&str, f64> = BTreeMap::new();
    let mut out = Vec::with_capacity(ranked.entries.len());
    for entry in &ranked.entries {
        let fact = kg.fact(entry.fact).ok_or(Error::IndexOutOfRange {
            index: entry.fact as usize,
            len: kg.len(),
        })?;
        let subject_score = match subject_cache.get(fact.subject.as_str()) {
            Some(&s) => s,
            None => {
                let s = subject_scorer.score_pair(&tq.mention_tokens, &tokenize(&fact.subject))?;
                subject_cache.insert(&fact.subject, s);
                s
            }
        };
        let relation_score = match relation_cache.get(fact.relation.as_str()) {
            Some(&s) => s,
            None => {
                let s = relation_scorer
                    .score_pair(&tq.pattern_tokens, &relation_words(&fact.relation))?;
                relation_cache.insert(&fact.relation, s);
                s
            }
        };
        out.push(CandidateScore {
            fact: fact.id,
            subject_score,
            relation_score,
            combined: subject_score + relation_score,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub question_id: usize,
    pub fact: Option<FactId>,
    pub subject_score: f64,
    pub relation_score: f64,
    pub combined: f64,
}

impl Prediction {
    pub fn absent(question_id: usize) -> Self {
        Self {
            question_id,
            fact: None,
            subject_score: 0.0,
            relation_score: 0.0,
            combined: 0.0,
        }
    }
}

/// Argmax of subject score + relation score over the ranked subgraph; ties
/// go to the better-ranked candidate.
pub fn select_fact<S: PairScorer, R: PairScorer>(
    question_id: usize,
    tq: &TaggedQuestion,
    ranked: &RankedSubgraph,
    kg: &KnowledgeGraph,
    subject_scorer: &S,
    relation_scorer: &R,
) -> Result<Prediction> {
    let scores = score_candidates(tq, ranked, kg, subject_scorer, relation_scorer)?;
    let mut best: Option<CandidateScore> = None;
    for c in scores {
        if best.is_none_or(|b| c.combined > b.combined) {
            best = Some(c);
        }
    }
    Ok(
        best.map_or(Prediction::absent(question_id), |b| Prediction {
            question_id,
            fact: Some(b.fact),
            subject_score: b.subject_score,
            relation_score: b.relation_score,
            combined: b.combined,
        }),
    )
}

pub fn predict_all(
    questions: &[PreparedQuestion],
    kg: &KnowledgeGraph,
    models: &Models,
) -> Result<Vec<Prediction>> {
    questions
        .iter()
        .map(|q| match &q.tagged {
            Some(tq) => select_fact(q.id, tq, &q.ranked, kg, &models.subject, &models.relation),
            None => Ok(Prediction::absent(q.id)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub total: usize,
    pub object_accuracy: f64,
    pub subject_accuracy: f64,
    pub relation_accuracy: f64,
    pub topn_recalls: Vec<(usize, f64)>,
    pub untaggable: usize,
    pub empty_subgraph: usize,
}

/// Accuracies over all questions; untaggable questions and absent
/// predictions count as wrong on every counter.
pub fn evaluate(
    questions: &[PreparedQuestion],
    predictions: &[Prediction],
    kg: &KnowledgeGraph,
    recall_ns: &[usize],
) -> Result<EvalReport> {
    if questions.len() != predictions.len() {
        bail!(
            InvalidArgument,
            "{} questions but {} predictions",
            questions.len(),
            predictions.len()
        );
    }
    let total = questions.len();
    let (mut objects, mut subjects, mut relations) = (0usize, 0usize, 0usize);
    for (q, p) in questions.iter().zip(predictions) {
        let Some(fact) = p.fact.and_then(|id| kg.fact(id)) else {
            continue;
        };
        subjects += usize::from(fact.subject == normalize(&q.record.subject));
        relations += usize::from(fact.relation == q.record.relation.trim());
        objects += usize::from(normalize(&fact.object) == normalize(&q.record.object));
    }
    let rate = |n: usize| {
        if total == 0 {
            0.0
        } else {
            n as f64 / total as f64
        }
    };
    let ranked: Vec<RankedSubgraph> = questions.iter().map(|q| q.ranked.clone()).collect();
    let gold: Vec<&str> = questions
        .iter()
        .map(|q| q.record.subject.as_str())
        .collect();
    let topn_recalls = recall_ns
        .iter()
        .map(|&n| Ok((n, topn_recall(&ranked, &gold, n, kg)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        total,
        object_accuracy: rate(objects),
        subject_accuracy: rate(subjects),
        relation_accuracy: rate(relations),
        topn_recalls,
        untaggable: questions.iter().filter(|q| q.tagged.is_none()).count(),
        empty_subgraph: questions
            .iter()
            .filter(|q| q.tagged.is_some() && q.ranked.entries.is_empty())
            .count(),
    })
}
