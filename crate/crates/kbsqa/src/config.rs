//! Run settings assembled from command-line flags, an optional `key=value`
//! config file and the `KBSQA_SEED` environment variable.
//!
//! Precedence per setting: flag, then config file, then `KBSQA_SEED` (seed
//! only), then the preset default. Config-file keys are the long flag names
//! without the leading dashes, e.g. `top-n = 20`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use kbsqa_core::matcher::{MatcherPreset, DESK_CHAR, DESK_WORD, PAPER_CHAR, PAPER_WORD};
use kbsqa_core::{LossKind, RankerConfig, TrainConfig};

use crate::error::{Error, Result};

pub const SEED_ENV: &str = "KBSQA_SEED";
pub const DEFAULT_MAX_N: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    Paper,
    #[default]
    Desk,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        }
    }

    /// Subject (character-level) and relation (word-level) matcher presets.
    pub fn matchers(self) -> (MatcherPreset, MatcherPreset) {
        match self {
            Preset::Paper => (PAPER_CHAR, PAPER_WORD),
            Preset::Desk => (DESK_CHAR, DESK_WORD),
        }
    }

    pub fn train(self) -> TrainConfig {
        match self {
            Preset::Paper => TrainConfig::paper(),
            Preset::Desk => TrainConfig::desk(),
        }
    }

    pub fn ranker(self) -> RankerConfig {
        RankerConfig {
            top_n: self.train().top_n_subgraph,
            ..RankerConfig::default()
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err(format!("unknown preset {s:?} (expected paper or desk)")),
        }
    }
}

pub fn parse_loss(s: &str) -> std::result::Result<LossKind, String> {
    match s {
        "ranking" => Ok(LossKind::Ranking),
        "well-order" => Ok(LossKind::WellOrder),
        _ => Err(format!(
            "unknown loss {s:?} (expected ranking or well-order)"
        )),
    }
}

pub fn loss_name(kind: LossKind) -> &'static str {
    match kind {
        LossKind::Ranking => "ranking",
        LossKind::WellOrder => "well-order",
    }
}

/// Every overridable setting; `None` means "not given at this level".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub facts: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub tau: Option<f64>,
    pub top_n: Option<usize>,
    pub cap: Option<usize>,
    pub loss: Option<LossKind>,
    pub lambda: Option<f64>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub negatives: Option<usize>,
    pub seed: Option<u64>,
    pub max_n: Option<usize>,
}

fn value<T: FromStr>(key: &str, raw: &str, path: &Path, line: usize) -> Result<T> {
    raw.parse().map_err(|_| {
        Error::Config(format!(
            "{}:{line}: bad value {raw:?} for {key}",
            path.display()
        ))
    })
}

impl Settings {
    pub fn parse_file(text: &str, path: &Path) -> Result<Self> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let no = i + 1;
            let (key, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{no}: expected key=value", path.display()))
            })?;
            let (key, v) = (key.trim(), v.trim());
            match key {
                "facts" => s.facts = Some(v.into()),
                "questions" => s.questions = Some(v.into()),
                "embeddings" => s.embeddings = Some(v.into()),
                "index" => s.index = Some(v.into()),
                "checkpoint" => s.checkpoint = Some(v.into()),
                "report-dir" => s.report_dir = Some(v.into()),
                "preset" => s.preset = Some(v.parse().map_err(Error::Config)?),
                "loss" => s.loss = Some(parse_loss(v).map_err(Error::Config)?),
                "tau" => s.tau = Some(value(key, v, path, no)?),
                "top-n" => s.top_n = Some(value(key, v, path, no)?),
                "cap" => s.cap = Some(value(key, v, path, no)?),
                "lambda" => s.lambda = Some(value(key, v, path, no)?),
                "epochs" => s.epochs = Some(value(key, v, path, no)?),
                "batch" => s.batch = Some(value(key, v, path, no)?),
                "lr" => s.lr = Some(value(key, v, path, no)?),
                "negatives" => s.negatives = Some(value(key, v, path, no)?),
                "seed" => s.seed = Some(value(key, v, path, no)?),
                "max-n" => s.max_n = Some(value(key, v, path, no)?),
                other => {
                    return Err(Error::Config(format!(
                        "{}:{no}: unknown key {other:?}",
                        path.display()
                    )))
                }
            }
        }
        Ok(s)
    }

    /// Fills every unset field from `lower`.
    pub fn or(self, lower: Settings) -> Settings {
        Settings {
            facts: self.facts.or(lower.facts),
            questions: self.questions.or(lower.questions),
            embeddings: self.embeddings.or(lower.embeddings),
            index: self.index.or(lower.index),
            checkpoint: self.checkpoint.or(lower.checkpoint),
            report_dir: self.report_dir.or(lower.report_dir),
            preset: self.preset.or(lower.preset),
            tau: self.tau.or(lower.tau),
            top_n: self.top_n.or(lower.top_n),
            cap: self.cap.or(lower.cap),
            loss: self.loss.or(lower.loss),
            lambda: self.lambda.or(lower.lambda),
            epochs: self.epochs.or(lower.epochs),
            batch: self.batch.or(lower.batch),
            lr: self.lr.or(lower.lr),
            negatives: self.negatives.or(lower.negatives),
            seed: self.seed.or(lower.seed),
            max_n: self.max_n.or(lower.max_n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub facts: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub report_dir: PathBuf,
    pub preset: Preset,
    pub ranker: RankerConfig,
    pub train: TrainConfig,
    pub max_n: usize,
}

impl RunConfig {
    /// Merges the three layers and checks every numeric invariant.
    pub fn resolve(
        flags: Settings,
        file: Option<Settings>,
        env_seed: Option<&str>,
    ) -> Result<Self> {
        let env = Settings {
            seed: env_seed
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not a u64 seed")))
                })
                .transpose()?,
            ..Settings::default()
        };
        let s = flags.or(file.unwrap_or_default()).or(env);
        let preset = s.preset.unwrap_or_default();
        let mut ranker = preset.ranker();
        let mut train = preset.train();
        ranker.tau = s.tau.unwrap_or(ranker.tau);
        ranker.candidate_cap = s.cap.unwrap_or(ranker.candidate_cap);
        if let Some(n) = s.top_n {
            ranker.top_n = n;
            train.top_n_subgraph = n;
        }
        train.loss_kind = s.loss.unwrap_or(train.loss_kind);
        train.lambda = s.lambda.unwrap_or(train.lambda);
        train.epochs = s.epochs.unwrap_or(train.epochs);
        train.batch_size = s.batch.unwrap_or(train.batch_size);
        train.learning_rate = s.lr.unwrap_or(train.learning_rate);
        train.negatives_per_question = s.negatives.unwrap_or(train.negatives_per_question);
        train.seed = s.seed.unwrap_or(train.seed);
        ranker.validate()?;
        train.validate()?;
        let max_n = s.max_n.unwrap_or(DEFAULT_MAX_N);
        if max_n < 1 {
            return Err(kbsqa_core::Error::Config("max-n must be >= 1".into()).into());
        }
        Ok(RunConfig {
            facts: s.facts,
            questions: s.questions,
            embeddings: s.embeddings,
            index: s.index,
            checkpoint: s.checkpoint,
            report_dir: s.report_dir.unwrap_or_else(|| PathBuf::from("reports")),
            preset,
            ranker,
            train,
            max_n,
        })
    }

    /// The path of a setting the current command cannot run without.
    pub fn require<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("--{flag} is required for this command")))
    }
}
