use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kbsqa::config::{parse_loss, Preset, RunConfig, Settings, SEED_ENV};
use kbsqa::{commands, io, Error};
use kbsqa_core::LossKind;

#[derive(Parser)]
#[command(
    name = "kbsqa",
    version,
    about = "Simple-question answering over a knowledge graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the n-gram index over fact subjects and write it to --index.
    BuildIndex(Flags),
    /// Rank the subgraph of every question and report top-n recall.
    Rank(Flags),
    /// Train the subject and relation matchers and write --checkpoint.
    Train(Flags),
    /// Answer every question with a trained checkpoint and report accuracy.
    Eval(Flags),
    /// Answer one question given with --question.
    Answer {
        #[command(flatten)]
        flags: Flags,
        #[arg(long)]
        question: String,
    },
    /// Write the synthetic fixtures into a directory.
    GenFixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Flags {
    /// Plain-text key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Facts file: subject<TAB>relation<TAB>object per line
    #[arg(long)]
    facts: Option<PathBuf>,
    /// Questions file: subject<TAB>relation<TAB>object<TAB>question
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Word vectors in GloVe text layout
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// N-gram index file; built in memory when absent
    #[arg(long)]
    index: Option<PathBuf>,
    /// Matcher checkpoint (JSQA1)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Directory for reports [default: reports]
    #[arg(long)]
    report_dir: Option<PathBuf>,
    /// paper or desk [default: desk]
    #[arg(long, value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<Preset>()))]
    preset: Option<Preset>,
    /// Literal weight in the combined ranking score
    #[arg(long)]
    tau: Option<f64>,
    /// Ranked subgraph size, used in training and inference
    #[arg(long)]
    top_n: Option<usize>,
    /// Candidates retrieved before ranking
    #[arg(long)]
    cap: Option<usize>,
    /// well-order or ranking
    #[arg(long, value_parser = clap::builder::ValueParser::new(parse_loss))]
    loss: Option<LossKind>,
    /// Hinge margin
    #[arg(long)]
    lambda: Option<f64>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Questions per optimizer step
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Negatives sampled per question and matcher
    #[arg(long)]
    negatives: Option<usize>,
    /// Seed for initialization and sampling; falls back to KBSQA_SEED
    #[arg(long)]
    seed: Option<u64>,
    /// Longest n-gram indexed by build-index [default: 3]
    #[arg(long)]
    max_n: Option<usize>,
}

impl Flags {
    fn resolve(self) -> Result<RunConfig, Error> {
        let file = match &self.config {
            Some(path) => Some(Settings::parse_file(&io::read_text(path)?, path)?),
            None => None,
        };
        let flags = Settings {
            facts: self.facts,
            questions: self.questions,
            embeddings: self.embeddings,
            index: self.index,
            checkpoint: self.checkpoint,
            report_dir: self.report_dir,
            preset: self.preset,
            tau: self.tau,
            top_n: self.top_n,
            cap: self.cap,
            loss: self.loss,
            lambda: self.lambda,
            epochs: self.epochs,
            batch: self.batch,
            lr: self.lr,
            negatives: self.negatives,
            seed: self.seed,
            max_n: self.max_n,
        };
        let env_seed = std::env::var(SEED_ENV).ok();
        RunConfig::resolve(flags, file, env_seed.as_deref())
    }
}

fn run(cli: Cli) -> Result<Vec<String>, Error> {
    match cli.command {
        Command::BuildIndex(f) => commands::build_index(&f.resolve()?),
        Command::Rank(f) => commands::rank(&f.resolve()?),
        Command::Train(f) => commands::train(&f.resolve()?),
        Command::Eval(f) => commands::eval(&f.resolve()?),
        Command::Answer { flags, question } => commands::answer(&flags.resolve()?, &question),
        Command::GenFixtures { out } => commands::gen_fixtures(&out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(lines) => {
            // A closed stdout (e.g. piped into `head`) is not an error.
            let mut out = std::io::stdout().lock();
            for l in lines {
                if writeln!(out, "{l}").is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = e.to_string().replace(['\n', '\t'], " ");
            eprintln!("error\tkind={}\tmessage={message}", e.kind());
            ExitCode::FAILURE
        }
    }
}
