//! The work behind each subcommand. Every function reads its inputs from a
//! resolved [`RunConfig`], writes its artifacts and returns the lines the
//! binary prints on stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kbsqa_core::pipeline::{
    evaluate, predict_all, prepare, select_fact, train as train_models, PreparedQuestion,
};
use kbsqa_core::ranker::{rank_subgraph, topn_recall};
use kbsqa_core::tagger::lexicon_tag;
use kbsqa_core::text::tokenize;
use kbsqa_core::{
    EmbeddingTable, EvalReport, KnowledgeGraph, Models, NGramIndex, QuestionRecord, RankedSubgraph,
};

use crate::checkpoint;
use crate::config::{loss_name, RunConfig};
use crate::error::Result;
use crate::{fixtures, io, report};

/// Recall cut-offs reported by `rank` and `eval`, clipped to the subgraph size.
pub const RECALL_NS: [usize; 7] = [1, 5, 10, 20, 50, 100, 200];

pub fn recall_ns(top_n: usize) -> Vec<usize> {
    let mut ns: Vec<usize> = RECALL_NS.iter().copied().filter(|&n| n <= top_n).collect();
    if ns.last() != Some(&top_n) {
        ns.push(top_n);
    }
    ns
}

struct Inputs {
    kg: KnowledgeGraph,
    index: NGramIndex,
    emb: EmbeddingTable,
    questions: Vec<QuestionRecord>,
}

/// Loads facts, the index (or builds it), embeddings and, when given or
/// required, questions. Word frequencies come from the question texts.
fn load(cfg: &RunConfig, questions_required: bool) -> Result<Inputs> {
    let kg = io::load_facts(cfg.require(&cfg.facts, "facts")?)?;
    let questions = match (&cfg.questions, questions_required) {
        (Some(p), _) => io::load_questions(p)?,
        (None, true) => io::load_questions(cfg.require(&cfg.questions, "questions")?)?,
        (None, false) => Vec::new(),
    };
    let mut emb = io::load_embeddings(cfg.require(&cfg.embeddings, "embeddings")?)?;
    emb.set_frequencies_from_corpus(questions.iter().flat_map(|q| tokenize(&q.question)));
    let index = match &cfg.index {
        Some(p) => io::load_index(p)?,
        None => NGramIndex::build(&kg, cfg.max_n)?,
    };
    Ok(Inputs {
        kg,
        index,
        emb,
        questions,
    })
}

fn prepared(cfg: &RunConfig, inputs: &Inputs) -> Vec<PreparedQuestion> {
    prepare(
        &inputs.questions,
        &inputs.kg,
        &inputs.index,
        &inputs.emb,
        &cfg.ranker,
    )
}

pub fn build_index(cfg: &RunConfig) -> Result<Vec<String>> {
    let kg = io::load_facts(cfg.require(&cfg.facts, "facts")?)?;
    let out = cfg.require(&cfg.index, "index")?;
    let index = NGramIndex::build(&kg, cfg.max_n)?;
    io::write_text(out, &io::format_index(&index))?;
    Ok(vec![
        format!("facts={}", kg.len()),
        format!("grams={}", index.postings().len()),
        format!("index={}", out.display()),
    ])
}

pub fn rank(cfg: &RunConfig) -> Result<Vec<String>> {
    let inputs = load(cfg, true)?;
    let questions = prepared(cfg, &inputs);
    let mut table =
        String::from("question\trank\tfact\tsubject\trelation\tliteral\tsemantic\tcombined\n");
    for q in &questions {
        for (r, e) in q.ranked.entries.iter().enumerate() {
            let f = inputs.kg.fact(e.fact).expect("ranked facts exist");
            let _ = writeln!(
                table,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}",
                q.id,
                r + 1,
                f.id,
                f.subject,
                f.relation,
                e.literal,
                e.semantic,
                e.combined
            );
        }
    }
    let ranked: Vec<RankedSubgraph> = questions.iter().map(|q| q.ranked.clone()).collect();
    let gold: Vec<&str> = questions
        .iter()
        .map(|q| q.record.subject.as_str())
        .collect();
    let recalls = recall_ns(cfg.ranker.top_n)
        .into_iter()
        .map(|n| Ok((n, topn_recall(&ranked, &gold, n, &inputs.kg)?)))
        .collect::<Result<Vec<_>>>()?;
    let header = format!(
        "{}# tau={} top_n={} cap={}\n",
        report::header("rank", cfg),
        cfg.ranker.tau,
        cfg.ranker.top_n,
        cfg.ranker.candidate_cap
    );
    report::write(&cfg.report_dir, "rank.tsv", &header, &table)?;
    report::write(
        &cfg.report_dir,
        "recall.tsv",
        &header,
        &report::recall_table(&recalls),
    )?;
    let mut lines: Vec<String> = recalls
        .iter()
        .map(|(n, r)| format!("recall@{n}={r:.6}"))
        .collect();
    lines.push(format!(
        "untaggable={}",
        questions.iter().filter(|q| q.tagged.is_none()).count()
    ));
    Ok(lines)
}

pub fn train(cfg: &RunConfig) -> Result<Vec<String>> {
    let inputs = load(cfg, true)?;
    let out = cfg.require(&cfg.checkpoint, "checkpoint")?;
    let questions = prepared(cfg, &inputs);
    let (subject_preset, relation_preset) = cfg.preset.matchers();
    let mut models = Models::build(
        &subject_preset,
        &relation_preset,
        &inputs.kg,
        &questions,
        cfg.train.seed,
    )?;
    let log = train_models(&questions, &inputs.kg, &mut models, &cfg.train)?;
    checkpoint::save(&models, out)?;
    let header = format!(
        "{}# loss={} lambda={} epochs={} batch={} lr={} negatives={}\n",
        report::header("train", cfg),
        loss_name(cfg.train.loss_kind),
        cfg.train.lambda,
        cfg.train.epochs,
        cfg.train.batch_size,
        cfg.train.learning_rate,
        cfg.train.negatives_per_question
    );
    report::write(
        &cfg.report_dir,
        "loss_curve.tsv",
        &header,
        &report::loss_curve(&log.epoch_losses),
    )?;
    Ok(vec![
        format!("epochs_run={}", log.epoch_losses.len()),
        format!(
            "final_loss={:.9}",
            log.epoch_losses.last().copied().unwrap_or(0.0)
        ),
        format!("skipped_untaggable={}", log.skipped_untaggable),
        format!("checkpoint={}", out.display()),
    ])
}

/// Evaluates the checkpoint on the given questions; returns the report too
/// so callers can inspect it without re-reading files.
pub fn eval_report(cfg: &RunConfig) -> Result<(EvalReport, Vec<String>)> {
    let inputs = load(cfg, true)?;
    let models = checkpoint::load(cfg.require(&cfg.checkpoint, "checkpoint")?)?;
    let questions = prepared(cfg, &inputs);
    let predictions = predict_all(&questions, &inputs.kg, &models)?;
    let report = evaluate(
        &questions,
        &predictions,
        &inputs.kg,
        &recall_ns(cfg.ranker.top_n),
    )?;

    let mut table = String::from(
        "question\tgold_subject\tgold_relation\tgold_object\tsubject\trelation\tobject\tsubject_score\trelation_score\tcombined\tcorrect\n",
    );
    for (q, p) in questions.iter().zip(&predictions) {
        let fact = p.fact.and_then(|id| inputs.kg.fact(id));
        let (s, r, o) = fact.map_or(("-", "-", "-"), |f| {
            (&f.subject[..], &f.relation[..], &f.object[..])
        });
        let correct =
            fact.is_some_and(|f| f.object.to_lowercase() == q.record.object.to_lowercase());
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}\t{s}\t{r}\t{o}\t{:.6}\t{:.6}\t{:.6}\t{}",
            q.id,
            q.record.subject,
            q.record.relation,
            q.record.object,
            p.subject_score,
            p.relation_score,
            p.combined,
            u8::from(correct)
        );
    }
    let header = report::header("eval", cfg);
    report::write(&cfg.report_dir, "eval.tsv", &header, &table)?;
    let summary = report::eval_summary(&report);
    report::write(&cfg.report_dir, "eval_summary.txt", &header, &summary)?;
    Ok((report, summary.lines().map(String::from).collect()))
}

pub fn eval(cfg: &RunConfig) -> Result<Vec<String>> {
    eval_report(cfg).map(|(_, lines)| lines)
}

/// Tags with the lexicon tagger, ranks the subgraph and selects a fact.
pub fn answer(cfg: &RunConfig, question: &str) -> Result<Vec<String>> {
    let inputs = load(cfg, false)?;
    let models = checkpoint::load(cfg.require(&cfg.checkpoint, "checkpoint")?)?;
    let tq = lexicon_tag(question, &inputs.index)?;
    let ranked = rank_subgraph(0, &tq, &inputs.kg, &inputs.index, &inputs.emb, &cfg.ranker);
    let p = select_fact(
        0,
        &tq,
        &ranked,
        &inputs.kg,
        &models.subject,
        &models.relation,
    )?;
    let mut lines = vec![
        format!("mention={}", tq.mention()),
        format!("candidates={}", ranked.entries.len()),
    ];
    match p.fact.and_then(|id| inputs.kg.fact(id)) {
        Some(f) => lines.extend([
            format!("subject={}", f.subject),
            format!("relation={}", f.relation),
            format!("object={}", f.object),
            format!("subject_score={:.6}", p.subject_score),
            format!("relation_score={:.6}", p.relation_score),
            format!("combined={:.6}", p.combined),
        ]),
        None => lines.push("object=".into()),
    }
    Ok(lines)
}

/// Writes every fixture into `dir/<name>/`.
pub fn gen_fixtures(dir: &Path) -> Result<Vec<String>> {
    fixtures::all()
        .iter()
        .map(|f| {
            let path: PathBuf = dir.join(f.name);
            f.write(&path)?;
            Ok(format!("{}={}", f.name, path.display()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recall_cutoffs_end_at_top_n() {
        assert_eq!(recall_ns(10), vec![1, 5, 10]);
        assert_eq!(recall_ns(12), vec![1, 5, 10, 12]);
        assert_eq!(recall_ns(1), vec![1]);
    }
}
