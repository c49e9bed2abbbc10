//! Text reports. Every report starts with two `#` lines: the first carries
//! the command and the only timestamp, the second the preset and seed.
//! Bodies are tab-separated tables or `key=value` lines.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use kbsqa_core::EvalReport;

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::write_text;

pub fn header(command: &str, cfg: &RunConfig) -> String {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!(
        "# kbsqa {command} generated_at={now}\n# preset={} seed={}\n",
        cfg.preset.name(),
        cfg.train.seed
    )
}

/// Writes `header` followed by `body` to `dir/name`.
pub fn write(dir: &Path, name: &str, header: &str, body: &str) -> Result<()> {
    write_text(&dir.join(name), &format!("{header}{body}"))
}

/// Drops the timestamp line, leaving content that is byte-identical across
/// repeated runs with identical inputs.
pub fn without_timestamp(report: &str) -> &str {
    report.split_once('\n').map_or("", |(_, rest)| rest)
}

pub fn recall_table(recalls: &[(usize, f64)]) -> String {
    recalls
        .iter()
        .fold(String::from("n\trecall\n"), |mut out, (n, r)| {
            let _ = writeln!(out, "{n}\t{r:.6}");
            out
        })
}

pub fn loss_curve(losses: &[f64]) -> String {
    losses
        .iter()
        .enumerate()
        .fold(String::from("epoch\tloss\n"), |mut out, (e, l)| {
            let _ = writeln!(out, "{}\t{l:.9}", e + 1);
            out
        })
}

pub fn eval_summary(report: &EvalReport) -> String {
    let mut out = format!(
        "total={}\nobject_accuracy={:.6}\nsubject_accuracy={:.6}\nrelation_accuracy={:.6}\nuntaggable={}\nempty_subgraph={}\n",
        report.total,
        report.object_accuracy,
        report.subject_accuracy,
        report.relation_accuracy,
        report.untaggable,
        report.empty_subgraph,
    );
    for (n, r) in &report.topn_recalls {
        let _ = writeln!(out, "recall@{n}={r:.6}");
    }
    out
}

/// Parses `key=value` lines, ignoring `#` lines.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
