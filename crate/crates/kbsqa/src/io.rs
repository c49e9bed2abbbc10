//! Plain-text file formats. Every format is UTF-8 with `\n` line endings;
//! blank lines and lines starting with `#` are ignored on input.
//!
//! | file       | line format                                   |
//! |------------|-----------------------------------------------|
//! | facts      | `subject\trelation\tobject`                   |
//! | questions  | `subject\trelation\tobject\tquestion`         |
//! | embeddings | `word v1 v2 … vd` (GloVe text)                |
//! | index      | header `kbsqa-index v1\tmax_n=N\tfacts=F`, then `gram\tid id …` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use kbsqa_core::{EmbeddingTable, FactId, KnowledgeGraph, NGramIndex, QuestionRecord};

use crate::error::{Error, Result};

const INDEX_MAGIC: &str = "kbsqa-index v1";

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Numbered content lines, skipping blanks and comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn fields<'a>(line: &'a str, n: usize, path: &Path, no: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != n {
        return Err(Error::parse(
            path,
            no,
            format!("expected {n} tab-separated fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

pub fn parse_facts(text: &str, path: &Path) -> Result<KnowledgeGraph> {
    let mut kg = KnowledgeGraph::new();
    for (no, line) in content_lines(text) {
        let f = fields(line, 3, path, no)?;
        kg.push(f[0], f[1], f[2])
            .map_err(|e| Error::parse(path, no, e.to_string()))?;
    }
    Ok(kg)
}

pub fn load_facts(path: &Path) -> Result<KnowledgeGraph> {
    parse_facts(&read_text(path)?, path)
}

pub fn format_facts(kg: &KnowledgeGraph) -> String {
    kg.facts().iter().fold(String::new(), |mut out, f| {
        let _ = writeln!(out, "{}\t{}\t{}", f.subject, f.relation, f.object);
        out
    })
}

pub fn parse_questions(text: &str, path: &Path) -> Result<Vec<QuestionRecord>> {
    content_lines(text)
        .map(|(no, line)| {
            let f = fields(line, 4, path, no)?;
            if f.iter().any(|s| s.trim().is_empty()) {
                return Err(Error::parse(path, no, "empty field"));
            }
            Ok(QuestionRecord {
                subject: f[0].trim().to_string(),
                relation: f[1].trim().to_string(),
                object: f[2].trim().to_string(),
                question: f[3].trim().to_string(),
            })
        })
        .collect()
}

pub fn load_questions(path: &Path) -> Result<Vec<QuestionRecord>> {
    parse_questions(&read_text(path)?, path)
}

pub fn format_questions(records: &[QuestionRecord]) -> String {
    records.iter().fold(String::new(), |mut out, q| {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            q.subject, q.relation, q.object, q.question
        );
        out
    })
}

/// Reads GloVe-style vectors. The first vector fixes the dimension; words
/// are stored lowercased and must be unique after lowercasing.
pub fn parse_embeddings(text: &str, path: &Path) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    for (no, line) in content_lines(text) {
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default().to_lowercase();
        let values = parts
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(path, no, format!("bad number {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(Error::parse(path, no, "word without vector"));
        }
        let t = match &mut table {
            Some(t) => t,
            None => table.insert(
                EmbeddingTable::new(values.len())
                    .map_err(|e| Error::parse(path, no, e.to_string()))?,
            ),
        };
        if t.vector(&word).is_some() {
            return Err(Error::parse(path, no, format!("duplicate word {word:?}")));
        }
        t.insert(&word, &values)
            .map_err(|e| Error::parse(path, no, e.to_string()))?;
    }
    table.ok_or_else(|| Error::parse(path, 0, "no vectors"))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(&read_text(path)?, path)
}

pub fn format_embeddings<'a>(rows: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> String {
    rows.into_iter().fold(String::new(), |mut out, (w, v)| {
        out.push_str(w);
        for x in v {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
        out
    })
}

pub fn format_index(index: &NGramIndex) -> String {
    let mut out = format!(
        "{INDEX_MAGIC}\tmax_n={}\tfacts={}\n",
        index.max_n(),
        index.fact_count()
    );
    for (gram, ids) in index.postings() {
        let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{gram}\t{}", ids.join(" "));
    }
    out
}

fn header_value(part: Option<&str>, key: &str, path: &Path) -> Result<usize> {
    part.and_then(|p| p.strip_prefix(key))
        .and_then(|p| p.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(path, 1, format!("index header lacks {key}=<number>")))
}

pub fn parse_index(text: &str, path: &Path) -> Result<NGramIndex> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let mut parts = header.split('\t');
    if parts.next() != Some(INDEX_MAGIC) {
        return Err(Error::parse(
            path,
            1,
            format!("expected {INDEX_MAGIC:?} header"),
        ));
    }
    let max_n = header_value(parts.next(), "max_n", path)?;
    let facts = header_value(parts.next(), "facts", path)?;
    let mut postings = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        let (gram, ids) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, no, "expected gram<TAB>ids"))?;
        let ids = ids
            .split(' ')
            .map(|s| {
                s.parse::<FactId>()
                    .map_err(|_| Error::parse(path, no, format!("bad fact id {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if postings.insert(gram.to_string(), ids).is_some() {
            return Err(Error::parse(path, no, format!("duplicate gram {gram:?}")));
        }
    }
    Ok(NGramIndex::from_postings(max_n, facts, postings)?)
}

pub fn load_index(path: &Path) -> Result<NGramIndex> {
    parse_index(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn facts_round_trip_and_skip_comments() {
        let text =
            "# comment\nRufus Scrimgeour\tbook.book-characters.appears-in-book\tHarry Potter\n\n";
        let kg = parse_facts(text, p()).unwrap();
        assert_eq!(kg.len(), 1);
        assert_eq!(kg.facts()[0].subject, "rufus scrimgeour");
        assert_eq!(parse_facts(&format_facts(&kg), p()).unwrap(), kg);
    }

    #[test]
    fn malformed_lines_name_their_line() {
        match parse_facts("a\tb\tc\nonly two\tfields\n", p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_facts("a\t \tc\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_questions("a\tb\tc\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn questions_round_trip() {
        let q = vec![QuestionRecord {
            subject: "rufus scrimgeour".into(),
            relation: "r".into(),
            object: "o".into(),
            question: "who ?".into(),
        }];
        assert_eq!(parse_questions(&format_questions(&q), p()).unwrap(), q);
    }

    #[test]
    fn embeddings_are_lowercased_and_checked() {
        let t = parse_embeddings("Film 1 0\nmovie 0 2\n", p()).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.vector("film"), Some(&[1.0, 0.0][..]));
        assert_eq!(t.vector("movie"), Some(&[0.0, 1.0][..]));
        assert!(matches!(
            parse_embeddings("a 1 0\nb 1\n", p()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_embeddings("a 1 x\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_embeddings("a 1\nA 1\n", p()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_embeddings("", p()).is_err());
    }

    #[test]
    fn index_round_trip() {
        let kg =
            KnowledgeGraph::from_triples([("new york city", "r", "o"), ("the new york", "r", "o")])
                .unwrap();
        let index = NGramIndex::build(&kg, 3).unwrap();
        let text = format_index(&index);
        assert!(text.starts_with("kbsqa-index v1\tmax_n=3\tfacts=2\n"));
        assert!(text.contains("new york\t0 1\n"));
        assert_eq!(parse_index(&text, p()).unwrap(), index);
        assert!(parse_index("kbsqa-index v1\tmax_n=1\tfacts=1\nx\t3\n", p()).is_err());
        assert!(parse_index("nope\n", p()).is_err());
    }

    #[test]
    fn missing_files_are_named() {
        let err = load_facts(Path::new("/nonexistent/facts.tsv")).unwrap_err();
        assert_eq!(err.kind(), "missing-file");
    }
}
