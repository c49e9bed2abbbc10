//! Deterministic synthetic datasets used by the tests, the acceptance suite
//! and `kbsqa gen-fixtures`.
//!
//! * `toy`: 51 facts whose subjects come in small groups sharing one token,
//!   20 questions; train and test are the same questions.
//! * `synonym`: the toy facts plus 8 pairs of subjects that tie on LCS with
//!   a question mentioning a synonym of the gold subject's middle word.
//! * `overlap`: four families of eight subjects sharing a first name, three
//!   facts each over four relations, so every question has more negative
//!   subjects than negative relations; two facts per subject train, the
//!   third tests.
//!
//! The crossover case is a hand-built subgraph with fixed score tables.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use kbsqa_core::rng::stream;
use kbsqa_core::tagger::oracle_tag;
use kbsqa_core::text::{join_tokens, relation_words, tokenize};
use kbsqa_core::{
    EmbeddingTable, FactId, KnowledgeGraph, PairScorer, QuestionRecord, RankedEntry,
    RankedSubgraph, TaggedQuestion,
};
use rand::Rng;

use crate::error::Result;
use crate::io;

pub const EMBEDDING_DIM: usize = 32;

const BOOK: &str = "book.book-characters.appears-in-book";
const SONG: &str = "music.artist.track";
const BORN: &str = "people.person.place-of-birth";
const JOB: &str = "people.person.profession";
const DIRECTOR: &str = "film.film.directed-by";
const LOCATION: &str = "location.location.containedby";
const AUTHOR: &str = "book.written-work.author";
const SPORT: &str = "sports.sports-team.sport";
const NATIONALITY: &str = "people.person.nationality";
const DEATH: &str = "people.deceased-person.place-of-death";

fn template(relation: &str) -> &'static str {
    match relation {
        BOOK => "which book does {m} appear in ?",
        SONG => "name a song by {m} .",
        BORN => "where was {m} born ?",
        JOB => "what does {m} do for a living ?",
        DIRECTOR => "who directed {m} ?",
        LOCATION => "where is {m} located ?",
        AUTHOR => "who wrote {m} ?",
        SPORT => "what sport does {m} play ?",
        NATIONALITY => "what country is {m} from ?",
        DEATH => "where did {m} die ?",
        other => unreachable!("no template for {other}"),
    }
}

fn ask(relation: &str, mention: &str) -> String {
    template(relation).replace("{m}", mention)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub kg: KnowledgeGraph,
    pub train: Vec<QuestionRecord>,
    pub test: Vec<QuestionRecord>,
    /// GloVe-style rows in file order.
    pub embeddings: Vec<(String, Vec<f64>)>,
}

impl Fixture {
    pub fn embedding_table(&self) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(EMBEDDING_DIM).expect("positive dimension");
        for (w, v) in &self.embeddings {
            t.insert(w, v).expect("fixture vectors are valid");
        }
        t
    }

    /// Writes `facts.tsv`, `train.tsv`, `test.tsv` and `embeddings.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        io::write_text(&dir.join("facts.tsv"), &io::format_facts(&self.kg))?;
        io::write_text(&dir.join("train.tsv"), &io::format_questions(&self.train))?;
        io::write_text(&dir.join("test.tsv"), &io::format_questions(&self.test))?;
        let rows = self
            .embeddings
            .iter()
            .map(|(w, v)| (w.as_str(), v.as_slice()));
        io::write_text(&dir.join("embeddings.txt"), &io::format_embeddings(rows))
    }
}

pub fn all() -> [Fixture; 3] {
    [toy(), synonym(), overlap()]
}

fn record(subject: &str, relation: &str, object: &str, question: String) -> QuestionRecord {
    QuestionRecord {
        subject: subject.into(),
        relation: relation.into(),
        object: object.into(),
        question,
    }
}

/// `(subject, relation, object, asked)`; groups share their first token.
const TOY: &[(&str, &str, &str, bool)] = &[
    (
        "Rufus Scrimgeour",
        BOOK,
        "Harry Potter and the Deathly Hallows",
        true,
    ),
    ("Rufus Wainwright", SONG, "I Don't Know What That Is", false),
    ("Alice Walker", JOB, "Novelist", true),
    ("Alice Springs", LOCATION, "Northern Territory", false),
    ("Jack London", BORN, "San Francisco", false),
    ("Jack Reacher", DIRECTOR, "Christopher McQuarrie", true),
    ("Amelia Earhart", JOB, "Aviator", true),
    ("Amelia Bedelia", AUTHOR, "Peggy Parish", false),
    ("Boston Celtics", SPORT, "Basketball", true),
    ("Boston Harbor", LOCATION, "Massachusetts", false),
    ("Chicago Bulls", SPORT, "Basketball", false),
    ("Chicago", LOCATION, "Illinois", true),
    ("George Orwell", BORN, "Motihari", true),
    ("George Lucas", JOB, "Film Director", false),
    ("Mary Shelley", BORN, "London", false),
    ("Mary Poppins", AUTHOR, "P. L. Travers", true),
    ("Jurassic Park", DIRECTOR, "Steven Spielberg", true),
    ("Jurassic Coast", LOCATION, "Dorset", false),
    ("Moby Dick", AUTHOR, "Herman Melville", true),
    ("Moby Grape", SONG, "Omaha", false),
    ("River Phoenix", JOB, "Actor", false),
    ("Phoenix Suns", SPORT, "Basketball", true),
    ("Toronto Maple Leafs", SPORT, "Ice Hockey", true),
    ("Toronto Zoo", LOCATION, "Ontario", false),
    ("Emily Dickinson", BORN, "Amherst", true),
    ("Emily of New Moon", AUTHOR, "L. M. Montgomery", false),
    ("Sherlock Holmes", BOOK, "A Study in Scarlet", true),
    ("Sherlock Jr", DIRECTOR, "Buster Keaton", false),
    ("Frida Kahlo", BORN, "Coyoacan", false),
    ("Frida Giannini", JOB, "Fashion Designer", false),
    ("Oliver Twist", AUTHOR, "Charles Dickens", true),
    ("Oliver Stone", JOB, "Film Director", false),
    ("Rocky Balboa", DIRECTOR, "Sylvester Stallone", false),
    ("Rocky Mountains", LOCATION, "North America", false),
    (
        "Hermione Granger",
        BOOK,
        "Harry Potter and the Philosopher's Stone",
        true,
    ),
    ("Hermione Norris", JOB, "Actress", false),
    ("Miles Davis", SONG, "So What", true),
    ("Miles City", LOCATION, "Montana", false),
    ("Victoria Beckham", JOB, "Fashion Designer", false),
    ("Victoria Falls", LOCATION, "Zambia", false),
    ("Nelson Mandela", BORN, "Mvezo", true),
    ("Nelson Piquet", JOB, "Racing Driver", false),
    ("Lincoln Memorial", LOCATION, "Washington D. C.", false),
    ("Abraham Lincoln", BORN, "Hodgenville", false),
    ("Bruce Lee", BORN, "San Francisco", false),
    ("Bruce Springsteen", SONG, "Born to Run", true),
    ("Santa Monica", LOCATION, "California", false),
    ("Santa Clara Broncos", SPORT, "Basketball", false),
    ("Paris Hilton", JOB, "Socialite", true),
    ("Paris Texas", DIRECTOR, "Wim Wenders", false),
    ("Paris Saint Germain", SPORT, "Football", false),
];

fn toy_question(subject: &str, relation: &str) -> String {
    if subject == "Rufus Scrimgeour" {
        return "which harry potter series did rufus scrimgeour appear in".into();
    }
    ask(relation, &subject.to_lowercase())
}

fn toy_parts() -> (KnowledgeGraph, Vec<QuestionRecord>) {
    let kg = KnowledgeGraph::from_triples(TOY.iter().map(|&(s, r, o, _)| (s, r, o)))
        .expect("valid toy facts");
    let questions = TOY
        .iter()
        .filter(|t| t.3)
        .map(|&(s, r, o, _)| record(s, r, o, toy_question(s, r)))
        .collect();
    (kg, questions)
}

pub fn toy() -> Fixture {
    let (kg, questions) = toy_parts();
    let embeddings = random_embeddings(&kg, &questions, &[], 1);
    Fixture {
        name: "toy",
        kg,
        train: questions.clone(),
        test: questions,
        embeddings,
    }
}

/// `(prefix, canonical, variant, synonym, suffix, relation, object)`. The
/// gold subject is `prefix canonical suffix`; the distractor swaps in
/// `variant`, which ties with `canonical` on LCS against the mention
/// `prefix synonym suffix`.
const SYNONYMS: &[(&str, &str, &str, &str, &str, &str, &str)] = &[
    (
        "midnight",
        "movie",
        "mover",
        "film",
        "club",
        DIRECTOR,
        "Julia Ormond",
    ),
    (
        "golden", "song", "sing", "tune", "festival", LOCATION, "Aberdeen",
    ),
    (
        "village",
        "doctor",
        "docker",
        "physician",
        "house",
        AUTHOR,
        "Agnes Hale",
    ),
    (
        "lion",
        "king",
        "kind",
        "monarch",
        "island",
        LOCATION,
        "Cape Verde",
    ),
    (
        "silver", "river", "rover", "stream", "valley", LOCATION, "Nevada",
    ),
    (
        "northern",
        "city",
        "cite",
        "town",
        "hall",
        LOCATION,
        "Yorkshire",
    ),
    ("atomic", "big", "bog", "large", "bang", SONG, "Fission"),
    (
        "harbor", "ship", "shop", "vessel", "yard", LOCATION, "Maine",
    ),
];

/// Exactly-mentioned toy questions carried into the synonym fixture.
const SYNONYM_EXACT_QUESTIONS: usize = 15;

pub fn synonym() -> Fixture {
    let (mut kg, toy_questions) = toy_parts();
    let mut questions: Vec<QuestionRecord> = toy_questions
        .into_iter()
        .take(SYNONYM_EXACT_QUESTIONS)
        .collect();
    let mut synonyms = Vec::new();
    for &(prefix, canonical, variant, synonym, suffix, relation, object) in SYNONYMS {
        let gold = format!("{prefix} {canonical} {suffix}");
        // Distractor first so it wins fact-id ties.
        kg.push(&format!("{prefix} {variant} {suffix}"), JOB, "Decoy")
            .expect("valid fact");
        kg.push(&gold, relation, object).expect("valid fact");
        questions.push(record(
            &gold,
            relation,
            object,
            ask(relation, &format!("{prefix} {synonym} {suffix}")),
        ));
        synonyms.push((canonical, synonym));
    }
    let embeddings = random_embeddings(&kg, &questions, &synonyms, 2);
    Fixture {
        name: "synonym",
        kg,
        train: questions.clone(),
        test: questions,
        embeddings,
    }
}

const FAMILIES: &[(&str, [&str; 8])] = &[
    (
        "john",
        [
            "adams", "brown", "cena", "lennon", "muir", "wayne", "keats", "locke",
        ],
    ),
    (
        "mary",
        [
            "astor",
            "cassatt",
            "leakey",
            "pickford",
            "seacole",
            "wollstonecraft",
            "anning",
            "somerville",
        ],
    ),
    (
        "william",
        [
            "blake",
            "morris",
            "penn",
            "tell",
            "wallace",
            "wordsworth",
            "harvey",
            "herschel",
        ],
    ),
    (
        "elizabeth",
        [
            "bishop", "fry", "gaskell", "holmes", "taylor", "warren", "garrett", "montagu",
        ],
    ),
];

const PERSON_RELATIONS: [&str; 4] = [BORN, JOB, NATIONALITY, DEATH];

const PLACES: &[&str] = &[
    "Quincy",
    "Torrington",
    "Liverpool",
    "Dunbar",
    "Winterset",
    "Ohio",
    "Bristol",
    "Kingston",
    "Nairobi",
    "Toronto",
    "Glasgow",
    "Lambeth",
    "Pittsburgh",
    "Leeds",
    "Cheshire",
    "Norwich",
    "Worcester",
    "Sligo",
];

fn overlap_object(relation: &str, f: usize, i: usize) -> String {
    let n = f * 8 + i;
    match relation {
        JOB => [
            "Painter",
            "Poet",
            "Activist",
            "Actor",
            "Naturalist",
            "Wrestler",
        ][n % 6]
            .to_string(),
        NATIONALITY => ["England", "Scotland", "United States", "Jamaica"][n % 4].to_string(),
        _ => PLACES[(n * 7 + relation.len()) % PLACES.len()].to_string(),
    }
}

pub fn overlap() -> Fixture {
    let mut kg = KnowledgeGraph::new();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (f, (first, surnames)) in FAMILIES.iter().enumerate() {
        for (i, surname) in surnames.iter().enumerate() {
            let subject = format!("{first} {surname}");
            for k in 0..3 {
                let relation = PERSON_RELATIONS[(i + k) % PERSON_RELATIONS.len()];
                let object = overlap_object(relation, f, i);
                kg.push(&subject, relation, &object).expect("valid fact");
                let q = record(&subject, relation, &object, ask(relation, &subject));
                if k < 2 {
                    train.push(q);
                } else {
                    test.push(q);
                }
            }
        }
    }
    let all: Vec<QuestionRecord> = train.iter().chain(&test).cloned().collect();
    let embeddings = random_embeddings(&kg, &all, &[], 3);
    Fixture {
        name: "overlap",
        kg,
        train,
        test,
        embeddings,
    }
}

/// Unit-scale random vectors, rounded to 6 decimals, for every token of
/// every subject and question. Each `(canonical, synonym)` pair shares a
/// direction up to small noise.
fn random_embeddings(
    kg: &KnowledgeGraph,
    questions: &[QuestionRecord],
    synonyms: &[(&str, &str)],
    seed: u64,
) -> Vec<(String, Vec<f64>)> {
    let mut words: BTreeSet<String> = kg.subjects().iter().flat_map(|s| tokenize(s)).collect();
    words.extend(questions.iter().flat_map(|q| tokenize(&q.question)));
    let mut rng = stream(seed, &[0x656d62]);
    let scale = 1.0 / (EMBEDDING_DIM as f64).sqrt();
    let mut draw = |base: Option<&Vec<f64>>, noise: f64| -> Vec<f64> {
        (0..EMBEDDING_DIM)
            .map(|j| {
                let x = base.map_or(0.0, |b| b[j]) + noise * rng.random_range(-scale..scale);
                (x * 1e6).round() / 1e6
            })
            .collect()
    };
    let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for w in &words {
        let v = draw(None, 1.0);
        vectors.insert(w.clone(), v);
    }
    for (canonical, synonym) in synonyms {
        let base = vectors[*canonical].clone();
        vectors.insert((*synonym).to_string(), draw(Some(&base), 0.1));
    }
    vectors.into_iter().collect()
}

/// Scores looked up by the space-joined right-hand tokens of a pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableScorer(pub BTreeMap<String, f64>);

impl PairScorer for TableScorer {
    fn score_pair(&self, _left: &[String], right: &[String]) -> kbsqa_core::Result<f64> {
        let key = join_tokens(right);
        self.0.get(&key).copied().ok_or_else(|| {
            kbsqa_core::Error::InvalidArgument(format!("no table score for {key:?}"))
        })
    }
}

/// A question whose gold subject is only second by subject score and whose
/// gold relation is only fourth by relation score, but whose fact has the
/// best summed score.
#[derive(Debug, Clone)]
pub struct Crossover {
    pub kg: KnowledgeGraph,
    pub tagged: TaggedQuestion,
    pub ranked: RankedSubgraph,
    pub subjects: TableScorer,
    pub relations: TableScorer,
    pub gold: FactId,
}

pub fn crossover() -> Crossover {
    // (subject, subject score, relation, relation score, object)
    let rows: [(&str, f64, &str, f64, &str); 6] = [
        (
            "king of lydia",
            2.0,
            "royalty.noble-title.holders",
            0.2,
            "Croesus",
        ),
        ("croesus", 1.5, "people.person.profession", 0.4, "Monarch"),
        (
            "alyattes of lydia",
            0.5,
            "people.person.children",
            3.0,
            "Croesus",
        ),
        (
            "lydia",
            0.8,
            "location.location.people-born-here",
            2.9,
            "Croesus",
        ),
        (
            "croesus and the oracle",
            1.0,
            "book.written-work.subjects",
            2.8,
            "Croesus",
        ),
        (
            "croesus",
            1.5,
            "people.person.parents",
            2.7,
            "Alyattes of Lydia",
        ),
    ];
    let kg =
        KnowledgeGraph::from_triples(rows.iter().map(|r| (r.0, r.2, r.4))).expect("valid facts");
    let subjects = TableScorer(
        rows.iter()
            .map(|r| (join_tokens(&tokenize(r.0)), r.1))
            .collect(),
    );
    let relations = TableScorer(
        rows.iter()
            .map(|r| (join_tokens(&relation_words(r.2)), r.3))
            .collect(),
    );
    let tagged = oracle_tag(
        "who was the king of lydia and croesus's father ?",
        "croesus",
    )
    .expect("mention present");
    let entries = (0..rows.len() as FactId)
        .map(|fact| RankedEntry {
            fact,
            literal: 0.0,
            semantic: 0.0,
            combined: 0.0,
        })
        .collect();
    Crossover {
        kg,
        tagged,
        ranked: RankedSubgraph {
            question_id: 0,
            entries,
        },
        subjects,
        relations,
        gold: 5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kbsqa_core::lcs::lcs_length;
    use kbsqa_core::ranker::semantic_log_prob;

    #[test]
    fn fixtures_meet_their_size_floors() {
        let toy = toy();
        assert!(toy.kg.len() >= 50 && toy.train.len() == 20);
        let syn = synonym();
        assert!(syn.kg.len() >= 50 && syn.test.len() >= 20);
        let o = overlap();
        assert_eq!((o.kg.len(), o.train.len(), o.test.len()), (96, 64, 32));
    }

    #[test]
    fn every_question_is_taggable_and_answerable() {
        for f in all() {
            for q in f.train.iter().chain(&f.test) {
                assert!(
                    oracle_tag(&q.question, &q.subject).is_ok(),
                    "{}: {}",
                    f.name,
                    q.question
                );
                assert!(
                    f.kg.contains_fact(&q.subject, &q.relation, &q.object),
                    "{}: {}",
                    f.name,
                    q.question
                );
            }
        }
    }

    #[test]
    fn toy_groups_share_tokens_only_internally() {
        let kg = toy().kg;
        let first: Vec<String> = kg
            .facts()
            .iter()
            .map(|f| tokenize(&f.subject)[0].clone())
            .collect();
        for a in kg.facts() {
            for b in kg.facts() {
                let shared = tokenize(&a.subject)
                    .iter()
                    .any(|t| tokenize(&b.subject).contains(t));
                let same_group = first[a.id as usize] == first[b.id as usize]
                    || (a.subject.contains("lincoln") && b.subject.contains("lincoln"))
                    || (a.subject.contains("phoenix") && b.subject.contains("phoenix"));
                assert_eq!(shared, same_group, "{} / {}", a.subject, b.subject);
                if same_group && a.id != b.id {
                    assert_ne!(a.relation, b.relation);
                }
            }
        }
    }

    #[test]
    fn synonym_distractors_tie_on_lcs_and_lose_on_semantics() {
        let f = synonym();
        let emb = f.embedding_table();
        for &(prefix, canonical, variant, synonym, suffix, _, _) in SYNONYMS {
            let mention = format!("{prefix} {synonym} {suffix}");
            let gold = format!("{prefix} {canonical} {suffix}");
            let decoy = format!("{prefix} {variant} {suffix}");
            assert_eq!(
                lcs_length(&mention, &gold),
                lcs_length(&mention, &decoy),
                "{mention}"
            );
            let m = tokenize(&mention);
            let g = semantic_log_prob(&tokenize(&gold), &m, &emb);
            let d = semantic_log_prob(&tokenize(&decoy), &m, &emb);
            assert!(g > d + 0.2, "{mention}: {g} vs {d}");
            let tq = oracle_tag(&ask(LOCATION, &mention), &gold).unwrap();
            assert_eq!(tq.mention(), mention);
        }
    }

    #[test]
    fn crossover_gold_is_second_by_subject_and_fourth_by_relation() {
        let c = crossover();
        let gold = c.kg.fact(c.gold).unwrap();
        let s = |x: &str| c.subjects.0[&join_tokens(&tokenize(x))];
        let r = |x: &str| c.relations.0[&join_tokens(&relation_words(x))];
        let above = |score: f64, all: Vec<f64>| all.into_iter().filter(|&v| v > score).count();
        let subject_scores: BTreeSet<_> =
            c.kg.subjects()
                .iter()
                .map(|x| (s(x) * 10.0) as i64)
                .collect();
        assert_eq!(
            subject_scores
                .iter()
                .rev()
                .position(|&v| v == (s(&gold.subject) * 10.0) as i64),
            Some(1)
        );
        assert_eq!(
            above(
                r(&gold.relation),
                c.kg.relations().iter().map(|x| r(x)).collect()
            ),
            3
        );
        assert_eq!(c.tagged.mention(), "croesus");
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(all(), all());
    }
}
