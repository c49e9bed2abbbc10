//! In-memory triple store.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::text::normalize;

pub type FactId = u32;

/// One `(subject, relation, object)` triple. `id` is the 0-based position
/// of the fact in its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub id: FactId,
    pub subject: String,
    pub relation: String,
    pub object: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    facts: Vec<Fact>,
    subjects: BTreeSet<String>,
    relations: BTreeSet<String>,
    by_subject: BTreeMap<String, Vec<FactId>>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples<I, S, R, O>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, R, O)>,
        S: AsRef<str>,
        R: AsRef<str>,
        O: AsRef<str>,
    {
        let mut kg = Self::new();
        for (s, r, o) in triples {
            kg.push(s.as_ref(), r.as_ref(), o.as_ref())?;
        }
        Ok(kg)
    }

    /// Appends a fact. The subject is normalized, relation and object are
    /// trimmed. Duplicate triples are kept under distinct ids.
    pub fn push(&mut self, subject: &str, relation: &str, object: &str) -> Result<FactId> {
        let fact = self.facts.len();
        let subject = normalize(subject);
        let relation = relation.trim();
        let object = object.trim();
        for (field, value) in [
            ("subject", subject.as_str()),
            ("relation", relation),
            ("object", object),
        ] {
            if value.is_empty() {
                return Err(Error::EmptyField { fact, field });
            }
        }
        let id = FactId::try_from(fact)
            .map_err(|_| Error::InvalidArgument(alloc::format!("too many facts ({fact})")))?;
        self.subjects.insert(subject.clone());
        self.relations.insert(relation.to_string());
        self.by_subject.entry(subject.clone()).or_default().push(id);
        self.facts.push(Fact {
            id,
            subject,
            relation: relation.to_string(),
            object: object.to_string(),
        });
        Ok(id)
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact(&self, id: FactId) -> Option<&Fact> {
        self.facts.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn subjects(&self) -> &BTreeSet<String> {
        &self.subjects
    }

    pub fn relations(&self) -> &BTreeSet<String> {
        &self.relations
    }

    /// Ids of the facts whose normalized subject equals `subject`.
    pub fn facts_with_subject(&self, subject: &str) -> &[FactId] {
        self.by_subject
            .get(&normalize(subject))
            .map_or(&[], Vec::as_slice)
    }

    /// The id of the first fact equal to the normalized triple, if any.
    pub fn find_fact(&self, subject: &str, relation: &str, object: &str) -> Option<FactId> {
        let (relation, object) = (relation.trim(), object.trim());
        self.facts_with_subject(subject)
            .iter()
            .copied()
            .find(|&id| {
                let f = &self.facts[id as usize];
                f.relation == relation && f.object == object
            })
    }

    pub fn contains_fact(&self, subject: &str, relation: &str, object: &str) -> bool {
        self.find_fact(subject, relation, object).is_some()
    }
}
