use std::fs;
use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;

use super::{Corpus, CorpusError, DialogueAct};

/// A time-ordered cluster of decision-related dialogue acts.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionDocument {
    pub decision_id: String,
    pub meeting_id: String,
    pub das: Vec<Arc<DialogueAct>>,
    pub gold_abstract: Option<String>,
    /// Number of equal-length segments (L).
    pub segments: usize,
}

impl DecisionDocument {
    pub fn len(&self) -> usize {
        self.das.len()
    }

    pub fn is_empty(&self) -> bool {
        self.das.is_empty()
    }

    /// Segment id `floor(j * L / n)` of the `j`-th dialogue act.
    pub fn segment_of(&self, da_index: usize) -> Result<usize, CorpusError> {
        let n = self.das.len();
        if da_index >= n {
            return Err(CorpusError::IndexOutOfRange {
                index: da_index,
                len: n,
            });
        }
        Ok(da_index * self.segments / n)
    }

    /// Offset of a token counted from the start of the document.
    pub fn token_offset(&self, da_index: usize, token: usize) -> usize {
        self.das[..da_index]
            .iter()
            .map(|d| d.tokens.len())
            .sum::<usize>()
            + token
    }
}

/// How dialogue acts are grouped into decision documents.
#[derive(Debug, Clone, Copy)]
pub enum Clustering<'a> {
    /// The annotated decision labels.
    True,
    /// An externally supplied clustering (system clusterings).
    Provided(&'a ClusterAssignment),
}

/// `da_id -> cluster_id`, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub entries: IndexMap<String, String>,
}

impl ClusterAssignment {
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut entries = IndexMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(da), Some(cluster), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(CorpusError::ClusterFile {
                    line: i + 1,
                    message: "expected `da_id<TAB>cluster_id`".into(),
                });
            };
            if entries
                .insert(da.to_string(), cluster.to_string())
                .is_some()
            {
                return Err(CorpusError::ClusterFile {
                    line: i + 1,
                    message: format!("dialogue act {da} assigned twice"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|(da, c)| format!("{da}\t{c}\n"))
            .collect()
    }

    pub fn cluster_count(&self) -> usize {
        let mut seen: Vec<&String> = self.entries.values().collect();
        seen.sort();
        seen.dedup();
        seen.len()
    }
}

/// Groups dialogue acts into decision documents.
///
/// With the true clustering, a dialogue act supporting several decisions is
/// placed in each of their documents and the decision abstract is attached.
/// With a provided clustering, each cluster becomes one document whose gold
/// abstract is that of the decision most of its members support.
pub fn build_decision_documents(
    corpus: &Corpus,
    clustering: Clustering<'_>,
    segments: usize,
) -> Vec<DecisionDocument> {
    assert!(segments >= 1, "segment count must be positive");
    match clustering {
        Clustering::True => true_documents(corpus, segments),
        Clustering::Provided(assign) => provided_documents(corpus, assign, segments),
    }
}

fn true_documents(corpus: &Corpus, segments: usize) -> Vec<DecisionDocument> {
    let mut docs = Vec::new();
    for m in &corpus.meetings {
        for dec in &m.decisions {
            let das: Vec<_> = m
                .dialogue_acts
                .iter()
                .filter(|da| da.decision_ids.iter().any(|d| d == &dec.id))
                .cloned()
                .collect();
            if das.is_empty() {
                log::warn!(
                    "decision {} has no supporting dialogue acts; skipped",
                    dec.id
                );
                continue;
            }
            docs.push(DecisionDocument {
                decision_id: dec.id.clone(),
                meeting_id: m.id.clone(),
                das,
                gold_abstract: Some(dec.abstract_text.clone()),
                segments,
            });
        }
    }
    docs
}

fn provided_documents(
    corpus: &Corpus,
    assign: &ClusterAssignment,
    segments: usize,
) -> Vec<DecisionDocument> {
    let mut groups: IndexMap<&str, Vec<Arc<DialogueAct>>> = IndexMap::new();
    for da in corpus.dialogue_acts() {
        if let Some(cluster) = assign.entries.get(&da.id) {
            groups
                .entry(cluster.as_str())
                .or_default()
                .push(Arc::clone(da));
        }
    }
    groups
        .into_iter()
        .map(|(cluster, das)| {
            let meeting_id = das[0].meeting_id.clone();
            let gold_abstract = majority_decision(&das)
                .and_then(|id| corpus.decision(&id))
                .map(|d| d.abstract_text.clone());
            DecisionDocument {
                decision_id: cluster.to_string(),
                meeting_id,
                das,
                gold_abstract,
                segments,
            }
        })
        .collect()
}

fn majority_decision(das: &[Arc<DialogueAct>]) -> Option<String> {
    let mut counts: IndexMap<&str, usize> = IndexMap::new();
    for da in das {
        for d in &da.decision_ids {
            *counts.entry(d.as_str()).or_default() += 1;
        }
    }
    let best = counts.values().copied().max()?;
    counts
        .into_iter()
        .find(|&(_, c)| c == best)
        .map(|(d, _)| d.to_string())
}
