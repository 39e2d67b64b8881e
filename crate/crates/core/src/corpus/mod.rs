//! Pre-parsed meeting transcripts, decision documents and the candidate
//! indicators and arguments enumerated from them.

mod candidates;
mod document;
mod schema;
mod tree;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

pub use candidates::{extract_candidates, ArgumentCandidate, Candidates, IndicatorCandidate};
pub use document::{build_decision_documents, ClusterAssignment, Clustering, DecisionDocument};
pub use tree::{base_label, ConstituentNode, ParseTree};

/// Default number of equal-length segments a decision document is cut into.
pub const DEFAULT_SEGMENTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    /// Lowercase stem.
    pub stem: String,
    /// Penn Treebank tag.
    pub pos: String,
}

impl Token {
    pub fn is_noun(&self) -> bool {
        self.pos.starts_with("NN")
    }

    pub fn is_verb(&self) -> bool {
        self.pos.starts_with("VB")
    }

    pub fn is_personal_pronoun(&self) -> bool {
        self.pos == "PRP" || self.pos == "PRP$"
    }

    pub fn is_proper_noun(&self) -> bool {
        self.pos.starts_with("NNP")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyEdge {
    pub relation: String,
    /// `None` is the ROOT sentinel.
    pub head: Option<usize>,
    pub dependent: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApPart {
    Source,
    Target,
}

impl ApPart {
    pub fn as_str(self) -> &'static str {
        match self {
            ApPart::Source => "source",
            ApPart::Target => "target",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyPairInfo {
    pub ap_type: String,
    pub part: ApPart,
    pub other_da_id: String,
    pub other_is_decision_related: bool,
    pub target_is_positive_feedback: Option<bool>,
    pub source_is_question: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogueAct {
    pub id: String,
    pub meeting_id: String,
    pub order: i64,
    pub speaker: String,
    pub speaker_role: String,
    pub da_type: String,
    pub topic: String,
    pub tokens: Vec<Token>,
    pub parse: ParseTree,
    pub deps: Vec<DependencyEdge>,
    pub adjacency_pair: Option<AdjacencyPairInfo>,
    pub decision_ids: Vec<String>,
}

impl DialogueAct {
    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn span_text(&self, lo: usize, hi: usize) -> String {
        self.tokens[lo..hi]
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The incoming dependency edge of `token`, if any.
    pub fn incoming_edge(&self, token: usize) -> Option<&DependencyEdge> {
        self.deps.iter().find(|e| e.dependent == token)
    }

    pub fn is_decision_related(&self) -> bool {
        !self.decision_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub id: String,
    pub abstract_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Meeting {
    pub id: String,
    /// Sorted by `order`.
    pub dialogue_acts: Vec<Arc<DialogueAct>>,
    pub decisions: Vec<Decision>,
}

impl Meeting {
    pub fn decision(&self, id: &str) -> Option<&Decision> {
        self.decisions.iter().find(|d| d.id == id)
    }

    pub fn drdas(&self) -> impl Iterator<Item = &Arc<DialogueAct>> {
        self.dialogue_acts
            .iter()
            .filter(|da| da.is_decision_related())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub meetings: Vec<Meeting>,
}

impl Corpus {
    pub fn dialogue_acts(&self) -> impl Iterator<Item = &Arc<DialogueAct>> {
        self.meetings.iter().flat_map(|m| m.dialogue_acts.iter())
    }

    pub fn decision(&self, id: &str) -> Option<&Decision> {
        self.meetings.iter().find_map(|m| m.decision(id))
    }
}

/// One validation problem, located by meeting, dialogue act and field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub meeting: String,
    pub dialogue_act: Option<String>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "meeting {}", self.meeting)?;
        if let Some(da) = &self.dialogue_act {
            write!(f, ", dialogue act {da}")?;
        }
        write!(f, ", field {}: {}", self.field, self.message)
    }
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("corpus failed validation: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("dialogue act index {index} out of range for a document of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cluster file line {line}: {message}")]
    ClusterFile { line: usize, message: String },
}

impl CorpusError {
    pub fn is_io(&self) -> bool {
        matches!(self, CorpusError::Io { .. })
    }

    /// Every problem this error carries, for reporting.
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            CorpusError::Invalid(d) => d.iter().map(ToString::to_string).collect(),
            other => vec![other.to_string()],
        }
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    pub fn figure_one() -> Corpus {
        Corpus::from_json_str(include_str!("../../tests/fixtures/figure1.json"))
            .expect("fixture loads")
    }

    pub fn figure_one_docs() -> Vec<DecisionDocument> {
        build_decision_documents(&figure_one(), Clustering::True, DEFAULT_SEGMENTS)
    }

    /// A one-act document wrapping the given dialogue act of the fixture.
    pub fn single_da_doc(da_id: &str) -> DecisionDocument {
        let corpus = figure_one();
        let da = corpus
            .dialogue_acts()
            .find(|d| d.id == da_id)
            .expect("known dialogue act")
            .clone();
        DecisionDocument {
            decision_id: format!("solo-{da_id}"),
            meeting_id: da.meeting_id.clone(),
            das: vec![da],
            gold_abstract: None,
            segments: DEFAULT_SEGMENTS,
        }
    }
}
