use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRef {
    pub da_index: usize,
    pub token_index: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRef {
    pub da_index: usize,
    pub lo: usize,
    pub hi: usize,
    pub text: String,
}

/// The selected triple of one relation type in one decision document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub relation: usize,
    pub decision_id: String,
    pub da_id: String,
    pub indicator: TokenRef,
    pub argument: SpanRef,
    /// Posterior mass of the triple.
    pub probability: f64,
}

impl RelationInstance {
    pub fn render(&self) -> String {
        format!("{} {}", self.indicator.surface, self.argument.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Relations,
    Longest,
    Prototype,
    Upperbound,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Relations => "relations",
            Method::Longest => "longest",
            Method::Prototype => "prototype",
            Method::Upperbound => "upperbound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SummaryItem {
    Relation(RelationInstance),
    DialogueAct { da_id: String, text: String },
    Words { words: Vec<String> },
}

impl SummaryItem {
    pub fn render(&self) -> String {
        match self {
            SummaryItem::Relation(r) => r.render(),
            SummaryItem::DialogueAct { text, .. } => text.clone(),
            SummaryItem::Words { words } => words.join(" "),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub decision_id: String,
    pub method: Method,
    pub items: Vec<SummaryItem>,
}

impl Summary {
    /// Whitespace-joined text of the items, the form scored by ROUGE.
    pub fn render(&self) -> String {
        self.items
            .iter()
            .map(SummaryItem::render)
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationInstance> {
        self.items.iter().filter_map(|i| match i {
            SummaryItem::Relation(r) => Some(r),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub summaries: Vec<Summary>,
}

impl SummaryFile {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summaries serialize");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, PipelineError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| PipelineError::Format(format!("summaries: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }
}
