//! On-disk corpus format (JSON) and its validation into domain types.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tree::{ConstituentNode, ParseTree};
use super::{
    AdjacencyPairInfo, ApPart, Corpus, CorpusError, Decision, DependencyEdge, Diagnostic,
    DialogueAct, Meeting, Token,
};
use crate::text;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusRecord {
    meetings: Vec<MeetingRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeetingRecord {
    id: String,
    dialogue_acts: Vec<DaRecord>,
    #[serde(default)]
    decisions: Vec<DecisionRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionRecord {
    id: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DaRecord {
    id: String,
    order: i64,
    #[serde(default)]
    speaker: String,
    #[serde(default)]
    speaker_role: String,
    #[serde(default)]
    da_type: String,
    #[serde(default)]
    topic: String,
    tokens: Vec<TokenRecord>,
    constituents: ConstituentRecord,
    #[serde(default)]
    dependencies: Vec<DependencyRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adjacency_pair: Option<ApRecord>,
    #[serde(default)]
    decision_ids: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenRecord {
    surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stem: Option<String>,
    pos: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstituentRecord {
    label: String,
    lo: usize,
    hi: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<ConstituentRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DependencyRecord {
    rel: String,
    /// `null` marks the ROOT.
    head: Option<usize>,
    dep: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApRecord {
    ap_type: String,
    part: ApPart,
    other_da_id: String,
    other_is_decision_related: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_is_positive_feedback: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_is_question: Option<bool>,
}

impl Corpus {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, CorpusError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let record: CorpusRecord =
            serde_path_to_error::deserialize(de).map_err(|e| CorpusError::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        validate(record)
    }

    pub fn to_json_string(&self) -> String {
        let record = CorpusRecord {
            meetings: self.meetings.iter().map(meeting_record).collect(),
        };
        serde_json::to_string_pretty(&record).expect("corpus serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn meeting_record(m: &Meeting) -> MeetingRecord {
    MeetingRecord {
        id: m.id.clone(),
        dialogue_acts: m.dialogue_acts.iter().map(|da| da_record(da)).collect(),
        decisions: m
            .decisions
            .iter()
            .map(|d| DecisionRecord {
                id: d.id.clone(),
                abstract_text: d.abstract_text.clone(),
            })
            .collect(),
    }
}

fn da_record(da: &DialogueAct) -> DaRecord {
    DaRecord {
        id: da.id.clone(),
        order: da.order,
        speaker: da.speaker.clone(),
        speaker_role: da.speaker_role.clone(),
        da_type: da.da_type.clone(),
        topic: da.topic.clone(),
        tokens: da
            .tokens
            .iter()
            .map(|t| TokenRecord {
                surface: t.surface.clone(),
                stem: Some(t.stem.clone()),
                pos: t.pos.clone(),
            })
            .collect(),
        constituents: constituent_record(&da.parse, da.parse.root()),
        dependencies: da
            .deps
            .iter()
            .map(|e| DependencyRecord {
                rel: e.relation.clone(),
                head: e.head,
                dep: e.dependent,
            })
            .collect(),
        adjacency_pair: da.adjacency_pair.as_ref().map(|ap| ApRecord {
            ap_type: ap.ap_type.clone(),
            part: ap.part,
            other_da_id: ap.other_da_id.clone(),
            other_is_decision_related: ap.other_is_decision_related,
            target_is_positive_feedback: ap.target_is_positive_feedback,
            source_is_question: ap.source_is_question,
        }),
        decision_ids: da.decision_ids.clone(),
    }
}

fn constituent_record(tree: &ParseTree, id: usize) -> ConstituentRecord {
    let n = tree.node(id);
    ConstituentRecord {
        label: n.label.clone(),
        lo: n.lo,
        hi: n.hi,
        head: n.head,
        children: n
            .children
            .iter()
            .map(|&c| constituent_record(tree, c))
            .collect(),
    }
}

struct Validator {
    diags: Vec<Diagnostic>,
}

impl Validator {
    fn report(&mut self, meeting: &str, da: Option<&str>, field: &str, message: String) {
        self.diags.push(Diagnostic {
            meeting: meeting.to_string(),
            dialogue_act: da.map(str::to_string),
            field: field.to_string(),
            message,
        });
    }
}

fn validate(record: CorpusRecord) -> Result<Corpus, CorpusError> {
    let mut v = Validator { diags: Vec::new() };
    let mut meeting_ids = HashSet::new();
    let mut da_ids = HashSet::new();
    let mut decision_ids = HashSet::new();
    let mut meetings = Vec::with_capacity(record.meetings.len());

    for m in record.meetings {
        if m.id.is_empty() {
            v.report("<unnamed>", None, "id", "meeting id is empty".into());
        }
        if !meeting_ids.insert(m.id.clone()) {
            v.report(&m.id, None, "id", "duplicate meeting id".into());
        }
        let mut decisions = Vec::with_capacity(m.decisions.len());
        let mut local_decisions = HashSet::new();
        for d in m.decisions {
            if !decision_ids.insert(d.id.clone()) {
                v.report(
                    &m.id,
                    None,
                    "decisions.id",
                    format!("duplicate decision id {}", d.id),
                );
            }
            local_decisions.insert(d.id.clone());
            decisions.push(Decision {
                id: d.id,
                abstract_text: d.abstract_text,
            });
        }

        let local_das: HashMap<String, bool> = m
            .dialogue_acts
            .iter()
            .map(|da| (da.id.clone(), !da.decision_ids.is_empty()))
            .collect();
        let mut orders = HashSet::new();
        let mut das = Vec::with_capacity(m.dialogue_acts.len());
        for da in m.dialogue_acts {
            if !da_ids.insert(da.id.clone()) {
                v.report(
                    &m.id,
                    Some(&da.id),
                    "id",
                    "duplicate dialogue act id".into(),
                );
            }
            if !orders.insert(da.order) {
                v.report(
                    &m.id,
                    Some(&da.id),
                    "order",
                    format!("order {} repeated within meeting", da.order),
                );
            }
            for dec in &da.decision_ids {
                if !local_decisions.contains(dec) {
                    v.report(
                        &m.id,
                        Some(&da.id),
                        "decision_ids",
                        format!("unknown decision {dec}"),
                    );
                }
            }
            if let Some(ap) = &da.adjacency_pair {
                if !local_das.contains_key(&ap.other_da_id) {
                    v.report(
                        &m.id,
                        Some(&da.id),
                        "adjacency_pair.other_da_id",
                        format!("unknown dialogue act {}", ap.other_da_id),
                    );
                }
            }
            das.push(build_da(&mut v, &m.id, da));
        }
        das.sort_by_key(|da| da.order);
        meetings.push(Meeting {
            id: m.id,
            dialogue_acts: das.into_iter().map(Arc::new).collect(),
            decisions,
        });
    }

    if v.diags.is_empty() {
        Ok(Corpus { meetings })
    } else {
        Err(CorpusError::Invalid(v.diags))
    }
}

fn build_da(v: &mut Validator, meeting: &str, da: DaRecord) -> DialogueAct {
    let n = da.tokens.len();
    let id = da.id.as_str();
    if n == 0 {
        v.report(
            meeting,
            Some(id),
            "tokens",
            "dialogue act has no tokens".into(),
        );
    }
    let tokens: Vec<Token> = da
        .tokens
        .into_iter()
        .enumerate()
        .map(|(index, t)| {
            if t.surface.is_empty() {
                v.report(
                    meeting,
                    Some(id),
                    "tokens.surface",
                    format!("token {index} has an empty surface"),
                );
            }
            if t.pos.is_empty() {
                v.report(
                    meeting,
                    Some(id),
                    "tokens.pos",
                    format!("token {index} has an empty tag"),
                );
            }
            let stem = match t.stem {
                Some(s) if !s.is_empty() => s,
                _ => text::stem(&t.surface.to_lowercase()),
            };
            Token {
                index,
                surface: t.surface,
                stem,
                pos: t.pos,
            }
        })
        .collect();

    let c = &da.constituents;
    if c.lo != 0 || c.hi != n {
        v.report(
            meeting,
            Some(id),
            "constituents",
            format!(
                "root span [{}, {}) does not cover the {n} tokens",
                c.lo, c.hi
            ),
        );
    }
    let mut nodes = Vec::new();
    flatten(v, meeting, id, da.constituents, None, n, &mut nodes);

    let mut seen_dependents = HashSet::new();
    let deps = da
        .dependencies
        .into_iter()
        .map(|e| {
            if e.dep >= n {
                v.report(
                    meeting,
                    Some(id),
                    "dependencies.dep",
                    format!("token index {} out of range (len {n})", e.dep),
                );
            }
            if let Some(h) = e.head {
                if h >= n {
                    v.report(
                        meeting,
                        Some(id),
                        "dependencies.head",
                        format!("token index {h} out of range (len {n})"),
                    );
                }
            }
            if !seen_dependents.insert(e.dep) {
                v.report(
                    meeting,
                    Some(id),
                    "dependencies.dep",
                    format!("token {} has more than one head", e.dep),
                );
            }
            DependencyEdge {
                relation: e.rel,
                head: e.head,
                dependent: e.dep,
            }
        })
        .collect();

    DialogueAct {
        id: da.id.clone(),
        meeting_id: meeting.to_string(),
        order: da.order,
        speaker: da.speaker,
        speaker_role: da.speaker_role,
        da_type: da.da_type,
        topic: da.topic,
        tokens,
        parse: ParseTree::from_nodes(nodes),
        deps,
        adjacency_pair: da.adjacency_pair.map(|ap| AdjacencyPairInfo {
            ap_type: ap.ap_type,
            part: ap.part,
            other_da_id: ap.other_da_id,
            other_is_decision_related: ap.other_is_decision_related,
            target_is_positive_feedback: ap.target_is_positive_feedback,
            source_is_question: ap.source_is_question,
        }),
        decision_ids: da.decision_ids,
    }
}

fn flatten(
    v: &mut Validator,
    meeting: &str,
    da: &str,
    rec: ConstituentRecord,
    parent: Option<usize>,
    n: usize,
    out: &mut Vec<ConstituentNode>,
) -> usize {
    if rec.lo >= rec.hi || rec.hi > n {
        v.report(
            meeting,
            Some(da),
            "constituents",
            format!(
                "{} span [{}, {}) is empty or exceeds {n} tokens",
                rec.label, rec.lo, rec.hi
            ),
        );
    }
    if let Some(h) = rec.head {
        if h < rec.lo || h >= rec.hi {
            v.report(
                meeting,
                Some(da),
                "constituents.head",
                format!(
                    "{} head {h} outside span [{}, {})",
                    rec.label, rec.lo, rec.hi
                ),
            );
        }
    }
    let id = out.len();
    out.push(ConstituentNode {
        label: rec.label,
        lo: rec.lo,
        hi: rec.hi,
        head: rec.head,
        children: Vec::new(),
        parent,
    });
    let (plo, phi) = (rec.lo, rec.hi);
    let mut prev_hi = plo;
    let mut children = Vec::with_capacity(rec.children.len());
    for child in rec.children {
        if child.lo < prev_hi || child.hi > phi {
            v.report(
                meeting,
                Some(da),
                "constituents.children",
                format!(
                    "{} [{}, {}) overlaps a sibling or leaves its parent [{plo}, {phi})",
                    child.label, child.lo, child.hi
                ),
            );
        }
        prev_hi = prev_hi.max(child.hi);
        children.push(flatten(v, meeting, da, child, Some(id), n, out));
    }
    out[id].children = children;
    id
}
