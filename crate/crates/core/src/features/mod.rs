//! Discrete features of indicator tokens and argument constituents.

mod lexicon;
mod vocab;

use std::fmt;
use std::path::PathBuf;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    ArgumentCandidate, Candidates, DecisionDocument, DialogueAct, IndicatorCandidate,
};
use crate::text::Stopwords;

pub use lexicon::{coarse_pos, HypernymLexicon, LexiconEntry};
pub use vocab::{FeatureVector, FeatureVocabulary, RoleVocabulary};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("content-phase features need a cue context")]
    MissingCueContext,
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Indicator,
    Argument,
}

/// Which roles a template applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateRole {
    Indicator,
    Argument,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cue,
    Content,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Cue => "cue",
            Phase::Content => "content",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTemplate {
    UnigramStem,
    Pos,
    ConstituentLabel,
    DependencyLabel,
    DaType,
    SpeakerRole,
    Topic,
    ApPresent,
    ApType,
    ApOtherDecisionRelated,
    ApPart,
    ApTargetPositiveFeedback,
    ApSourceIsQuestion,
    WnFirstSynset,
    WnHypernymPath,
    ArgNumWords,
    ArgHasCapitalized,
    ArgHasProperNoun,
    ClausePosition,
    PositionToFirstCue,
}

impl FeatureTemplate {
    pub const ALL: [FeatureTemplate; 20] = [
        Self::UnigramStem,
        Self::Pos,
        Self::ConstituentLabel,
        Self::DependencyLabel,
        Self::DaType,
        Self::SpeakerRole,
        Self::Topic,
        Self::ApPresent,
        Self::ApType,
        Self::ApOtherDecisionRelated,
        Self::ApPart,
        Self::ApTargetPositiveFeedback,
        Self::ApSourceIsQuestion,
        Self::WnFirstSynset,
        Self::WnHypernymPath,
        Self::ArgNumWords,
        Self::ArgHasCapitalized,
        Self::ArgHasProperNoun,
        Self::ClausePosition,
        Self::PositionToFirstCue,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::UnigramStem => "unigram_stem",
            Self::Pos => "pos",
            Self::ConstituentLabel => "constituent_label",
            Self::DependencyLabel => "dependency_label",
            Self::DaType => "da_type",
            Self::SpeakerRole => "speaker_role",
            Self::Topic => "topic",
            Self::ApPresent => "ap_present",
            Self::ApType => "ap_type",
            Self::ApOtherDecisionRelated => "ap_other_decision_related",
            Self::ApPart => "ap_part",
            Self::ApTargetPositiveFeedback => "ap_target_positive_feedback",
            Self::ApSourceIsQuestion => "ap_source_is_question",
            Self::WnFirstSynset => "wn_first_synset",
            Self::WnHypernymPath => "wn_hypernym_path",
            Self::ArgNumWords => "arg_num_words",
            Self::ArgHasCapitalized => "arg_has_capitalized",
            Self::ArgHasProperNoun => "arg_has_proper_noun",
            Self::ClausePosition => "clause_position",
            Self::PositionToFirstCue => "position_to_first_cue",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn role(self) -> TemplateRole {
        match self {
            Self::ArgNumWords | Self::ArgHasCapitalized | Self::ArgHasProperNoun => {
                TemplateRole::Argument
            }
            _ => TemplateRole::Both,
        }
    }

    pub fn content_only(self) -> bool {
        matches!(self, Self::ClausePosition | Self::PositionToFirstCue)
    }

    pub fn applies(self, role: Role, phase: Phase) -> bool {
        let role_ok = match (self.role(), role) {
            (TemplateRole::Both, _) => true,
            (TemplateRole::Indicator, Role::Indicator)
            | (TemplateRole::Argument, Role::Argument) => true,
            _ => false,
        };
        role_ok && (phase == Phase::Content || !self.content_only())
    }
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Feature values before encoding, in template order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureValues {
    pub entries: Vec<(FeatureTemplate, String)>,
}

impl FeatureValues {
    fn push(&mut self, t: FeatureTemplate, v: impl Into<String>) {
        self.entries.push((t, v.into()));
    }

    pub fn get(&self, t: FeatureTemplate) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == t).map(|e| e.1.as_str())
    }

    pub fn templates(&self) -> impl Iterator<Item = FeatureTemplate> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosGranularity {
    /// Full Penn Treebank tags.
    #[default]
    Full,
    /// The two-letter tag prefix (`VBZ` becomes `VB`).
    Coarse,
}

/// Inputs shared by every extraction call.
#[derive(Debug, Clone, Copy)]
pub struct FeatureConfig<'a> {
    pub phase: Phase,
    pub stopwords: &'a Stopwords,
    pub lexicon: Option<&'a HypernymLexicon>,
    pub pos: PosGranularity,
}

/// A cue instance located in its decision document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueMark {
    pub relation: usize,
    pub da_index: usize,
    pub token_index: usize,
    /// Token offset of the indicator from the document start.
    pub offset: usize,
}

/// Cue instances of one decision document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentCues {
    /// Ordered by offset.
    pub instances: Vec<CueMark>,
}

impl DocumentCues {
    pub fn new(mut instances: Vec<CueMark>) -> Self {
        instances.sort_by_key(|c| (c.offset, c.relation));
        Self { instances }
    }

    pub fn first_offset(&self) -> Option<usize> {
        self.instances.first().map(|c| c.offset)
    }

    /// Token index of the first cue indicator inside the given dialogue act.
    pub fn first_in_da(&self, da_index: usize) -> Option<usize> {
        self.instances
            .iter()
            .filter(|c| c.da_index == da_index)
            .map(|c| c.token_index)
            .min()
    }
}

/// Cue instances per decision document, keyed by decision id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueContext {
    pub documents: IndexMap<String, DocumentCues>,
}

impl CueContext {
    pub fn document(&self, decision_id: &str) -> Option<&DocumentCues> {
        self.documents.get(decision_id)
    }
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn has_word_chars(s: &str) -> bool {
    s.chars().any(char::is_alphanumeric)
}

/// Templates shared by both roles, computed on an anchor token (the
/// indicator itself, or an argument's headword).
fn shared_features(
    dd: &DecisionDocument,
    da_index: usize,
    anchor: usize,
    constituent_label: &str,
    cfg: &FeatureConfig<'_>,
    out: &mut FeatureValues,
) {
    let da: &DialogueAct = &dd.das[da_index];
    let tok = &da.tokens[anchor];
    out.push(FeatureTemplate::UnigramStem, tok.stem.clone());
    let pos = match cfg.pos {
        PosGranularity::Full => tok.pos.clone(),
        PosGranularity::Coarse => tok.pos.chars().take(2).collect(),
    };
    out.push(FeatureTemplate::Pos, pos);
    out.push(FeatureTemplate::ConstituentLabel, constituent_label);
    let dep = match da.incoming_edge(anchor) {
        Some(e) if e.head.is_none() => "ROOT".to_string(),
        Some(e) => e.relation.clone(),
        None => "none".to_string(),
    };
    out.push(FeatureTemplate::DependencyLabel, dep);
    out.push(FeatureTemplate::DaType, da.da_type.clone());
    out.push(FeatureTemplate::SpeakerRole, da.speaker_role.clone());
    out.push(FeatureTemplate::Topic, da.topic.clone());
    out.push(
        FeatureTemplate::ApPresent,
        bool_str(da.adjacency_pair.is_some()),
    );
    if let Some(ap) = &da.adjacency_pair {
        out.push(FeatureTemplate::ApType, ap.ap_type.clone());
        out.push(
            FeatureTemplate::ApOtherDecisionRelated,
            bool_str(ap.other_is_decision_related),
        );
        out.push(FeatureTemplate::ApPart, ap.part.as_str());
        if let Some(b) = ap.target_is_positive_feedback {
            out.push(FeatureTemplate::ApTargetPositiveFeedback, bool_str(b));
        }
        if let Some(b) = ap.source_is_question {
            out.push(FeatureTemplate::ApSourceIsQuestion, bool_str(b));
        }
    }
    if let (Some(lex), Some(p)) = (cfg.lexicon, coarse_pos(&tok.pos)) {
        if let Some(e) = lex.lookup(&tok.stem, p) {
            out.push(FeatureTemplate::WnFirstSynset, e.synset.clone());
            out.push(FeatureTemplate::WnHypernymPath, e.hypernym_path.clone());
        }
    }
}

fn discourse_features(
    dd: &DecisionDocument,
    da_index: usize,
    anchor: usize,
    cues: &DocumentCues,
    out: &mut FeatureValues,
) {
    let clause = match dd.das[da_index].parse.clause_index(anchor) {
        0 => "first",
        1 => "second",
        _ => "other",
    };
    out.push(FeatureTemplate::ClausePosition, clause);
    let offset = dd.token_offset(da_index, anchor);
    let rel = match cues.first_offset() {
        Some(first) if offset > first => "after",
        _ => "before",
    };
    out.push(FeatureTemplate::PositionToFirstCue, rel);
}

fn require_cues<'c>(
    cfg: &FeatureConfig<'_>,
    cues: Option<&'c DocumentCues>,
) -> Result<Option<&'c DocumentCues>, FeatureError> {
    match (cfg.phase, cues) {
        (Phase::Content, None) => Err(FeatureError::MissingCueContext),
        (Phase::Content, c) => Ok(c),
        (Phase::Cue, _) => Ok(None),
    }
}

pub fn indicator_features(
    dd: &DecisionDocument,
    cand: &IndicatorCandidate,
    cfg: &FeatureConfig<'_>,
    cues: Option<&DocumentCues>,
) -> Result<FeatureValues, FeatureError> {
    let cues = require_cues(cfg, cues)?;
    let da = &dd.das[cand.da_index];
    let label = da
        .parse
        .lowest_containing(cand.token_index)
        .map_or("none", |n| da.parse.node(n).base_label());
    let mut out = FeatureValues::default();
    shared_features(dd, cand.da_index, cand.token_index, label, cfg, &mut out);
    if let Some(c) = cues {
        discourse_features(dd, cand.da_index, cand.token_index, c, &mut out);
    }
    Ok(out)
}

pub fn argument_features(
    dd: &DecisionDocument,
    cand: &ArgumentCandidate,
    cfg: &FeatureConfig<'_>,
    cues: Option<&DocumentCues>,
) -> Result<FeatureValues, FeatureError> {
    let cues = require_cues(cfg, cues)?;
    let da = &dd.das[cand.da_index];
    let head = da.parse.head_token(cand.node, &da.tokens);
    let mut out = FeatureValues::default();
    shared_features(
        dd,
        cand.da_index,
        head,
        da.parse.node(cand.node).base_label(),
        cfg,
        &mut out,
    );
    let span = &da.tokens[cand.lo..cand.hi];
    let words = span
        .iter()
        .filter(|t| has_word_chars(&t.surface) && !cfg.stopwords.contains(&t.surface))
        .count();
    out.push(FeatureTemplate::ArgNumWords, words.to_string());
    let capitalized = span
        .iter()
        .any(|t| t.surface.chars().next().is_some_and(char::is_uppercase));
    out.push(FeatureTemplate::ArgHasCapitalized, bool_str(capitalized));
    out.push(
        FeatureTemplate::ArgHasProperNoun,
        bool_str(span.iter().any(|t| t.is_proper_noun())),
    );
    if let Some(c) = cues {
        discourse_features(dd, cand.da_index, head, c, &mut out);
    }
    Ok(out)
}

/// True when the span holds a personal pronoun and nothing else apart from
/// stopwords and punctuation ("we", "it", "you and me").
pub fn is_pronoun_only(
    dd: &DecisionDocument,
    cand: &ArgumentCandidate,
    stopwords: &Stopwords,
) -> bool {
    let span = &dd.das[cand.da_index].tokens[cand.lo..cand.hi];
    let mut saw_pronoun = false;
    for t in span {
        if t.is_personal_pronoun() {
            saw_pronoun = true;
        } else if has_word_chars(&t.surface) && !stopwords.contains(&t.surface) {
            return false;
        }
    }
    saw_pronoun
}

/// Raw features of every candidate of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocumentFeatureValues {
    pub indicators: Vec<FeatureValues>,
    pub arguments: Vec<FeatureValues>,
}

pub fn document_feature_values(
    dd: &DecisionDocument,
    cands: &Candidates,
    cfg: &FeatureConfig<'_>,
    cue_ctx: Option<&CueContext>,
) -> Result<DocumentFeatureValues, FeatureError> {
    let empty = DocumentCues::default();
    let cues = match (cfg.phase, cue_ctx) {
        (Phase::Content, None) => return Err(FeatureError::MissingCueContext),
        (Phase::Content, Some(ctx)) => Some(ctx.document(&dd.decision_id).unwrap_or(&empty)),
        (Phase::Cue, _) => None,
    };
    Ok(DocumentFeatureValues {
        indicators: cands
            .indicators
            .iter()
            .map(|c| indicator_features(dd, c, cfg, cues))
            .collect::<Result<_, _>>()?,
        arguments: cands
            .arguments
            .iter()
            .map(|c| argument_features(dd, c, cfg, cues))
            .collect::<Result<_, _>>()?,
    })
}

/// Assigns dense ids, in first-seen order, to every value any candidate
/// of `docs` produces.
pub fn build_vocabulary(
    docs: &[DecisionDocument],
    cands: &[Candidates],
    cfg: &FeatureConfig<'_>,
    cue_ctx: Option<&CueContext>,
) -> Result<FeatureVocabulary, FeatureError> {
    let values = docs
        .iter()
        .zip(cands)
        .map(|(d, c)| document_feature_values(d, c, cfg, cue_ctx))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureVocabulary::from_values(
        cfg.phase,
        values.iter().flat_map(|v| v.indicators.iter()),
        values.iter().flat_map(|v| v.arguments.iter()),
    ))
}
