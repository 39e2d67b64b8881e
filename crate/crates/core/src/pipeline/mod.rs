//! Two-phase learning (decision cues, then decision content), instance
//! selection and summaries.

mod artifact;
mod summary;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::DecisionDocument;
use crate::features::{
    CueContext, CueMark, DocumentCues, FeatureConfig, HypernymLexicon, Phase, PosGranularity,
};
use crate::inference::{
    build_default_constraints, clamp_to_achievable, compile, run, ConstraintContext,
    ConstraintFamilies, ConstraintSpec, InferenceConfig, InferenceError, InferenceResult,
};
use crate::model::{CandidateSpace, Choice, HyperParams, ModelError, SpaceOptions};
use crate::text::{stem, tokenize, Stopwords};

pub use artifact::{ModelArtifact, PhaseArtifact, FORMAT_VERSION};
pub use summary::{Method, RelationInstance, SpanRef, Summary, SummaryFile, SummaryItem, TokenRef};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("decision {0} has no gold abstract")]
    MissingAbstract(String),
    #[error("unknown decision ids: {}", .0.join(", "))]
    UnknownDocuments(Vec<String>),
    #[error("artifact format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("{0}")]
    Format(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn is_io(&self) -> bool {
        matches!(self, PipelineError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Content relation types.
    pub k: usize,
    /// Cue relation types.
    pub k_cue: usize,
    pub segments: usize,
    pub theta0: f64,
    pub lambda0: f64,
    pub allow_null: bool,
    pub null_prior: f64,
    pub pos: PosGranularity,
    pub families: ConstraintFamilies,
    pub inference: InferenceConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let h = HyperParams::default();
        Self {
            k: h.k,
            k_cue: 5,
            segments: h.segments,
            theta0: h.theta0,
            lambda0: h.lambda0,
            allow_null: h.allow_null,
            null_prior: h.null_prior,
            pos: PosGranularity::Full,
            families: ConstraintFamilies::default(),
            inference: InferenceConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn hyper(&self, phase: Phase) -> HyperParams {
        HyperParams {
            k: match phase {
                Phase::Cue => self.k_cue,
                Phase::Content => self.k,
            },
            segments: self.segments,
            theta0: self.theta0,
            lambda0: self.lambda0,
            allow_null: self.allow_null,
            null_prior: self.null_prior,
        }
    }
}

/// Text resources shared by feature extraction and scoring.
#[derive(Debug, Clone, Copy)]
pub struct Resources<'a> {
    pub stopwords: &'a Stopwords,
    pub lexicon: Option<&'a HypernymLexicon>,
}

/// A trained phase: its candidate space, constraints and inference result.
#[derive(Debug, Clone)]
pub struct LearnedModel {
    pub phase: Phase,
    pub space: CandidateSpace,
    pub constraints: Vec<ConstraintSpec>,
    /// Bound adjustments made before inference.
    pub notes: Vec<String>,
    pub result: InferenceResult,
}

impl LearnedModel {
    /// Maximum constraint violation at the end of the selected restart.
    pub fn max_violation(&self) -> f64 {
        self.result
            .trace
            .iter()
            .rfind(|t| t.restart == self.result.best_restart)
            .map_or(0.0, |t| t.max_violation)
    }

    /// One summary per decision document, in document order.
    pub fn summaries(&self) -> Vec<Summary> {
        (0..self.space.docs.len())
            .map(|d| summarize(self, d))
            .collect()
    }
}

/// Trains one phase over the given documents.
pub fn learn_phase(
    docs: &[DecisionDocument],
    phase: Phase,
    cfg: &PipelineConfig,
    res: Resources<'_>,
    cue_ctx: Option<&CueContext>,
) -> Result<LearnedModel, PipelineError> {
    let fcfg = FeatureConfig {
        phase,
        stopwords: res.stopwords,
        lexicon: res.lexicon,
        pos: cfg.pos,
    };
    let opts = SpaceOptions {
        filter_pronouns: phase == Phase::Content,
    };
    let space = CandidateSpace::from_documents(docs, &fcfg, cue_ctx, cfg.hyper(phase), opts)?;
    let ctx = ConstraintContext::new(&space);
    let specs = build_default_constraints(&space, cfg.families);
    let (specs, notes) = clamp_to_achievable(&space, &ctx, &specs);
    for n in &notes {
        log::warn!("{} phase: {n}", phase.as_str());
    }
    let compiled = compile(&space, &ctx, &specs);
    let result = run(&space, &compiled, &cfg.inference)?;
    log::info!(
        "{} phase: free energy {:.4} (restart {})",
        phase.as_str(),
        result.free_energy,
        result.best_restart
    );
    Ok(LearnedModel {
        phase,
        space,
        constraints: specs,
        notes,
        result,
    })
}

/// Learns cue relations and returns them with their argmax instances.
pub fn learn_cue_model(
    docs: &[DecisionDocument],
    cfg: &PipelineConfig,
    res: Resources<'_>,
) -> Result<(LearnedModel, Vec<Summary>), PipelineError> {
    let model = learn_phase(docs, Phase::Cue, cfg, res, None)?;
    let instances = model.summaries();
    Ok((model, instances))
}

/// Locates cue instances in their documents. Documents without instances
/// get an empty entry.
pub fn annotate_cue_context(docs: &[DecisionDocument], cues: &[Summary]) -> CueContext {
    let mut ctx = CueContext::default();
    for dd in docs {
        let marks = cues
            .iter()
            .filter(|s| s.decision_id == dd.decision_id)
            .flat_map(Summary::relations)
            .filter(|r| r.indicator.da_index < dd.das.len())
            .map(|r| CueMark {
                relation: r.relation,
                da_index: r.indicator.da_index,
                token_index: r.indicator.token_index,
                offset: dd.token_offset(r.indicator.da_index, r.indicator.token_index),
            })
            .collect();
        ctx.documents
            .insert(dd.decision_id.clone(), DocumentCues::new(marks));
    }
    ctx
}

/// Learns content relations with cue-derived features.
pub fn learn_content_model(
    docs: &[DecisionDocument],
    cue_ctx: &CueContext,
    cfg: &PipelineConfig,
    res: Resources<'_>,
) -> Result<LearnedModel, PipelineError> {
    learn_phase(docs, Phase::Content, cfg, res, Some(cue_ctx))
}

/// Both phases in sequence.
pub fn learn_both(
    docs: &[DecisionDocument],
    cfg: &PipelineConfig,
    res: Resources<'_>,
) -> Result<(LearnedModel, LearnedModel), PipelineError> {
    let (cue, cues) = learn_cue_model(docs, cfg, res)?;
    let ctx = annotate_cue_context(docs, &cues);
    let content = learn_content_model(docs, &ctx, cfg, res)?;
    Ok((cue, content))
}

/// Index of the selected triple of one factor and its mass, or `None`
/// when the empty choice carries more mass or there is no triple.
pub fn select_triple(model: &LearnedModel, d: usize, k: usize) -> Option<(usize, f64)> {
    let ds = &model.space.docs[d];
    let masses = model.result.state.triple_mass(&model.space, d, k);
    let null: f64 = ds
        .options
        .iter()
        .zip(&model.result.state.c_hat[d][k])
        .filter(|(c, _)| matches!(c, Choice::Null))
        .map(|(_, q)| q)
        .sum();
    // Triples are ordered by dialogue act, then indicator position, so the
    // first maximum implements the tie rule.
    let mut best: Option<(usize, f64)> = None;
    for (t, &m) in masses.iter().enumerate() {
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((t, m));
        }
    }
    best.filter(|&(_, m)| m > 0.0 && m >= null)
}

/// The relation-based summary of document `d`: one instance per relation
/// type whose selection is not empty, ordered by relation.
pub fn summarize(model: &LearnedModel, d: usize) -> Summary {
    let ds = &model.space.docs[d];
    let items = (0..model.space.hyper.k)
        .filter_map(|k| {
            let (t, mass) = select_triple(model, d, k)?;
            let triple = ds.triples[t];
            let ind = ds.indicators[triple.indicator];
            let arg = ds.arguments[triple.argument];
            let da = &ds.doc.das[ind.da_index];
            Some(SummaryItem::Relation(RelationInstance {
                relation: k,
                decision_id: ds.doc.decision_id.clone(),
                da_id: da.id.clone(),
                indicator: TokenRef {
                    da_index: ind.da_index,
                    token_index: ind.token_index,
                    surface: da.tokens[ind.token_index].surface.clone(),
                },
                argument: SpanRef {
                    da_index: arg.da_index,
                    lo: arg.lo,
                    hi: arg.hi,
                    text: ds.doc.das[arg.da_index].span_text(arg.lo, arg.hi),
                },
                probability: mass.min(1.0),
            }))
        })
        .collect();
    Summary {
        decision_id: ds.doc.decision_id.clone(),
        method: Method::Relations,
        items,
    }
}

/// Words of the dialogue acts whose stems occur in the gold abstract,
/// stopwords excluded, each stem once in order of first occurrence.
pub fn upperbound_summary(
    dd: &DecisionDocument,
    stopwords: &Stopwords,
) -> Result<Summary, PipelineError> {
    let gold = dd
        .gold_abstract
        .as_deref()
        .ok_or_else(|| PipelineError::MissingAbstract(dd.decision_id.clone()))?;
    let gold_stems: HashSet<String> = crate::text::preprocess(gold, stopwords)
        .into_iter()
        .collect();
    let mut seen = HashSet::new();
    let mut words = Vec::new();
    for da in &dd.das {
        for w in tokenize(&da.text()) {
            if stopwords.contains(&w) {
                continue;
            }
            let s = stem(&w);
            if gold_stems.contains(&s) && seen.insert(s) {
                words.push(w);
            }
        }
    }
    Ok(Summary {
        decision_id: dd.decision_id.clone(),
        method: Method::Upperbound,
        items: if words.is_empty() {
            Vec::new()
        } else {
            vec![SummaryItem::Words { words }]
        },
    })
}
