use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LearnedModel, PipelineConfig, PipelineError, Summary};
use crate::features::{FeatureVocabulary, Phase};
use crate::inference::ConstraintSpec;
use crate::model::{HyperParams, ModelParams};

pub const FORMAT_VERSION: u32 = 1;

/// What a trained phase leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseArtifact {
    pub phase: Phase,
    pub hyper: HyperParams,
    pub vocabulary: FeatureVocabulary,
    /// Posterior-mean parameters.
    pub params: ModelParams,
    pub free_energy: f64,
    pub best_restart: usize,
    pub max_violation: f64,
    pub constraints: Vec<ConstraintSpec>,
    /// Argmax instances per decision document.
    pub instances: Vec<Summary>,
}

impl PhaseArtifact {
    pub fn from_model(m: &LearnedModel) -> Self {
        Self {
            phase: m.phase,
            hyper: m.space.hyper,
            vocabulary: m.space.vocab.clone(),
            params: m.result.state.mean_params(),
            free_energy: m.result.free_energy,
            best_restart: m.result.best_restart,
            max_violation: m.max_violation(),
            constraints: m.constraints.clone(),
            instances: m.summaries(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub seed: u64,
    pub config: PipelineConfig,
    /// Decision ids of the training documents, in order.
    pub decision_ids: Vec<String>,
    pub cue: Option<PhaseArtifact>,
    pub content: Option<PhaseArtifact>,
}

impl ModelArtifact {
    pub fn new(
        config: PipelineConfig,
        decision_ids: Vec<String>,
        cue: Option<&LearnedModel>,
        content: Option<&LearnedModel>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            seed: config.inference.seed,
            config,
            decision_ids,
            cue: cue.map(PhaseArtifact::from_model),
            content: content.map(PhaseArtifact::from_model),
        }
    }

    /// The phase summaries are drawn from: content if trained, else cue.
    pub fn summary_phase(&self) -> Option<&PhaseArtifact> {
        self.content.as_ref().or(self.cue.as_ref())
    }

    /// Summaries of the requested decisions, in the requested order.
    pub fn summaries_for(&self, decision_ids: &[String]) -> Result<Vec<Summary>, PipelineError> {
        let phase = self
            .summary_phase()
            .ok_or_else(|| PipelineError::Format("artifact holds no trained phase".into()))?;
        let missing: Vec<String> = decision_ids
            .iter()
            .filter(|id| !phase.instances.iter().any(|s| &s.decision_id == *id))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(PipelineError::UnknownDocuments(missing));
        }
        Ok(decision_ids
            .iter()
            .filter_map(|id| {
                phase
                    .instances
                    .iter()
                    .find(|s| &s.decision_id == id)
                    .cloned()
            })
            .collect())
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, PipelineError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)
            .map_err(|e| PipelineError::Format(format!("model artifact: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(PipelineError::Version {
                found: header.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| PipelineError::Format(format!("model artifact: {e}")))
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
