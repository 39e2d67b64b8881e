#![allow(dead_code)]

pub mod oracles;
pub mod syntax;

use relexsum::corpus::{build_decision_documents, Clustering};
use relexsum::features::{FeatureConfig, Phase, PosGranularity};
use relexsum::model::synth::{sample_corpus, PlantedModel, ShapeConfig, SyntheticCorpus};
use relexsum::model::{CandidateSpace, HyperParams, SpaceOptions};
use relexsum::text::Stopwords;

pub fn shape(docs: usize, das: usize, inds: usize, args: usize) -> ShapeConfig {
    ShapeConfig {
        docs,
        das_per_doc: das,
        indicators_per_da: inds,
        arguments_per_da: args,
    }
}

pub fn space_of(sc: &SyntheticCorpus, hyper: HyperParams) -> CandidateSpace {
    let docs = build_decision_documents(&sc.corpus, Clustering::True, hyper.segments);
    let sw = Stopwords::empty();
    let cfg = FeatureConfig {
        phase: Phase::Cue,
        stopwords: &sw,
        lexicon: None,
        pos: PosGranularity::Full,
    };
    CandidateSpace::from_documents(&docs, &cfg, None, hyper, SpaceOptions::default())
        .expect("space")
}

pub fn synth_space(
    planted: &PlantedModel,
    shape: ShapeConfig,
    seed: u64,
    hyper: HyperParams,
) -> (SyntheticCorpus, CandidateSpace) {
    let sc = sample_corpus(planted, &shape, seed).expect("sample");
    let space = space_of(&sc, hyper);
    (sc, space)
}

pub fn hyper(k: usize, segments: usize) -> HyperParams {
    HyperParams {
        k,
        segments,
        ..HyperParams::default()
    }
}
