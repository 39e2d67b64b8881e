use serde::{Deserialize, Serialize};

use super::{HyperParams, ModelError};
use crate::corpus::{
    extract_candidates, ArgumentCandidate, Candidates, DecisionDocument, IndicatorCandidate,
};
use crate::features::{
    document_feature_values, is_pronoun_only, CueContext, DocumentFeatureValues, FeatureConfig,
    FeatureVector, FeatureVocabulary,
};

/// An (indicator, argument) pair drawn from one dialogue act. `indicator`
/// and `argument` index the owning [`DocumentSpace`]'s candidate lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub da_index: usize,
    pub indicator: usize,
    pub argument: usize,
}

/// One value of the latent choice of a (document, relation) factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    /// A triple reached through location draw `segment`.
    Triple { triple: usize, segment: usize },
    /// The relation is not instantiated in this document.
    Null,
}

impl Choice {
    pub fn triple(self) -> Option<usize> {
        match self {
            Choice::Triple { triple, .. } => Some(triple),
            Choice::Null => None,
        }
    }

    pub fn segment(self) -> Option<usize> {
        match self {
            Choice::Triple { segment, .. } => Some(segment),
            Choice::Null => None,
        }
    }
}

/// Enumerated choices of one decision document.
///
/// Location draws that land in a segment without any dialogue act offering
/// both an indicator and an argument are redirected to the closest earlier
/// such segment (or the closest later one), so every draw reaches a triple.
/// A triple therefore appears once per location draw that reaches it.
#[derive(Debug, Clone)]
pub struct DocumentSpace {
    pub doc: DecisionDocument,
    pub indicators: Vec<IndicatorCandidate>,
    pub ind_features: Vec<FeatureVector>,
    pub arguments: Vec<ArgumentCandidate>,
    pub arg_features: Vec<FeatureVector>,
    pub triples: Vec<Triple>,
    pub options: Vec<Choice>,
    /// Log prior of each option without its `ln λ[segment]` term.
    pub option_base: Vec<f64>,
    /// Segment of every dialogue act.
    pub da_segment: Vec<usize>,
    /// Indicator candidates per dialogue act (W).
    pub w: Vec<usize>,
    /// Argument candidates per dialogue act (X).
    pub x: Vec<usize>,
    /// Target segment of every location draw.
    pub segment_map: Vec<usize>,
}

impl DocumentSpace {
    pub fn new(
        doc: DecisionDocument,
        cands: Candidates,
        values: &DocumentFeatureValues,
        vocab: &FeatureVocabulary,
        hyper: &HyperParams,
    ) -> Self {
        let n = doc.das.len();
        let l = hyper.segments;
        let da_segment: Vec<usize> = (0..n).map(|j| j * l / n.max(1)).collect();
        let mut w = vec![0; n];
        let mut x = vec![0; n];
        for c in &cands.indicators {
            w[c.da_index] += 1;
        }
        for c in &cands.arguments {
            x[c.da_index] += 1;
        }
        let eligible = |j: usize| w[j] > 0 && x[j] > 0;
        let mut per_segment = vec![0usize; l];
        for j in (0..n).filter(|&j| eligible(j)) {
            per_segment[da_segment[j]] += 1;
        }
        let filled: Vec<usize> = (0..l).filter(|&s| per_segment[s] > 0).collect();
        let segment_map: Vec<usize> = (0..l)
            .map(|s| {
                if per_segment[s] > 0 {
                    s
                } else {
                    filled
                        .iter()
                        .rev()
                        .find(|&&t| t < s)
                        .or_else(|| filled.iter().find(|&&t| t > s))
                        .copied()
                        .unwrap_or(s)
                }
            })
            .collect();

        let mut triples = Vec::new();
        for (ii, ic) in cands.indicators.iter().enumerate() {
            for (ai, ac) in cands.arguments.iter().enumerate() {
                if ic.da_index == ac.da_index {
                    triples.push(Triple {
                        da_index: ic.da_index,
                        indicator: ii,
                        argument: ai,
                    });
                }
            }
        }
        triples.sort_by_key(|t| {
            (
                t.da_index,
                cands.indicators[t.indicator].token_index,
                t.argument,
            )
        });

        let mut options = Vec::new();
        let mut option_base = Vec::new();
        let realize = if hyper.allow_null && !triples.is_empty() {
            (1.0 - hyper.null_prior).ln()
        } else {
            0.0
        };
        for (ti, t) in triples.iter().enumerate() {
            let seg = da_segment[t.da_index];
            let base = realize
                - (per_segment[seg] as f64).ln()
                - (w[t.da_index] as f64).ln()
                - (x[t.da_index] as f64).ln();
            for s in (0..l).filter(|&s| segment_map[s] == seg) {
                options.push(Choice::Triple {
                    triple: ti,
                    segment: s,
                });
                option_base.push(base);
            }
        }
        if triples.is_empty() {
            options.push(Choice::Null);
            option_base.push(0.0);
        } else if hyper.allow_null {
            options.push(Choice::Null);
            option_base.push(hyper.null_prior.ln());
        }

        let ind_features = values
            .indicators
            .iter()
            .map(|v| vocab.indicator.encode(v))
            .collect();
        let arg_features = values
            .arguments
            .iter()
            .map(|v| vocab.argument.encode(v))
            .collect();
        Self {
            doc,
            indicators: cands.indicators,
            ind_features,
            arguments: cands.arguments,
            arg_features,
            triples,
            options,
            option_base,
            da_segment,
            w,
            x,
            segment_map,
        }
    }

    pub fn n_options(&self) -> usize {
        self.options.len()
    }

    /// Segment of the dialogue act a triple comes from.
    pub fn triple_segment(&self, triple: usize) -> usize {
        self.da_segment[self.triples[triple].da_index]
    }

    pub fn option_log_prior(&self, option: usize, lambda: &[f64]) -> f64 {
        match self.options[option] {
            Choice::Triple { segment, .. } => lambda[segment].ln() + self.option_base[option],
            Choice::Null => self.option_base[option],
        }
    }

    /// Log prior of a triple, summed over the location draws reaching it:
    /// `ln[λ(seg) / |eligible acts in seg| / W_z / X_z]`.
    pub fn triple_prior_log(&self, triple: usize, lambda: &[f64]) -> f64 {
        let seg = self.triple_segment(triple);
        let mass: f64 = (0..lambda.len())
            .filter(|&s| self.segment_map[s] == seg)
            .map(|s| lambda[s])
            .sum();
        let base = self
            .options
            .iter()
            .position(|c| c.triple() == Some(triple))
            .map(|o| self.option_base[o])
            .expect("every triple has an option");
        mass.ln() + base
    }

    pub fn indicator_stem(&self, indicator: usize) -> &str {
        let c = self.indicators[indicator];
        &self.doc.das[c.da_index].tokens[c.token_index].stem
    }

    pub fn argument_text(&self, argument: usize) -> String {
        let c = self.arguments[argument];
        self.doc.das[c.da_index].span_text(c.lo, c.hi)
    }

    /// Stems of the tokens an argument spans.
    pub fn argument_stems(&self, argument: usize) -> impl Iterator<Item = &str> {
        let c = self.arguments[argument];
        self.doc.das[c.da_index].tokens[c.lo..c.hi]
            .iter()
            .map(|t| t.stem.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpaceOptions {
    /// Drop arguments made only of personal pronouns and stopwords.
    pub filter_pronouns: bool,
}

/// Candidate spaces of a corpus with the vocabulary that encodes them.
#[derive(Debug, Clone)]
pub struct CandidateSpace {
    pub docs: Vec<DocumentSpace>,
    pub vocab: FeatureVocabulary,
    pub hyper: HyperParams,
}

impl CandidateSpace {
    /// Extracts candidates and features, builds the vocabulary, and
    /// enumerates every document's choices.
    pub fn from_documents(
        docs: &[DecisionDocument],
        cfg: &FeatureConfig<'_>,
        cue_ctx: Option<&CueContext>,
        hyper: HyperParams,
        opts: SpaceOptions,
    ) -> Result<Self, ModelError> {
        hyper.validate()?;
        let mut cands: Vec<Candidates> = docs.iter().map(extract_candidates).collect();
        if opts.filter_pronouns {
            for (dd, c) in docs.iter().zip(cands.iter_mut()) {
                c.arguments
                    .retain(|a| !is_pronoun_only(dd, a, cfg.stopwords));
            }
        }
        let values = docs
            .iter()
            .zip(&cands)
            .map(|(d, c)| document_feature_values(d, c, cfg, cue_ctx))
            .collect::<Result<Vec<_>, _>>()?;
        let vocab = FeatureVocabulary::from_values(
            cfg.phase,
            values.iter().flat_map(|v| v.indicators.iter()),
            values.iter().flat_map(|v| v.arguments.iter()),
        );
        Ok(Self::build(docs, cands, &values, vocab, hyper))
    }

    pub fn build(
        docs: &[DecisionDocument],
        cands: Vec<Candidates>,
        values: &[DocumentFeatureValues],
        vocab: FeatureVocabulary,
        hyper: HyperParams,
    ) -> Self {
        let spaces = docs
            .iter()
            .zip(cands)
            .zip(values)
            .map(|((d, c), v)| {
                let s = DocumentSpace::new(d.clone(), c, v, &vocab, &hyper);
                if s.triples.is_empty() {
                    log::warn!(
                        "document {} has no eligible triple; its relations stay empty",
                        d.decision_id
                    );
                }
                s
            })
            .collect();
        Self {
            docs: spaces,
            vocab,
            hyper,
        }
    }

    pub fn ind_cards(&self) -> Vec<usize> {
        self.vocab.indicator.cardinalities()
    }

    pub fn arg_cards(&self) -> Vec<usize> {
        self.vocab.argument.cardinalities()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests_support::figure_one_docs;
    use crate::features::{Phase, PosGranularity};
    use crate::text::Stopwords;

    fn space(hyper: HyperParams) -> CandidateSpace {
        let sw = Stopwords::default();
        let cfg = FeatureConfig {
            phase: Phase::Cue,
            stopwords: &sw,
            lexicon: None,
            pos: PosGranularity::Full,
        };
        CandidateSpace::from_documents(
            &figure_one_docs(),
            &cfg,
            None,
            hyper,
            SpaceOptions::default(),
        )
        .unwrap()
    }

    fn prior_mass(d: &DocumentSpace, lambda: &[f64]) -> f64 {
        (0..d.n_options())
            .map(|o| d.option_log_prior(o, lambda).exp())
            .sum()
    }

    #[test]
    fn option_priors_sum_to_one() {
        for allow_null in [false, true] {
            let hyper = HyperParams {
                k: 2,
                allow_null,
                ..Default::default()
            };
            let cs = space(hyper);
            for d in &cs.docs {
                for lambda in [
                    vec![0.25; 4],
                    vec![0.1, 0.2, 0.3, 0.4],
                    vec![0.0, 0.0, 0.0, 1.0],
                ] {
                    assert!((prior_mass(d, &lambda) - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn triple_priors_sum_to_one_and_cover_options() {
        let cs = space(HyperParams {
            k: 1,
            ..Default::default()
        });
        for d in &cs.docs {
            let lambda = [0.1, 0.2, 0.3, 0.4];
            let total: f64 = (0..d.triples.len())
                .map(|t| d.triple_prior_log(t, &lambda).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "{}", d.doc.decision_id);
            for t in &d.triples {
                assert_eq!(
                    d.indicators[t.indicator].da_index,
                    d.arguments[t.argument].da_index
                );
            }
        }
    }

    #[test]
    fn short_document_redirects_empty_segments() {
        let cs = space(HyperParams {
            k: 1,
            ..Default::default()
        });
        let d3 = cs
            .docs
            .iter()
            .find(|d| d.doc.decision_id == "dec3")
            .unwrap();
        assert_eq!(d3.da_segment, vec![0, 2]);
        assert_eq!(d3.segment_map, vec![0, 0, 2, 2]);
    }

    #[test]
    fn one_act_per_segment_uniform_prior() {
        // n = 4, L = 4, W = X = 1 gives ln(1/4) under uniform λ.
        let json = {
            let da = |i: usize| {
                format!(
                    r#"{{"id":"a{i}","order":{i},"tokens":[{{"surface":"pick","pos":"VB"}},{{"surface":"it","pos":"PRP"}}],
                    "constituents":{{"label":"VP","lo":0,"hi":2,"children":[{{"label":"NP","lo":1,"hi":2}}]}},
                    "decision_ids":["d"]}}"#
                )
            };
            format!(
                r#"{{"meetings":[{{"id":"m","dialogue_acts":[{}],"decisions":[{{"id":"d","abstract":"x"}}]}}]}}"#,
                (0..4).map(da).collect::<Vec<_>>().join(",")
            )
        };
        let corpus = crate::corpus::Corpus::from_json_str(&json).unwrap();
        let docs =
            crate::corpus::build_decision_documents(&corpus, crate::corpus::Clustering::True, 4);
        let sw = Stopwords::default();
        let cfg = FeatureConfig {
            phase: Phase::Cue,
            stopwords: &sw,
            lexicon: None,
            pos: PosGranularity::Full,
        };
        let cs = CandidateSpace::from_documents(
            &docs,
            &cfg,
            None,
            HyperParams {
                k: 1,
                ..Default::default()
            },
            SpaceOptions::default(),
        )
        .unwrap();
        let d = &cs.docs[0];
        assert_eq!(d.triples.len(), 4);
        for t in 0..4 {
            assert!((d.triple_prior_log(t, &[0.25; 4]) - 0.25f64.ln()).abs() < 1e-12);
        }
        assert_eq!(
            d.triple_prior_log(0, &[0.0, 0.0, 0.0, 1.0]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn pronoun_filter_only_removes_arguments() {
        let sw = Stopwords::default();
        let docs = figure_one_docs();
        let ctx = CueContext::default();
        let cfg = FeatureConfig {
            phase: Phase::Content,
            stopwords: &sw,
            lexicon: None,
            pos: PosGranularity::Full,
        };
        let hyper = HyperParams {
            k: 1,
            ..Default::default()
        };
        let all =
            CandidateSpace::from_documents(&docs, &cfg, Some(&ctx), hyper, SpaceOptions::default())
                .unwrap();
        let filtered = CandidateSpace::from_documents(
            &docs,
            &cfg,
            Some(&ctx),
            hyper,
            SpaceOptions {
                filter_pronouns: true,
            },
        )
        .unwrap();
        for (a, f) in all.docs.iter().zip(&filtered.docs) {
            assert_eq!(a.indicators, f.indicators);
            assert!(f.arguments.iter().all(|x| a.arguments.contains(x)));
            assert!(f.arguments.len() < a.arguments.len());
            for i in 0..f.arguments.len() {
                assert_ne!(f.argument_text(i).to_lowercase(), "we");
            }
        }
    }
}
