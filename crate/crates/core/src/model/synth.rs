//! Forward sampling of synthetic corpora from planted parameters.
//!
//! Every dialogue act of a synthetic document is a verb group followed by
//! prepositional phrases `for <head>` under one VP. Indicator candidates are
//! the verbs and argument candidates are the phrases, so each act offers
//! every verb-phrase pairing. Sampled feature values are written back into
//! tokens (stem, tag, capitalization) so the regular feature extractor
//! recovers them.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{log_sum_exp, ModelError, ModelParams, RelationParams};
use crate::corpus::Corpus;
use crate::features::{FeatureTemplate, FeatureVocabulary, RoleVocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateValues {
    pub template: FeatureTemplate,
    pub values: Vec<String>,
}

/// Parameters over explicit value lists. Indicator templates are
/// `unigram_stem` and `pos`; argument templates are `unigram_stem` and
/// `arg_has_capitalized`, in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub segments: usize,
    pub allow_null: bool,
    pub null_prior: f64,
    pub indicator_templates: Vec<TemplateValues>,
    pub argument_templates: Vec<TemplateValues>,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeConfig {
    pub docs: usize,
    pub das_per_doc: usize,
    pub indicators_per_da: usize,
    pub arguments_per_da: usize,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            docs: 40,
            das_per_doc: 16,
            indicators_per_da: 2,
            arguments_per_da: 3,
        }
    }
}

/// The planted choice of one (document, relation) factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub doc_id: String,
    pub k: usize,
    /// `(da_index, indicator token, argument lo, argument hi)`; `None` when
    /// the relation was not instantiated.
    pub pick: Option<(usize, usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub truth: Vec<TruthRow>,
}

/// `doc_id<TAB>k<TAB>da_index<TAB>indicator_token<TAB>arg_lo<TAB>arg_hi`,
/// with `-` in the last four columns for an empty relation.
pub fn truth_tsv(rows: &[TruthRow]) -> String {
    rows.iter()
        .map(|r| match r.pick {
            Some((da, i, lo, hi)) => format!("{}\t{}\t{da}\t{i}\t{lo}\t{hi}\n", r.doc_id, r.k),
            None => format!("{}\t{}\t-\t-\t-\t-\n", r.doc_id, r.k),
        })
        .collect()
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Deterministic pseudo-word number `i`. The trailing `k` leaves the word
/// unchanged under Porter stemming.
pub fn pseudo_word(i: usize) -> String {
    let (c, v) = (CONSONANTS.len(), VOWELS.len());
    let mut s = String::new();
    let mut n = i;
    for _ in 0..2 {
        s.push(CONSONANTS[n % c] as char);
        n /= c;
        s.push(VOWELS[n % v] as char);
        n /= v;
    }
    s.push('k');
    s
}

fn spread(n: usize, hot: &[usize], hot_mass: f64) -> Vec<f64> {
    let cold = n - hot.len();
    let mut v = vec![
        if cold > 0 {
            (1.0 - hot_mass) / cold as f64
        } else {
            0.0
        };
        n
    ];
    for &h in hot {
        v[h] = if cold > 0 {
            hot_mass / hot.len() as f64
        } else {
            1.0 / hot.len() as f64
        };
    }
    v
}

impl PlantedModel {
    /// Relations with disjoint signature stems, distinct preferred verb
    /// tags and capitalization, and locations concentrated on the last
    /// segment.
    pub fn well_separated(k: usize, segments: usize) -> Self {
        const SIG: usize = 3;
        const FILL: usize = 200;
        let n_stems = k * SIG + FILL;
        let ind_stems: Vec<String> = (0..n_stems).map(pseudo_word).collect();
        let arg_stems: Vec<String> = (n_stems..2 * n_stems).map(pseudo_word).collect();
        let tags: Vec<String> = ["VB", "VBD", "VBP", "VBZ", "VBG", "VBN"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let caps = vec!["true".to_string(), "false".to_string()];
        let all_sig: Vec<usize> = (0..k * SIG).collect();
        let last = segments - 1;
        let relations = (0..k)
            .map(|kk| {
                let sig: Vec<usize> = (kk * SIG..(kk + 1) * SIG).collect();
                let stem_fg = spread(n_stems, &sig, 0.99);
                let stem_bg = spread(n_stems, &all_sig, 0.03);
                let tag_fg = spread(tags.len(), &[kk % tags.len()], 0.75);
                let tag_bg = vec![1.0 / tags.len() as f64; tags.len()];
                let cap_fg = if kk % 2 == 0 {
                    vec![0.9, 0.1]
                } else {
                    vec![0.1, 0.9]
                };
                let cap_bg = vec![0.3, 0.7];
                let lambda = if segments == 1 {
                    vec![1.0]
                } else {
                    spread(segments, &[last], 0.97)
                };
                RelationParams {
                    theta_i: vec![stem_fg.clone(), tag_fg],
                    theta_bi: vec![stem_bg.clone(), tag_bg],
                    theta_a: vec![stem_fg, cap_fg],
                    theta_ba: vec![stem_bg, cap_bg],
                    lambda,
                }
            })
            .collect();
        Self {
            segments,
            allow_null: false,
            null_prior: 1e-3,
            indicator_templates: vec![
                TemplateValues {
                    template: FeatureTemplate::UnigramStem,
                    values: ind_stems,
                },
                TemplateValues {
                    template: FeatureTemplate::Pos,
                    values: tags,
                },
            ],
            argument_templates: vec![
                TemplateValues {
                    template: FeatureTemplate::UnigramStem,
                    values: arg_stems,
                },
                TemplateValues {
                    template: FeatureTemplate::ArgHasCapitalized,
                    values: caps,
                },
            ],
            params: ModelParams { relations },
        }
    }

    pub fn k(&self) -> usize {
        self.params.k()
    }

    fn validate(&self) -> Result<(), ModelError> {
        let ind: Vec<_> = self
            .indicator_templates
            .iter()
            .map(|t| t.template)
            .collect();
        let arg: Vec<_> = self.argument_templates.iter().map(|t| t.template).collect();
        if ind != [FeatureTemplate::UnigramStem, FeatureTemplate::Pos]
            || arg
                != [
                    FeatureTemplate::UnigramStem,
                    FeatureTemplate::ArgHasCapitalized,
                ]
        {
            return Err(ModelError::Params(
                "unsupported planted template layout".into(),
            ));
        }
        if self.indicator_templates[1]
            .values
            .iter()
            .any(|t| !t.starts_with("VB"))
        {
            return Err(ModelError::Params(
                "planted indicator tags must be verb tags".into(),
            ));
        }
        let words_ok = |vals: &[String]| {
            vals.iter()
                .all(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_lowercase()))
        };
        if !words_ok(&self.indicator_templates[0].values)
            || !words_ok(&self.argument_templates[0].values)
        {
            return Err(ModelError::Params(
                "planted stems must be lowercase ASCII words".into(),
            ));
        }
        let ic: Vec<usize> = self
            .indicator_templates
            .iter()
            .map(|t| t.values.len())
            .collect();
        let ac: Vec<usize> = self
            .argument_templates
            .iter()
            .map(|t| t.values.len())
            .collect();
        if self.k() == 0 {
            return Err(ModelError::Params("no relations".into()));
        }
        for r in &self.params.relations {
            r.validate(&ic, &ac, self.segments)?;
        }
        Ok(())
    }

    /// Re-expresses the planted parameters over a learned vocabulary.
    /// Templates the model does not plant are uniform; planted vectors are
    /// restricted to the observed values and renormalized.
    pub fn params_in_vocabulary(&self, vocab: &FeatureVocabulary) -> ModelParams {
        let map_family =
            |planted: &[TemplateValues], fam: &[Vec<f64>], rv: &RoleVocabulary| -> Vec<Vec<f64>> {
                rv.templates
                    .iter()
                    .zip(&rv.values)
                    .map(
                        |(t, values)| match planted.iter().position(|p| p.template == *t) {
                            Some(pi) => {
                                let raw: Vec<f64> = values
                                    .iter()
                                    .map(|v| {
                                        planted[pi]
                                            .values
                                            .iter()
                                            .position(|x| x == v)
                                            .map_or(0.0, |j| fam[pi][j])
                                    })
                                    .collect();
                                let s: f64 = raw.iter().sum();
                                if s > 0.0 {
                                    raw.iter().map(|x| x / s).collect()
                                } else {
                                    vec![1.0 / values.len() as f64; values.len()]
                                }
                            }
                            None => vec![1.0 / values.len() as f64; values.len()],
                        },
                    )
                    .collect()
            };
        ModelParams {
            relations: self
                .params
                .relations
                .iter()
                .map(|r| RelationParams {
                    theta_i: map_family(&self.indicator_templates, &r.theta_i, &vocab.indicator),
                    theta_bi: map_family(&self.indicator_templates, &r.theta_bi, &vocab.indicator),
                    theta_a: map_family(&self.argument_templates, &r.theta_a, &vocab.argument),
                    theta_ba: map_family(&self.argument_templates, &r.theta_ba, &vocab.argument),
                    lambda: r.lambda.clone(),
                })
                .collect(),
        }
    }
}

fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    WeightedIndex::new(probs)
        .expect("positive mass")
        .sample(rng)
}

/// Draws a value per template from the normalized product of relation
/// vectors (foreground for relations in `chosen_by`).
fn sample_emission<R: Rng>(
    rng: &mut R,
    fg: &[&Vec<Vec<f64>>],
    bg: &[&Vec<Vec<f64>>],
    chosen_by: &[bool],
) -> Vec<usize> {
    let slots = fg[0].len();
    (0..slots)
        .map(|s| {
            let card = fg[0][s].len();
            let lp: Vec<f64> = (0..card)
                .map(|v| {
                    chosen_by
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| {
                            if c {
                                fg[k][s][v].ln()
                            } else {
                                bg[k][s][v].ln()
                            }
                        })
                        .sum()
                })
                .collect();
            let z = log_sum_exp(lp.iter().copied());
            let probs: Vec<f64> = lp.iter().map(|x| (x - z).exp()).collect();
            sample_categorical(rng, &probs)
        })
        .collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Samples a corpus (one meeting and one decision per document) and the
/// planted choices. Output is a pure function of the inputs and `seed`.
pub fn sample_corpus(
    planted: &PlantedModel,
    shape: &ShapeConfig,
    seed: u64,
) -> Result<SyntheticCorpus, ModelError> {
    planted.validate()?;
    if shape.docs == 0
        || shape.das_per_doc == 0
        || shape.indicators_per_da == 0
        || shape.arguments_per_da == 0
    {
        return Err(ModelError::Shape(format!(
            "every document needs dialogue acts with indicators and arguments (got {shape:?})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = planted.k();
    let l = planted.segments;
    let n = shape.das_per_doc;
    let (m, x) = (shape.indicators_per_da, shape.arguments_per_da);
    let da_segment: Vec<usize> = (0..n).map(|j| j * l / n).collect();
    let filled: Vec<usize> = {
        let mut f: Vec<usize> = da_segment.clone();
        f.dedup();
        f
    };
    let target = |s: usize| -> usize {
        if filled.contains(&s) {
            s
        } else {
            filled
                .iter()
                .rev()
                .find(|&&t| t < s)
                .or_else(|| filled.iter().find(|&&t| t > s))
                .copied()
                .unwrap_or(0)
        }
    };
    let fg_i: Vec<_> = planted
        .params
        .relations
        .iter()
        .map(|r| &r.theta_i)
        .collect();
    let bg_i: Vec<_> = planted
        .params
        .relations
        .iter()
        .map(|r| &r.theta_bi)
        .collect();
    let fg_a: Vec<_> = planted
        .params
        .relations
        .iter()
        .map(|r| &r.theta_a)
        .collect();
    let bg_a: Vec<_> = planted
        .params
        .relations
        .iter()
        .map(|r| &r.theta_ba)
        .collect();
    let ind_vals = &planted.indicator_templates;
    let arg_vals = &planted.argument_templates;

    let mut meetings = Vec::new();
    let mut truth = Vec::new();
    for d in 0..shape.docs {
        let meeting_id = format!("syn{d:03}");
        let decision_id = format!("{meeting_id}.dec");
        // (da, indicator slot, argument slot) per relation.
        let mut picks: Vec<Option<(usize, usize, usize)>> = Vec::with_capacity(k);
        for r in &planted.params.relations {
            if planted.allow_null && rng.random::<f64>() < planted.null_prior {
                picks.push(None);
                continue;
            }
            let s = target(sample_categorical(&mut rng, &r.lambda));
            let das: Vec<usize> = (0..n).filter(|&j| da_segment[j] == s).collect();
            let z = das[rng.random_range(0..das.len())];
            picks.push(Some((z, rng.random_range(0..m), rng.random_range(0..x))));
        }
        let mut dialogue_acts = Vec::new();
        let mut abstract_parts = vec![String::new(); k];
        for j in 0..n {
            let mut tokens = Vec::new();
            let mut deps = Vec::new();
            for i in 0..m {
                let chosen: Vec<bool> = picks
                    .iter()
                    .map(|p| matches!(p, Some((z, ii, _)) if *z == j && *ii == i))
                    .collect();
                let v = sample_emission(&mut rng, &fg_i, &bg_i, &chosen);
                let stem = &ind_vals[0].values[v[0]];
                tokens
                    .push(json!({"surface": stem, "stem": stem, "pos": ind_vals[1].values[v[1]]}));
                deps.push(json!({"rel": "root", "head": Value::Null, "dep": i}));
            }
            let mut children = Vec::new();
            let mut texts = Vec::new();
            for a in 0..x {
                let chosen: Vec<bool> = picks
                    .iter()
                    .map(|p| matches!(p, Some((z, _, aa)) if *z == j && *aa == a))
                    .collect();
                let v = sample_emission(&mut rng, &fg_a, &bg_a, &chosen);
                let stem = &arg_vals[0].values[v[0]];
                let surface = if arg_vals[1].values[v[1]] == "true" {
                    capitalize(stem)
                } else {
                    stem.clone()
                };
                let p = m + 2 * a;
                tokens.push(json!({"surface": "for", "stem": "for", "pos": "IN"}));
                tokens.push(json!({"surface": surface, "stem": stem, "pos": "FW"}));
                deps.push(json!({"rel": "prep", "head": 0, "dep": p}));
                deps.push(json!({"rel": "pobj", "head": p, "dep": p + 1}));
                children.push(json!({"label": "PP", "lo": p, "hi": p + 2, "head": p + 1}));
                texts.push(format!("for {surface}"));
            }
            for (kk, pick) in picks.iter().enumerate() {
                if let Some((z, i, a)) = *pick {
                    if z == j {
                        let verb = tokens[i]["surface"].as_str().unwrap_or_default();
                        abstract_parts[kk] = format!("{verb} {}", texts[a]);
                    }
                }
            }
            let len = tokens.len();
            dialogue_acts.push(json!({
                "id": format!("{meeting_id}.{j:02}"),
                "order": j,
                "speaker": "A",
                "speaker_role": "PM",
                "da_type": "inf",
                "topic": "design",
                "tokens": tokens,
                "constituents": {"label": "VP", "lo": 0, "hi": len, "head": 0, "children": children},
                "dependencies": deps,
                "decision_ids": [decision_id.clone()],
            }));
        }
        for (kk, pick) in picks.iter().enumerate() {
            truth.push(TruthRow {
                doc_id: decision_id.clone(),
                k: kk,
                pick: pick.map(|(z, i, a)| (z, i, m + 2 * a, m + 2 * a + 2)),
            });
        }
        let abstract_text = abstract_parts
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(". ");
        meetings.push(json!({
            "id": meeting_id,
            "dialogue_acts": dialogue_acts,
            "decisions": [{"id": decision_id, "abstract": abstract_text}],
        }));
    }
    let text = serde_json::to_string(&json!({ "meetings": meetings })).expect("serializable");
    let corpus = Corpus::from_json_str(&text)
        .map_err(|e| ModelError::Shape(format!("generated corpus is invalid: {e}")))?;
    Ok(SyntheticCorpus { corpus, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::stem;

    #[test]
    fn pseudo_words_are_stable_under_stemming() {
        for i in 0..500 {
            let w = pseudo_word(i);
            assert_eq!(stem(&w), w);
        }
        let set: std::collections::HashSet<_> = (0..4900).map(pseudo_word).collect();
        assert_eq!(set.len(), 4900);
    }

    #[test]
    fn same_seed_same_corpus() {
        let p = PlantedModel::well_separated(2, 4);
        let shape = ShapeConfig {
            docs: 3,
            ..Default::default()
        };
        let a = sample_corpus(&p, &shape, 7).unwrap();
        let b = sample_corpus(&p, &shape, 7).unwrap();
        assert_eq!(a.corpus.to_json_string(), b.corpus.to_json_string());
        assert_eq!(truth_tsv(&a.truth), truth_tsv(&b.truth));
        let c = sample_corpus(&p, &shape, 8).unwrap();
        assert_ne!(a.corpus.to_json_string(), c.corpus.to_json_string());
    }

    #[test]
    fn point_mass_location_picks_last_quarter() {
        let mut p = PlantedModel::well_separated(2, 4);
        for r in &mut p.params.relations {
            r.lambda = vec![0.0, 0.0, 0.0, 1.0];
        }
        let shape = ShapeConfig {
            docs: 20,
            ..Default::default()
        };
        let s = sample_corpus(&p, &shape, 3).unwrap();
        for row in &s.truth {
            let (z, ..) = row.pick.unwrap();
            assert!(z >= 12, "{z}");
        }
    }

    #[test]
    fn infeasible_shape() {
        let p = PlantedModel::well_separated(1, 4);
        let shape = ShapeConfig {
            arguments_per_da: 0,
            ..Default::default()
        };
        assert!(matches!(
            sample_corpus(&p, &shape, 1),
            Err(ModelError::Shape(_))
        ));
    }

    #[test]
    fn background_frequencies_match_within_three_sigma() {
        // With K = 1 an argument nobody chose is emitted from the background
        // vector alone.
        let p = PlantedModel::well_separated(1, 4);
        let shape = ShapeConfig {
            docs: 400,
            das_per_doc: 8,
            indicators_per_da: 1,
            arguments_per_da: 4,
        };
        let s = sample_corpus(&p, &shape, 11).unwrap();
        let mut caps = 0usize;
        let mut total = 0usize;
        for (d, m) in s.corpus.meetings.iter().enumerate() {
            let pick = s.truth[d].pick.unwrap();
            for (j, da) in m.dialogue_acts.iter().enumerate() {
                for a in 0..4 {
                    let lo = 1 + 2 * a;
                    if (j, lo) == (pick.0, pick.2) {
                        continue;
                    }
                    total += 1;
                    if da.tokens[lo + 1]
                        .surface
                        .chars()
                        .next()
                        .unwrap()
                        .is_uppercase()
                    {
                        caps += 1;
                    }
                }
            }
        }
        assert!(total >= 10_000);
        let p_true = 0.3;
        let sigma = (p_true * (1.0 - p_true) / total as f64).sqrt();
        let freq = caps as f64 / total as f64;
        assert!(
            (freq - p_true).abs() < 3.0 * sigma,
            "{freq} vs {p_true} (sigma {sigma})"
        );
    }
}
