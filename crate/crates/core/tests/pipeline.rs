use std::path::PathBuf;

use relexsum::corpus::{
    build_decision_documents, Clustering, Corpus, DecisionDocument, DEFAULT_SEGMENTS,
};
use relexsum::features::{CueContext, Phase};
use relexsum::inference::InferenceConfig;
use relexsum::model::Choice;
use relexsum::pipeline::{
    annotate_cue_context, learn_both, learn_phase, summarize, upperbound_summary, LearnedModel,
    Method, ModelArtifact, PipelineConfig, PipelineError, Resources, SummaryFile, SummaryItem,
};
use relexsum::rouge::{evaluate, Aggregate, Metric};
use relexsum::text::Stopwords;

fn figure_one() -> Vec<DecisionDocument> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/figure1.json");
    let corpus = Corpus::load(path).unwrap();
    build_decision_documents(&corpus, Clustering::True, DEFAULT_SEGMENTS)
}

fn quick(k: usize) -> PipelineConfig {
    PipelineConfig {
        k,
        k_cue: 2,
        inference: InferenceConfig {
            restarts: 2,
            max_sweeps: 30,
            seed: 5,
            ..InferenceConfig::default()
        },
        ..PipelineConfig::default()
    }
}

fn cue_model(k: usize, allow_null: bool) -> LearnedModel {
    let sw = Stopwords::default();
    let cfg = PipelineConfig {
        allow_null,
        ..quick(k)
    };
    let res = Resources {
        stopwords: &sw,
        lexicon: None,
    };
    let mut cfg = cfg;
    cfg.k_cue = k;
    learn_phase(&figure_one(), Phase::Cue, &cfg, res, None).unwrap()
}

/// Puts the given masses on the first triples of factor (d, k), each
/// through its first location option, and the rest on the empty choice
/// when there is one.
fn set_masses(m: &mut LearnedModel, d: usize, k: usize, masses: &[(usize, f64)]) {
    let ds = &m.space.docs[d];
    let mut row = vec![0.0; ds.n_options()];
    for &(t, q) in masses {
        let o = ds
            .options
            .iter()
            .position(|c| c.triple() == Some(t))
            .unwrap();
        row[o] += q;
    }
    let used: f64 = row.iter().sum();
    if let Some(n) = ds.options.iter().position(|c| *c == Choice::Null) {
        row[n] += 1.0 - used;
    }
    m.result.state.c_hat[d][k] = row;
}

#[test]
fn summarize_takes_the_argmax_triple() {
    let mut m = cue_model(1, false);
    set_masses(&mut m, 0, 0, &[(0, 0.1), (1, 0.7), (2, 0.2)]);
    let s = summarize(&m, 0);
    let r: Vec<_> = s.relations().collect();
    assert_eq!(r.len(), 1);
    let t = m.space.docs[0].triples[1];
    let ind = m.space.docs[0].indicators[t.indicator];
    assert_eq!(r[0].indicator.token_index, ind.token_index);
    assert!((r[0].probability - 0.7).abs() < 1e-12);
}

#[test]
fn ties_go_to_the_earliest_triple() {
    let mut m = cue_model(1, false);
    let n = m.space.docs[1].triples.len();
    set_masses(&mut m, 1, 0, &[(n - 1, 0.5), (0, 0.5)]);
    let s = summarize(&m, 1);
    let r = s.relations().next().unwrap();
    let t = m.space.docs[1].triples[0];
    assert_eq!(
        r.indicator.da_index,
        m.space.docs[1].indicators[t.indicator].da_index
    );
    assert_eq!(
        r.indicator.token_index,
        m.space.docs[1].indicators[t.indicator].token_index
    );
}

#[test]
fn empty_argmax_relations_are_skipped() {
    let mut m = cue_model(3, true);
    for d in 0..m.space.docs.len() {
        set_masses(&mut m, d, 0, &[(0, 0.9)]);
        set_masses(&mut m, d, 1, &[(0, 0.3)]);
        set_masses(&mut m, d, 2, &[(1, 0.8)]);
    }
    let s = summarize(&m, 0);
    let ks: Vec<usize> = s.relations().map(|r| r.relation).collect();
    assert_eq!(ks, vec![0, 2]);
    assert_eq!(s.method, Method::Relations);
}

#[test]
fn rendering_joins_indicator_and_argument() {
    let mut m = cue_model(1, false);
    set_masses(&mut m, 0, 0, &[(0, 1.0)]);
    let s = summarize(&m, 0);
    let r = s.relations().next().unwrap();
    assert_eq!(
        s.render(),
        format!("{} {}", r.indicator.surface, r.argument.text)
    );
}

#[test]
fn upperbound_examples() {
    let docs = figure_one();
    let sw = Stopwords::default();
    let dec2 = docs.iter().find(|d| d.decision_id == "dec2").unwrap();
    let s = upperbound_summary(dec2, &sw).unwrap();
    let SummaryItem::Words { words } = &s.items[0] else {
        panic!()
    };
    // "rubber" appears in three dialogue acts but is emitted once.
    assert_eq!(words.iter().filter(|w| w.as_str() == "rubber").count(), 1);
    assert!(words.contains(&"case".to_string()) || words.contains(&"cases".to_string()));

    let mut disjoint = dec2.clone();
    disjoint.gold_abstract = Some("zebra quantum".into());
    assert!(upperbound_summary(&disjoint, &sw).unwrap().items.is_empty());

    let mut none = dec2.clone();
    none.gold_abstract = None;
    assert!(matches!(
        upperbound_summary(&none, &sw),
        Err(PipelineError::MissingAbstract(_))
    ));
}

#[test]
fn upperbound_has_unit_rouge1_precision() {
    let docs = figure_one();
    let sw = Stopwords::default();
    for dd in &docs {
        let s = upperbound_summary(dd, &sw).unwrap();
        let sys = [(dd.decision_id.clone(), s.render())].into_iter().collect();
        let gold = [(dd.decision_id.clone(), dd.gold_abstract.clone().unwrap())]
            .into_iter()
            .collect();
        let r = evaluate(&sys, &gold, &sw, Aggregate::Macro).unwrap();
        assert_eq!(r.get(Metric::Rouge1).precision, 1.0, "{}", dd.decision_id);
    }
}

#[test]
fn cue_context_keys_to_the_earliest_cue() {
    let docs = figure_one();
    let mut m = cue_model(2, false);
    let d = docs.iter().position(|d| d.decision_id == "dec2").unwrap();
    let n = m.space.docs[d].triples.len();
    set_masses(&mut m, d, 0, &[(n - 1, 1.0)]);
    set_masses(&mut m, d, 1, &[(0, 1.0)]);
    let cues: Vec<_> = (0..docs.len()).map(|i| summarize(&m, i)).collect();
    let ctx = annotate_cue_context(&docs, &cues);
    let dc = ctx.document("dec2").unwrap();
    assert_eq!(dc.instances.len(), 2);
    let first = m.space.docs[d].indicators[m.space.docs[d].triples[0].indicator];
    assert_eq!(
        dc.first_offset(),
        Some(docs[d].token_offset(first.da_index, first.token_index))
    );

    let empty = annotate_cue_context(&docs, &[]);
    assert!(empty.documents.values().all(|c| c.instances.is_empty()));
}

#[test]
fn content_phase_drops_pronoun_arguments() {
    let docs = figure_one();
    let sw = Stopwords::default();
    let res = Resources {
        stopwords: &sw,
        lexicon: None,
    };
    let cue = learn_phase(&docs, Phase::Cue, &quick(2), res, None).unwrap();
    let content = learn_phase(
        &docs,
        Phase::Content,
        &quick(2),
        res,
        Some(&CueContext::default()),
    )
    .unwrap();
    let has_we = |m: &LearnedModel| {
        m.space
            .docs
            .iter()
            .any(|ds| (0..ds.arguments.len()).any(|a| ds.argument_text(a) == "we"))
    };
    assert!(has_we(&cue));
    assert!(!has_we(&content));
    for (c, k) in cue.space.docs.iter().zip(&content.space.docs) {
        assert!(k.arguments.iter().all(|a| c.arguments.contains(a)));
    }
    let dec2 = content
        .space
        .docs
        .iter()
        .find(|d| d.doc.decision_id == "dec2")
        .unwrap();
    let pair = dec2.triples.iter().any(|t| {
        dec2.doc.das[dec2.indicators[t.indicator].da_index].tokens
            [dec2.indicators[t.indicator].token_index]
            .surface
            == "go"
            && dec2.argument_text(t.argument) == "for single curve"
    });
    assert!(pair);
}

#[test]
fn both_phases_and_artifact_round_trip() {
    let docs = figure_one();
    let sw = Stopwords::default();
    let res = Resources {
        stopwords: &sw,
        lexicon: None,
    };
    let cfg = quick(3);
    let (cue, content) = learn_both(&docs, &cfg, res).unwrap();
    let summaries = content.summaries();
    assert!(summaries.iter().all(|s| s.relations().count() <= 3));
    let ids: Vec<String> = docs.iter().map(|d| d.decision_id.clone()).collect();
    let art = ModelArtifact::new(cfg, ids.clone(), Some(&cue), Some(&content));
    assert_eq!(art.content.as_ref().unwrap().hyper.k, 3);
    let text = art.to_json_string();
    let back = ModelArtifact::from_json_str(&text).unwrap();
    assert_eq!(back.to_json_string(), text);
    let from_disk = SummaryFile {
        summaries: back.summaries_for(&ids).unwrap(),
    };
    let in_memory = SummaryFile { summaries };
    assert_eq!(from_disk.to_json_string(), in_memory.to_json_string());
    assert!(matches!(
        back.summaries_for(&["nope".to_string()]),
        Err(PipelineError::UnknownDocuments(_))
    ));

    let (cue2, content2) = learn_both(&docs, &cfg, res).unwrap();
    let again = ModelArtifact::new(cfg, ids, Some(&cue2), Some(&content2));
    assert_eq!(again.to_json_string(), text);
}

#[test]
fn artifact_version_is_checked() {
    let text = r#"{"format_version": 999}"#;
    assert!(matches!(
        ModelArtifact::from_json_str(text),
        Err(PipelineError::Version { found: 999, .. })
    ));
}
