use std::sync::Arc;

use relexsum::corpus::{
    extract_candidates, Corpus, DecisionDocument, IndicatorCandidate, DEFAULT_SEGMENTS,
};
use relexsum::inference::{matching_pattern, SyntacticPattern};

pub const TRIPLES: &str = include_str!("../fixtures/syntax_triples.tsv");

pub struct LabeledTriple {
    pub da_id: String,
    pub indicator: usize,
    pub span: (usize, usize),
    pub expected: Option<SyntacticPattern>,
    pub description: String,
}

pub fn labeled_triples() -> Vec<LabeledTriple> {
    TRIPLES
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            let n = |i: usize| f[i].parse::<usize>().expect("index");
            let expected = match f[4] {
                "VerbObject" => Some(SyntacticPattern::VerbObject),
                "VerbPhrase" => Some(SyntacticPattern::VerbPhrase),
                "NounPhrase" => Some(SyntacticPattern::NounPhrase),
                "none" => None,
                other => panic!("unknown label {other}"),
            };
            LabeledTriple {
                da_id: f[0].into(),
                indicator: n(1),
                span: (n(2), n(3)),
                expected,
                description: format!("{}: {} + \"{}\"", f[0], f[5], f[6]),
            }
        })
        .collect()
}

/// Runs the matcher on one triple inside a one-act document.
pub fn classify(corpus: &Corpus, t: &LabeledTriple) -> Option<SyntacticPattern> {
    let da = corpus
        .dialogue_acts()
        .find(|d| d.id == t.da_id)
        .expect("known dialogue act");
    let dd = DecisionDocument {
        decision_id: format!("solo-{}", t.da_id),
        meeting_id: da.meeting_id.clone(),
        das: vec![Arc::clone(da)],
        gold_abstract: None,
        segments: DEFAULT_SEGMENTS,
    };
    let cands = extract_candidates(&dd);
    let args: Vec<_> = cands
        .arguments
        .iter()
        .filter(|a| (a.lo, a.hi) == t.span)
        .collect();
    assert_eq!(
        args.len(),
        1,
        "{}: argument span is not a unique candidate",
        t.description
    );
    let ind = IndicatorCandidate {
        da_index: 0,
        token_index: t.indicator,
    };
    assert!(
        cands.indicators.contains(&ind),
        "{}: indicator is not a candidate",
        t.description
    );
    matching_pattern(&dd, &ind, args[0])
}
