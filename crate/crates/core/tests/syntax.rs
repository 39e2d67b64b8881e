mod common;

use common::syntax::{classify, labeled_triples};
use relexsum::corpus::Corpus;

#[test]
fn matcher_agrees_with_hand_labels() {
    let corpus = Corpus::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/figure1.json"
    ))
    .unwrap();
    let triples = labeled_triples();
    assert_eq!(triples.len(), 12);
    assert_eq!(triples.iter().filter(|t| t.expected.is_some()).count(), 6);
    for t in &triples {
        assert_eq!(classify(&corpus, t), t.expected, "{}", t.description);
    }
}
