use serde::{Deserialize, Serialize};

use super::{DecisionDocument, DialogueAct};

/// A noun or verb token eligible to evoke a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndicatorCandidate {
    pub da_index: usize,
    pub token_index: usize,
}

/// An NP, PP, or "to"-clause constituent eligible as a relation argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArgumentCandidate {
    pub da_index: usize,
    /// Node id within the dialogue act's parse tree.
    pub node: usize,
    pub lo: usize,
    pub hi: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Candidates {
    pub indicators: Vec<IndicatorCandidate>,
    pub arguments: Vec<ArgumentCandidate>,
}

impl Candidates {
    pub fn indicators_in(&self, da_index: usize) -> impl Iterator<Item = &IndicatorCandidate> {
        self.indicators
            .iter()
            .filter(move |c| c.da_index == da_index)
    }

    pub fn arguments_in(&self, da_index: usize) -> impl Iterator<Item = &ArgumentCandidate> {
        self.arguments
            .iter()
            .filter(move |c| c.da_index == da_index)
    }
}

pub(crate) fn is_argument_node(da: &DialogueAct, node: usize) -> bool {
    let n = da.parse.node(node);
    match n.base_label() {
        "NP" | "PP" => true,
        "S" | "SBAR" => da.tokens[n.lo].surface.eq_ignore_ascii_case("to"),
        _ => false,
    }
}

/// Enumerates candidates in document order: dialogue acts in time order,
/// indicators by token position, arguments by parse pre-order.
pub fn extract_candidates(dd: &DecisionDocument) -> Candidates {
    let mut out = Candidates::default();
    for (da_index, da) in dd.das.iter().enumerate() {
        for t in &da.tokens {
            if t.is_noun() || t.is_verb() {
                out.indicators.push(IndicatorCandidate {
                    da_index,
                    token_index: t.index,
                });
            }
        }
        for (node, n) in da.parse.nodes().iter().enumerate() {
            if is_argument_node(da, node) {
                out.arguments.push(ArgumentCandidate {
                    da_index,
                    node,
                    lo: n.lo,
                    hi: n.hi,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests_support::{figure_one_docs, single_da_doc};

    #[test]
    fn rubber_buttons_require_rubber_case() {
        let doc = single_da_doc("fig1.04");
        let c = extract_candidates(&doc);
        let words: Vec<&str> = c
            .indicators
            .iter()
            .map(|i| doc.das[0].tokens[i.token_index].surface.as_str())
            .collect();
        assert_eq!(
            words,
            vec!["Rubber", "buttons", "require", "rubber", "case"]
        );
        let args: Vec<String> = c
            .arguments
            .iter()
            .map(|a| doc.das[0].span_text(a.lo, a.hi))
            .collect();
        assert_eq!(args, vec!["Rubber buttons", "rubber case"]);
    }

    #[test]
    fn to_clause_is_an_argument() {
        let doc = single_da_doc("fig1.07");
        let c = extract_candidates(&doc);
        let args: Vec<String> = c
            .arguments
            .iter()
            .map(|a| doc.das[0].span_text(a.lo, a.hi))
            .collect();
        assert!(args.contains(&"to compromise".to_string()), "{args:?}");
        assert!(args.contains(&"for single curve".to_string()));
    }

    #[test]
    fn counts_match_noun_and_verb_tokens() {
        for doc in figure_one_docs() {
            let c = extract_candidates(&doc);
            let expected = doc
                .das
                .iter()
                .flat_map(|d| d.tokens.iter())
                .filter(|t| t.pos.starts_with("NN") || t.pos.starts_with("VB"))
                .count();
            assert_eq!(c.indicators.len(), expected);
            assert_eq!(c, extract_candidates(&doc));
        }
    }

    #[test]
    fn no_eligible_units() {
        let json = r#"{"meetings":[{"id":"m","dialogue_acts":[{"id":"a","order":0,
            "tokens":[{"surface":"it","pos":"PRP"},{"surface":"really","pos":"RB"}],
            "constituents":{"label":"FRAG","lo":0,"hi":2,"children":[{"label":"ADVP","lo":1,"hi":2}]},
            "decision_ids":["d"]}],"decisions":[{"id":"d","abstract":"x"}]}]}"#;
        let corpus = crate::corpus::Corpus::from_json_str(json).unwrap();
        let docs =
            crate::corpus::build_decision_documents(&corpus, crate::corpus::Clustering::True, 4);
        assert_eq!(extract_candidates(&docs[0]), Candidates::default());
    }
}
