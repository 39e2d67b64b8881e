use serde::{Deserialize, Serialize};

use crate::corpus::{ArgumentCandidate, DecisionDocument, IndicatorCandidate};

/// The indicator-argument patterns counted by the syntactic constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyntacticPattern {
    /// Verb indicator, NP argument whose headword is its `dobj` or `nsubj`.
    VerbObject,
    /// Verb indicator, PP or to-clause argument under the verb's constituent.
    VerbPhrase,
    /// Noun indicator heading an NP that is a sibling of a PP argument.
    NounPhrase,
}

/// The first pattern the pair satisfies, if any.
pub fn matching_pattern(
    dd: &DecisionDocument,
    indicator: &IndicatorCandidate,
    argument: &ArgumentCandidate,
) -> Option<SyntacticPattern> {
    if indicator.da_index != argument.da_index {
        return None;
    }
    let da = &dd.das[indicator.da_index];
    let tok = &da.tokens[indicator.token_index];
    let tree = &da.parse;
    let arg_node = tree.node(argument.node);
    let arg_label = arg_node.base_label();
    let is_to_clause = matches!(arg_label, "S" | "SBAR")
        && da.tokens[arg_node.lo].surface.eq_ignore_ascii_case("to");

    if tok.is_verb() {
        if arg_label == "NP" {
            let head = tree.head_token(argument.node, &da.tokens);
            if let Some(e) = da.incoming_edge(head) {
                if e.head == Some(indicator.token_index)
                    && matches!(e.relation.as_str(), "dobj" | "nsubj")
                {
                    return Some(SyntacticPattern::VerbObject);
                }
            }
        }
        if arg_label == "PP" || is_to_clause {
            let parent = tree.parent(argument.node);
            if parent.is_some() && parent == tree.lowest_containing(indicator.token_index) {
                return Some(SyntacticPattern::VerbPhrase);
            }
        }
    }
    if tok.is_noun() && arg_label == "PP" {
        let arg_parent = tree.parent(argument.node)?;
        let heads_sibling_np = tree.nodes().iter().enumerate().any(|(id, n)| {
            n.base_label() == "NP"
                && n.parent == Some(arg_parent)
                && id != argument.node
                && tree.head_token(id, &da.tokens) == indicator.token_index
        });
        if heads_sibling_np {
            return Some(SyntacticPattern::NounPhrase);
        }
    }
    None
}

pub fn syntactic_match(
    dd: &DecisionDocument,
    indicator: &IndicatorCandidate,
    argument: &ArgumentCandidate,
) -> bool {
    matching_pattern(dd, indicator, argument).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::extract_candidates;
    use crate::corpus::tests_support::single_da_doc;

    fn check(da: &str, word: &str, arg: &str) -> Option<SyntacticPattern> {
        let dd = single_da_doc(da);
        let c = extract_candidates(&dd);
        let da0 = &dd.das[0];
        let i = c
            .indicators
            .iter()
            .find(|i| da0.tokens[i.token_index].surface == word)
            .unwrap_or_else(|| panic!("{word}"));
        let a = c
            .arguments
            .iter()
            .find(|a| da0.span_text(a.lo, a.hi) == arg)
            .unwrap_or_else(|| panic!("{arg}"));
        matching_pattern(&dd, i, a)
    }

    #[test]
    fn subject_and_object_of_require() {
        assert_eq!(
            check("fig1.04", "require", "Rubber buttons"),
            Some(SyntacticPattern::VerbObject)
        );
        assert_eq!(
            check("fig1.04", "require", "rubber case"),
            Some(SyntacticPattern::VerbObject)
        );
    }

    #[test]
    fn go_for_single_curve() {
        assert_eq!(
            check("fig1.07", "go", "for single curve"),
            Some(SyntacticPattern::VerbPhrase)
        );
        assert_eq!(check("fig1.07", "go", "single curve"), None);
    }

    #[test]
    fn noun_with_prepositional_sibling() {
        assert_eq!(
            check("fig1.06", "sort", "of stick-on badge"),
            Some(SyntacticPattern::NounPhrase)
        );
    }
}
