use serde::{Deserialize, Serialize};

use super::Token;

/// A phrase-level constituent. Token spans are half-open `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituentNode {
    pub label: String,
    pub lo: usize,
    pub hi: usize,
    pub head: Option<usize>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

impl ConstituentNode {
    pub fn contains(&self, token: usize) -> bool {
        self.lo <= token && token < self.hi
    }

    pub fn base_label(&self) -> &str {
        base_label(&self.label)
    }
}

/// Strips function tags and indices (`NP-SBJ-1` -> `NP`).
pub fn base_label(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    label.split(['-', '=']).next().unwrap_or(label)
}

/// A constituency tree stored in pre-order; node 0 is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseTree {
    nodes: Vec<ConstituentNode>,
}

impl ParseTree {
    pub(crate) fn from_nodes(nodes: Vec<ConstituentNode>) -> Self {
        Self { nodes }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[ConstituentNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &ConstituentNode {
        &self.nodes[id]
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent
    }

    /// The deepest constituent whose span contains `token`.
    pub fn lowest_containing(&self, token: usize) -> Option<usize> {
        let mut cur = self.root();
        if !self.nodes.get(cur)?.contains(token) {
            return None;
        }
        'descend: loop {
            for &c in &self.nodes[cur].children {
                if self.nodes[c].contains(token) {
                    cur = c;
                    continue 'descend;
                }
            }
            return Some(cur);
        }
    }

    /// Head token of a constituent: the annotated head when present,
    /// otherwise a label-driven fallback (rightmost noun for NP, the object
    /// head of the leading preposition for PP, leftmost verb for VP and
    /// clauses, rightmost token for anything else).
    pub fn head_token(&self, id: usize, tokens: &[Token]) -> usize {
        let node = &self.nodes[id];
        if let Some(h) = node.head {
            return h;
        }
        let span = node.lo..node.hi;
        match node.base_label() {
            "NP" | "NX" | "NML" => span
                .clone()
                .rev()
                .find(|&t| tokens[t].is_noun())
                .unwrap_or(node.hi - 1),
            "PP" => {
                let prep = span
                    .clone()
                    .find(|&t| tokens[t].pos == "IN" || tokens[t].pos == "TO");
                match prep {
                    Some(p) => {
                        let object = node
                            .children
                            .iter()
                            .copied()
                            .find(|&c| self.nodes[c].lo > p && self.nodes[c].base_label() == "NP")
                            .or_else(|| {
                                node.children
                                    .iter()
                                    .copied()
                                    .find(|&c| self.nodes[c].lo > p)
                            });
                        match object {
                            Some(c) => self.head_token(c, tokens),
                            None => (p + 1..node.hi)
                                .rev()
                                .find(|&t| tokens[t].is_noun())
                                .unwrap_or(node.hi - 1),
                        }
                    }
                    None => node.hi - 1,
                }
            }
            "VP" | "S" | "SBAR" | "SQ" | "SINV" | "SBARQ" => span
                .clone()
                .find(|&t| tokens[t].is_verb())
                .unwrap_or(node.lo),
            _ => node.hi - 1,
        }
    }

    /// Top-level clauses: after descending through unary nodes at the top,
    /// the S/SBAR children of the first branching node, ordered by position.
    pub fn top_level_clauses(&self) -> Vec<usize> {
        let mut cur = self.root();
        if self.nodes.is_empty() {
            return Vec::new();
        }
        while self.nodes[cur].children.len() == 1 {
            cur = self.nodes[cur].children[0];
        }
        self.nodes[cur]
            .children
            .iter()
            .copied()
            .filter(|&c| matches!(self.nodes[c].base_label(), "S" | "SBAR"))
            .collect()
    }

    /// Zero-based clause index of a token. Tokens outside any top-level
    /// clause belong to the closest preceding one (or the first).
    pub fn clause_index(&self, token: usize) -> usize {
        let clauses = self.top_level_clauses();
        let mut idx = 0;
        for (i, &c) in clauses.iter().enumerate() {
            if self.nodes[c].lo <= token {
                idx = i;
            }
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(i: usize, s: &str, pos: &str) -> Token {
        Token {
            index: i,
            surface: s.into(),
            stem: s.to_lowercase(),
            pos: pos.into(),
        }
    }

    fn node(
        label: &str,
        lo: usize,
        hi: usize,
        children: Vec<usize>,
        parent: Option<usize>,
    ) -> ConstituentNode {
        ConstituentNode {
            label: label.into(),
            lo,
            hi,
            head: None,
            children,
            parent,
        }
    }

    // (S (NP Rubber buttons) (VP require (NP rubber case)) .)
    fn rubber() -> (ParseTree, Vec<Token>) {
        let tokens = vec![
            tok(0, "Rubber", "NN"),
            tok(1, "buttons", "NNS"),
            tok(2, "require", "VBP"),
            tok(3, "rubber", "NN"),
            tok(4, "case", "NN"),
            tok(5, ".", "."),
        ];
        let nodes = vec![
            node("S", 0, 6, vec![1, 2], None),
            node("NP-SBJ", 0, 2, vec![], Some(0)),
            node("VP", 2, 5, vec![3], Some(0)),
            node("NP", 3, 5, vec![], Some(2)),
        ];
        (ParseTree::from_nodes(nodes), tokens)
    }

    #[test]
    fn head_fallbacks() {
        let (t, toks) = rubber();
        assert_eq!(t.head_token(1, &toks), 1);
        assert_eq!(t.head_token(2, &toks), 2);
        assert_eq!(t.head_token(3, &toks), 4);
        assert_eq!(t.head_token(0, &toks), 2);
    }

    #[test]
    fn lowest_containing_descends() {
        let (t, _) = rubber();
        assert_eq!(t.lowest_containing(0), Some(1));
        assert_eq!(t.lowest_containing(2), Some(2));
        assert_eq!(t.lowest_containing(4), Some(3));
        assert_eq!(t.lowest_containing(5), Some(0));
        assert_eq!(t.lowest_containing(9), None);
    }

    #[test]
    fn base_labels() {
        assert_eq!(base_label("NP-SBJ-1"), "NP");
        assert_eq!(base_label("PP=2"), "PP");
        assert_eq!(base_label("-NONE-"), "-NONE-");
    }

    #[test]
    fn clauses_split_compound_sentence() {
        // (ROOT (S (S a b) (CC and) (S c d)))
        let nodes = vec![
            node("ROOT", 0, 5, vec![1], None),
            node("S", 0, 5, vec![2, 3], Some(0)),
            node("S", 0, 2, vec![], Some(1)),
            node("S", 3, 5, vec![], Some(1)),
        ];
        let t = ParseTree::from_nodes(nodes);
        assert_eq!(t.clause_index(0), 0);
        assert_eq!(t.clause_index(2), 0);
        assert_eq!(t.clause_index(4), 1);
    }
}
