"""Regenerates crates/core/tests/fixtures/figure1.json from bracketed parses."""
import json
import re
import sys

DAS = [
    ("fig1.01", "C", "UI", "sug", ["dec1"],
     "(S (VP (VB Say) (SBAR (S (NP (DT the) (NN standby) (NN button)) (VP (VBZ is) (ADJP (RB quite) (RB kinda) (JJ separate) (PP (IN from) (NP (PDT all) (DT the) (JJ other) (NNS functions)))))))) (. .))",
     [("root", None, 0), ("ccomp", 0, 7), ("nsubj", 7, 3), ("det", 3, 1), ("compound", 3, 2), ("cop", 7, 4),
      ("advmod", 7, 5), ("advmod", 7, 6), ("prep", 7, 8), ("pobj", 8, 12), ("predet", 12, 9), ("det", 12, 10),
      ("amod", 12, 11), ("punct", 0, 13)]),
    ("fig1.02", "C", "UI", "sug", ["dec1"],
     "(S (ADVP (RB Maybe)) (NP (DT that)) (VP (MD could) (VP (VB be) (NP (DT a) (JJ little) (NN apple)))) (. .))",
     [("root", None, 3), ("advmod", 3, 0), ("nsubj", 3, 1), ("aux", 3, 2), ("dobj", 3, 6), ("det", 6, 4),
      ("amod", 6, 5), ("punct", 3, 7)]),
    ("fig1.03", "C", "UI", "inf", ["dec2"],
     "(S (NP (PRP It)) (VP (VBZ seems) (SBAR (IN like) (S (NP (PRP you)) (VP (VBP 're) (VP (VBG gon) (S (VP (TO na) (VP (VB have) (NP (NP (NN rubber) (NNS cases)) (, ,) (CONJP (RB as) (RB well) (IN as)) (NP (NNS buttons))))))))))) (. .))",
     [("root", None, 1), ("nsubj", 1, 0), ("mark", 5, 2), ("advcl", 1, 5), ("nsubj", 5, 3), ("aux", 5, 4),
      ("xcomp", 5, 7), ("aux", 7, 6), ("dobj", 7, 9), ("compound", 9, 8), ("cc", 9, 11), ("conj", 9, 14),
      ("punct", 1, 15)]),
    ("fig1.04", "A", "ID", "inf", ["dec2"],
     "(S (NP (NN Rubber) (NNS buttons)) (VP (VBP require) (NP (NN rubber) (NN case))) (. .))",
     [("root", None, 2), ("nsubj", 2, 1), ("compound", 1, 0), ("dobj", 2, 4), ("compound", 4, 3), ("punct", 2, 5)]),
    ("fig1.05", "A", "ID", "sug", ["dec3"],
     "(S (NP (PRP You)) (VP (MD could) (VP (VB have) (NP (NP (PRP$ your) (NN company) (NN badge)) (CC and) (NP (NN logo))))) (. .))",
     [("root", None, 2), ("nsubj", 2, 0), ("aux", 2, 1), ("dobj", 2, 5), ("poss", 5, 3), ("compound", 5, 4),
      ("cc", 5, 6), ("conj", 5, 7), ("punct", 2, 8)]),
    ("fig1.06", "A", "ID", "inf", ["dec3"],
     "(S (NP (PRP I)) (VP (VBP mean) (SBAR (S (NP (PRP it)) (ADVP (RB actually)) (VP (VBZ has) (NP (NP (DT a) (NN sort)) (PP (IN of) (NP (NN stick-on) (NN badge)))))))) (. .))",
     [("root", None, 1), ("nsubj", 1, 0), ("ccomp", 1, 4), ("nsubj", 4, 2), ("advmod", 4, 3), ("dobj", 4, 6),
      ("det", 6, 5), ("prep", 6, 7), ("pobj", 7, 9), ("compound", 9, 8), ("punct", 1, 10)]),
    ("fig1.07", "C", "UI", "el.ass", ["dec2"],
     "(SQ (MD Shall) (NP (PRP we)) (VP (VB go) (PP (IN for) (NP (JJ single) (NN curve))) (, ,) (ADVP (RB just)) (S (VP (TO to) (VP (VB compromise))))) (. ?))",
     [("root", None, 2), ("aux", 2, 0), ("nsubj", 2, 1), ("prep", 2, 3), ("pobj", 3, 5), ("amod", 5, 4),
      ("advmod", 9, 7), ("aux", 9, 8), ("xcomp", 2, 9), ("punct", 2, 10)]),
    ("fig1.08", "B", "PM", "ass", ["dec2"],
     "(S (NP (PRP We)) (VP (MD 'll) (VP (VB go) (PP (IN for) (NP (JJ single) (NN curve))))) (, ,) (INTJ (UH yeah)) (. .))",
     [("root", None, 2), ("nsubj", 2, 0), ("aux", 2, 1), ("prep", 2, 3), ("pobj", 3, 5), ("amod", 5, 4),
      ("discourse", 2, 7), ("punct", 2, 8)]),
    ("fig1.09", "C", "UI", "inf", ["dec2"],
     "(FRAG (CC And) (NP (NP (DT the) (NN rubber) (NN push) (NNS buttons)) (, ,) (NP (NN rubber) (NN case))) (. .))",
     [("root", None, 4), ("cc", 4, 0), ("det", 4, 1), ("compound", 4, 2), ("compound", 4, 3), ("appos", 4, 7),
      ("compound", 7, 6), ("punct", 4, 8)]),
    ("fig1.10", "D", "ME", "el.inf", ["dec1"],
     "(SQ (CC And) (ADVP (RB then)) (VBP are) (NP (PRP we)) (VP (VBG going) (PP (IN for) (NP (NP (NN sort)) (PP (IN of) (NP (NP (CD one) (NN button)) (VP (VBN shaped) (PP (IN like) (NP (DT a) (NN fruit))))))))) (. .))",
     [("root", None, 4), ("cc", 4, 0), ("advmod", 4, 1), ("aux", 4, 2), ("nsubj", 4, 3), ("prep", 4, 5),
      ("pobj", 5, 6), ("prep", 6, 7), ("pobj", 7, 9), ("nummod", 9, 8), ("acl", 9, 10), ("prep", 10, 11),
      ("pobj", 11, 13), ("det", 13, 12), ("punct", 4, 14)]),
    ("fig1.11", "D", "ME", "ass", ["dec1"],
     "(S (VP (MD Could) (VP (VB be) (NP (DT a) (JJ red) (NN apple)))) (, ,) (INTJ (UH yeah)) (. .))",
     [("root", None, 1), ("aux", 1, 0), ("attr", 1, 4), ("det", 4, 2), ("amod", 4, 3), ("discourse", 1, 6),
      ("punct", 1, 7)]),
]

ADJ = {
    "fig1.07": {"ap_type": "pos", "part": "source", "other_da_id": "fig1.08", "other_is_decision_related": True,
                "target_is_positive_feedback": True},
    "fig1.08": {"ap_type": "pos", "part": "target", "other_da_id": "fig1.07", "other_is_decision_related": True,
                "source_is_question": True},
}

DECISIONS = [
    ("dec1", "The group decided to make the standby button in the shape of an apple."),
    ("dec2", "The remote will also feature a rubber case and rubber buttons, and a single-curved design."),
    ("dec3", "The remote will feature the company logo, possibly in a sticker form."),
]


def parse(s):
    toks = re.findall(r"\(|\)|[^\s()]+", s)
    pos = 0
    tokens = []

    def node():
        nonlocal pos
        assert toks[pos] == "("
        pos += 1
        label = toks[pos]
        pos += 1
        if toks[pos] not in ("(", ")"):
            word = toks[pos]
            pos += 1
            assert toks[pos] == ")"
            pos += 1
            tokens.append({"surface": word, "pos": label})
            return None
        lo = len(tokens)
        children = []
        while toks[pos] == "(":
            c = node()
            if c is not None:
                children.append(c)
        assert toks[pos] == ")"
        pos += 1
        out = {"label": label, "lo": lo, "hi": len(tokens)}
        if children:
            out["children"] = children
        return out

    root = node()
    return tokens, root


def main(out):
    das = []
    for order, (did, spk, role, dtype, decs, tree, deps) in enumerate(DAS, start=1):
        tokens, root = parse(tree)
        da = {
            "id": did, "order": order, "speaker": spk, "speaker_role": role, "da_type": dtype,
            "topic": "look and usability", "tokens": tokens, "constituents": root,
            "dependencies": [{"rel": r, "head": h, "dep": d} for r, h, d in deps],
            "decision_ids": decs,
        }
        if did in ADJ:
            da["adjacency_pair"] = ADJ[did]
        das.append(da)
    corpus = {"meetings": [{"id": "fig1", "dialogue_acts": das,
                            "decisions": [{"id": i, "abstract": a} for i, a in DECISIONS]}]}
    with open(out, "w") as f:
        json.dump(corpus, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
