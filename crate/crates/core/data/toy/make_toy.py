"""Regenerate the toy corpus from the inline markup below.

Mentions are written [tokens|T] where T is one of T(ask), M(ethod),
E(valuation metric), D (material), O(ther term), G(eneric); an optional third
field [tokens|T|label] puts mentions with the same label into one explicit
coreference cluster. Relations refer to mentions of the same sentence by
position: (0, "used_for", 1).

    python3 make_toy.py   # writes papers/*.json and manifest.json
"""

import json
import os
import re

TYPES = {
    "T": "task",
    "M": "method",
    "E": "evaluation_metric",
    "D": "material",
    "O": "other_scientific_term",
    "G": "generic",
}

PAPERS = [
    dict(id="P01", year=2012, title="Phrase-based statistical translation revisited", cites=[],
         abstract=[
             ("We apply [phrase-based translation|M] to [machine translation|T] .", [(0, "used_for", 1)]),
             ("[BLEU|E] is used to measure [translation quality|O] .", [(0, "evaluate_for", 1)]),
         ],
         conclusion=[
             ("[Phrase-based translation|M] remains strong for [machine translation|T] .", [(0, "used_for", 1)]),
         ],
         body=[("We train on the [Europarl corpus|D] .", [])]),
    dict(id="P02", year=2013, title="Efficient estimation of word vectors", cites=[],
         abstract=[
             ("We propose [skip-gram|M|sg] for learning [word embeddings|O] .", [(0, "used_for", 1)]),
             ("[The model|G|sg] is evaluated on [word similarity|T] .", [(0, "evaluate_for", 1)]),
         ],
         conclusion=[("[Word embeddings|O] capture [semantic regularities|O] .", [(1, "feature_of", 0)])]),
    dict(id="P03", year=2014, title="Recurrent networks for language modeling", cites=["P02"],
         abstract=[
             ("We use a [recurrent neural network|M] for [language modeling|T] .", [(0, "used_for", 1)]),
             ("[Perplexity|E] is reported for [language modeling|T] .", [(0, "evaluate_for", 1)]),
         ],
         conclusion=[("[Word embeddings|O] improve the [recurrent neural network|M] .", [(0, "used_for", 1)])],
         related=[("[Skip-gram|M] learns [word embeddings|O] .", [(0, "used_for", 1)])]),
    dict(id="P04", year=2014, title="Sequence to sequence learning with neural networks", cites=["P01", "P03"],
         abstract=[
             ("We present [sequence to sequence learning|M|s2s] with an [LSTM|M] encoder .", [(1, "part_of", 0)]),
             ("[Our approach|G|s2s] is applied to [machine translation|T] .", [(0, "used_for", 1)]),
             ("[It|G|s2s] is compared with [phrase-based translation|M] using [BLEU|E] .",
              [(0, "compare", 1), (2, "evaluate_for", 0)]),
         ],
         conclusion=[("[LSTM|M] models are effective for [machine translation|T] .", [(0, "used_for", 1)])],
         related=[("[Phrase-based translation|M] dominated [machine translation|T] .", [(0, "used_for", 1)])]),
    dict(id="P05", year=2015, title="Neural machine translation by jointly learning to align", cites=["P04"],
         abstract=[
             ("We introduce an [attention mechanism|M] for [neural machine translation|T] .", [(0, "used_for", 1)]),
             ("[The attention mechanism|M] learns [soft alignment|O] .", [(0, "used_for", 1)]),
         ],
         conclusion=[
             ("[Attention mechanism|M] improves [BLEU|E] on [machine translation|T] .", [(1, "evaluate_for", 2)]),
         ],
         related=[("[Sequence to sequence learning|M] uses a fixed [vector representation|O] .", [(1, "feature_of", 0)])]),
    dict(id="P06", year=2015, title="Convolutional networks for sentence classification", cites=["P02"],
         abstract=[
             ("We use a [convolutional neural network|M] for [sentence classification|T] .", [(0, "used_for", 1)]),
             ("[Pretrained word embeddings|O] are used for [the network|G] .", []),
         ],
         conclusion=[("[Accuracy|E] on [sentiment analysis|T] improves .", [(0, "evaluate_for", 1)])]),
    dict(id="P07", year=2016, title="Abstractive summarization with attention", cites=["P04"],
         abstract=[
             ("We apply an [attention mechanism|M] to [abstractive summarization|T] .", [(0, "used_for", 1)]),
             ("[ROUGE|E] is used to evaluate [abstractive summarization|T] .", [(0, "evaluate_for", 1)]),
         ],
         conclusion=[("The [attention mechanism|M] helps [summarization|T] .", [(0, "used_for", 1)])],
         related=[("[Sequence to sequence learning|M] was designed for [machine translation|T] .", [(0, "used_for", 1)])]),
    dict(id="P08", year=2016, title="Translation of rare words with subword units", cites=["P05"],
         abstract=[
             ("We use [byte pair encoding|M] to build [subword units|O] .", [(0, "used_for", 1)]),
             ("[Subword units|O] are used for [neural machine translation|T] .", [(0, "used_for", 1)]),
         ],
         conclusion=[("[BLEU|E] improves for [rare words|O] .", [])],
         related=[("[Attention mechanism|M] is used for [neural machine translation|T] .", [(0, "used_for", 1)])]),
    dict(id="P09", year=2016, title="Question answering over a knowledge graph", cites=["P03"],
         abstract=[
             ("We use a [knowledge graph|O|kg] for [question answering|T] .", [(0, "used_for", 1)]),
             ("[The graph|G|kg] is built with [entity linking|M] .", [(1, "used_for", 0)]),
         ],
         conclusion=[("[Knowledge graph|O] [embeddings|M] improve [question answering|T] .",
                      [(1, "used_for", 2), (0, "feature_of", 1)])]),
    dict(id="P10", year=2017, title="Attention is sufficient for translation", cites=["P05", "P08"],
         abstract=[
             ("We propose a [self-attention mechanism|M|sa] for [machine translation|T] .", [(0, "used_for", 1)]),
             ("[The self-attention mechanism|M|sa] is compared with a [recurrent neural network|M] .",
              [(0, "compare", 1)]),
         ],
         conclusion=[("[BLEU|E] is reported on [WMT|D] .", [(0, "evaluate_for", 1)])],
         related=[("[Attention mechanism|M] improved [neural machine translation|T] .", [(0, "used_for", 1)])]),
    dict(id="P11", year=2017, title="Graph convolutional networks for relation extraction", cites=["P06", "P09"],
         abstract=[
             ("We apply a [graph convolutional network|M] to [relation extraction|T] .", [(0, "used_for", 1)]),
             ("[Dependency trees|O] are a [feature|G] of [the network|G] .", []),
         ],
         conclusion=[("[F1|E] on [relation extraction|T] improves .", [(0, "evaluate_for", 1)])],
         related=[("A [knowledge graph|O] supports [question answering|T] .", [(0, "used_for", 1)])]),
    dict(id="P12", year=2018, title="Automatic review generation from knowledge graphs", cites=["P04", "P05"],
         abstract=[
             ("We build a [knowledge graph|O|kg] for [paper review generation|T|task] .", [(0, "used_for", 1)]),
             ("An [attention mechanism|M|att] is used for [review score prediction|T] .", [(0, "used_for", 1)]),
             ("[The knowledge graph|O|kg] and [the attention mechanism|M|att] are compared with [human reviews|D] .",
              [(0, "compare", 2)]),
         ],
         conclusion=[
             ("[Knowledge graph|O|kg] features improve [review score prediction|T] .", [(0, "feature_of", 1)]),
             ("[Accuracy|E] is used to evaluate [review score prediction|T] .", [(0, "evaluate_for", 1)]),
             ("[Our system|G|task] uses the [attention mechanism|M|att] .", []),
         ],
         related=[
             ("[Neural machine translation|T] is studied with [sequence to sequence learning|M] .", [(1, "used_for", 0)]),
         ],
         body=[("We collect [human reviews|D] for training .", [])]),
]

MARK = re.compile(r"\[([^\]|]+)\|([TMEDOG])(?:\|([a-z0-9]+))?\]")


def parse_sentence(text):
    """Tokens plus (start, end, type, label) per mention, in order."""
    tokens, mentions = [], []
    pos = 0
    for m in MARK.finditer(text):
        tokens.extend(text[pos:m.start()].split())
        words = m.group(1).split()
        mentions.append((len(tokens), len(tokens) + len(words), TYPES[m.group(2)], m.group(3)))
        tokens.extend(words)
        pos = m.end()
    tokens.extend(text[pos:].split())
    return tokens, mentions


def build(spec):
    sections, mentions, relations, labels = {}, [], [], {}
    for section in ("abstract", "conclusion", "related", "body"):
        kind = "related_work" if section == "related" else section
        for index, (text, rels) in enumerate(spec.get(section, [])):
            tokens, found = parse_sentence(text)
            sections.setdefault(kind, []).append(tokens)
            base = len(mentions)
            for start, end, etype, label in found:
                mid = len(mentions)
                mentions.append({"id": mid, "section": kind, "sentence": index,
                                 "span": [start, end], "type": etype})
                if label:
                    labels.setdefault(label, []).append(mid)
            for head, rel, tail in rels:
                relations.append({"head_id": base + head, "tail_id": base + tail, "type": rel,
                                  "section": kind, "sentence": index})
    return {
        "paper_id": spec["id"],
        "title": spec["title"],
        "year": spec["year"],
        "venue": "ToyConf",
        "citations": spec["cites"],
        "sections": sections,
        "mentions": mentions,
        "clusters": [labels[k] for k in sorted(labels)],
        "relations": relations,
    }


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    manifest = {}
    for spec in PAPERS:
        doc = build(spec)
        with open(os.path.join(here, "papers", spec["id"] + ".json"), "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
        # counted from the markup, independently of the parser above
        source = " ".join(t for s in ("abstract", "conclusion", "related", "body") for t, _ in spec.get(s, []))
        relations = sum(len(r) for s in ("abstract", "conclusion", "related", "body") for _, r in spec.get(s, []))
        manifest[spec["id"]] = {"year": spec["year"], "mentions": source.count("["), "relations": relations}
    with open(os.path.join(here, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
