"""Exact-position scoring and error-analysis breakdowns.

Scoring levels: mentions (span + type), fine-grained links (fusion
character position + separation span), and whole triples.  All scores
are micro-averaged.  Breakdowns slice triple F by fusion-word vocabulary
status, borrowed-character pattern, reference order, and the character
distance between the two separation words.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from lexfusion.corpus import CorpusError, Instance, Mention, Triple


@dataclass(frozen=True)
class PRF:
    tp: int
    n_pred: int
    n_gold: int

    @property
    def precision(self) -> float:
        if self.n_pred == 0:
            return 1.0 if self.n_gold == 0 else 0.0
        return self.tp / self.n_pred

    @property
    def recall(self) -> float:
        if self.n_gold == 0:
            return 1.0 if self.n_pred == 0 else 0.0
        return self.tp / self.n_gold

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r > 0.0 else 0.0

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "f1": self.f1, "tp": self.tp, "predicted": self.n_pred,
                "gold": self.n_gold}


def _score(pred_sets, gold_sets) -> PRF:
    tp = sum(len(p & g) for p, g in zip(pred_sets, gold_sets))
    return PRF(tp, sum(len(p) for p in pred_sets),
               sum(len(g) for g in gold_sets))


@dataclass
class Prediction:
    id: str
    mentions: list[Mention] = field(default_factory=list)
    triples: list[Triple] = field(default_factory=list)


@dataclass
class EvalReport:
    mention_fusion: PRF
    mention_separation: PRF
    mention_overall: PRF
    fine_grained: PRF
    triple: PRF

    def to_dict(self) -> dict:
        return {
            "mention": {"fusion": self.mention_fusion.to_dict(),
                        "separation": self.mention_separation.to_dict(),
                        "overall": self.mention_overall.to_dict()},
            "fine_grained": self.fine_grained.to_dict(),
            "triple": self.triple.to_dict(),
        }


def fine_grained_links(triple: Triple) -> list[tuple[int, tuple[int, int]]]:
    """(fusion character position, separation span) pairs of a triple."""
    return [(triple.fusion[0], triple.sep1), (triple.fusion[0] + 1, triple.sep2)]


def _aligned(predicted: list[Prediction], gold: list[Instance]):
    by_id = {p.id: p for p in predicted}
    if len(by_id) != len(predicted):
        raise CorpusError("duplicate prediction ids")
    gold_ids = [g.id for g in gold]
    if sorted(by_id) != sorted(gold_ids) or len(set(gold_ids)) != len(gold_ids):
        raise CorpusError("prediction ids do not match gold ids")
    return [(by_id[g.id], g) for g in gold]


def evaluate(predicted: list[Prediction], gold: list[Instance]) -> EvalReport:
    pairs = _aligned(predicted, gold)

    def mention_sets(kind):
        pred = [{(m.span()) for m in p.mentions if m.type in kind}
                for p, _ in pairs]
        gld = [{(m.span()) for m in g.mentions if m.type in kind}
               for _, g in pairs]
        return pred, gld

    def typed_mention_sets():
        pred = [{(m.span(), m.type) for m in p.mentions} for p, _ in pairs]
        gld = [{(m.span(), m.type) for m in g.mentions} for _, g in pairs]
        return pred, gld

    link_pred = [set(l for t in p.triples for l in fine_grained_links(t))
                 for p, _ in pairs]
    link_gold = [set(l for t in g.triples() for l in fine_grained_links(t))
                 for _, g in pairs]
    triple_pred = [set(p.triples) for p, _ in pairs]
    triple_gold = [set(g.triples()) for _, g in pairs]
    return EvalReport(
        mention_fusion=_score(*mention_sets("F")),
        mention_separation=_score(*mention_sets("S")),
        mention_overall=_score(*typed_mention_sets()),
        fine_grained=_score(link_pred, link_gold),
        triple=_score(triple_pred, triple_gold),
    )


# -- breakdown dimensions ---------------------------------------------------------


def link_type(fusion_char: str, sep_word: str) -> str:
    """A when the fusion character is borrowed verbatim, B otherwise."""
    return "A" if fusion_char in sep_word else "B"


def pair_pattern(triple: Triple, text: str) -> str:
    fusion, sep1, sep2 = triple.words(text)
    kinds = sorted(link_type(fusion[0], sep1) + link_type(fusion[1], sep2))
    return "".join(kinds)


def triple_order(triple: Triple) -> str:
    """forward when the fusion word follows its separation words."""
    if triple.fusion[0] > max(triple.sep1[0], triple.sep2[0]):
        return "forward"
    return "backward"


def separation_distance(triple: Triple) -> int:
    """Characters between the two separation mentions."""
    first, second = sorted([triple.sep1, triple.sep2])
    return max(second[0] - first[1], 1)


DISTANCE_BUCKETS = ((1, 10), (11, 20), (21, 40), (41, None))


def distance_bucket(distance: int) -> str:
    for low, high in DISTANCE_BUCKETS:
        if high is None or distance <= high:
            return f"{low}-{high}" if high is not None else f"{low}+"
    raise AssertionError("unreachable")


def fusion_vocabulary(instances: list[Instance]) -> set[str]:
    """Fusion words seen in a (training) corpus."""
    vocab = set()
    for inst in instances:
        for triple in inst.triples():
            vocab.add(triple.words(inst.text)[0])
    return vocab


def breakdown(predicted: list[Prediction], gold: list[Instance],
              train_vocab: set[str]) -> dict:
    pairs = _aligned(predicted, gold)

    def triple_prf(bucket_fn, value) -> PRF:
        pred = [{t for t in p.triples if bucket_fn(t, g.text) == value}
                for p, g in pairs]
        gld = [{t for t in g.triples() if bucket_fn(t, g.text) == value}
               for _, g in pairs]
        return _score(pred, gld)

    def vocab_of(t, text):
        return "IV" if t.words(text)[0] in train_vocab else "OOV"

    def link_prf(value) -> PRF:
        def links_of(triples, text):
            out = set()
            for t in triples:
                fusion = t.words(text)[0]
                for (pos, span), char, word in zip(
                        fine_grained_links(t), fusion, t.words(text)[1:]):
                    if link_type(char, word) == value:
                        out.add((pos, span))
            return out

        pred = [links_of(p.triples, g.text) for p, g in pairs]
        gld = [links_of(g.triples(), g.text) for _, g in pairs]
        return _score(pred, gld)

    report = {
        "vocab_pair": {
            iv: {pat: triple_prf(
                lambda t, x: (vocab_of(t, x), pair_pattern(t, x)),
                (iv, pat)).to_dict()
                for pat in ("AA", "AB", "BB")}
            for iv in ("IV", "OOV")},
        "link_type": {k: link_prf(k).to_dict() for k in ("A", "B")},
        "order": {k: triple_prf(lambda t, _: triple_order(t), k).to_dict()
                  for k in ("forward", "backward")},
        "distance": {
            distance_bucket(low): triple_prf(
                lambda t, _: distance_bucket(separation_distance(t)),
                distance_bucket(low)).to_dict()
            for low, _ in DISTANCE_BUCKETS},
    }
    return report


# -- prediction files --------------------------------------------------------------


def serialize_predictions(predictions: list[Prediction], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in predictions:
            obj = {
                "id": p.id,
                "mentions": [{"start": m.start, "end": m.end, "type": m.type}
                             for m in p.mentions],
                "triples": [{"fusion": list(t.fusion), "sep1": list(t.sep1),
                             "sep2": list(t.sep2)} for t in p.triples],
            }
            f.write(json.dumps(obj, ensure_ascii=False) + "\n")


def parse_predictions(path) -> list[Prediction]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(Prediction(
                    id=str(obj["id"]),
                    mentions=[Mention(int(m["start"]), int(m["end"]),
                                      str(m["type"]))
                              for m in obj.get("mentions", [])],
                    triples=[Triple(tuple(t["fusion"]), tuple(t["sep1"]),
                                    tuple(t["sep2"]))
                             for t in obj.get("triples", [])]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad prediction line ({exc})")
    return out
