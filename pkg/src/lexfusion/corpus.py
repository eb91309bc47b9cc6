"""Corpus formats, instance validation, and the distant-supervision builder.

Instances live in JSONL, one object per line, with inclusive character
spans.  Seed triples pair a two-character fusion word with its two
separation words; paragraphs containing all three words of a seed become
pseudo-labeled instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from lexfusion.sememes import SememeLexicon

FUSION = "F"
SEPARATION = "S"


class CorpusError(ValueError):
    """Malformed corpus file or invariant-violating instance."""


@dataclass(frozen=True)
class Mention:
    start: int
    end: int
    type: str

    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Link:
    fusion_mention: int
    char: int
    sep_mention: int


@dataclass(frozen=True)
class Triple:
    """Fusion span with its two separation spans in fusion-character order."""

    fusion: tuple[int, int]
    sep1: tuple[int, int]
    sep2: tuple[int, int]

    def words(self, text: str) -> tuple[str, str, str]:
        return (text[self.fusion[0]:self.fusion[1] + 1],
                text[self.sep1[0]:self.sep1[1] + 1],
                text[self.sep2[0]:self.sep2[1] + 1])


@dataclass
class Instance:
    id: str
    text: str
    mentions: list[Mention] = field(default_factory=list)
    links: list[Link] = field(default_factory=list)

    def triples(self) -> list[Triple]:
        by_fusion: dict[int, dict[int, int]] = {}
        for link in self.links:
            by_fusion.setdefault(link.fusion_mention, {})[link.char] = \
                link.sep_mention
        out = []
        for fm in sorted(by_fusion):
            chars = by_fusion[fm]
            out.append(Triple(self.mentions[fm].span(),
                              self.mentions[chars[0]].span(),
                              self.mentions[chars[1]].span()))
        return out


def validate_instance(inst: Instance) -> None:
    n = len(inst.text)
    occupied = [False] * n
    for m in inst.mentions:
        if m.type not in (FUSION, SEPARATION):
            raise CorpusError(f"{inst.id}: unknown mention type {m.type!r}")
        if not (0 <= m.start <= m.end < n):
            raise CorpusError(
                f"{inst.id}: span ({m.start}, {m.end}) outside text of {n} chars")
        for i in range(m.start, m.end + 1):
            if occupied[i]:
                raise CorpusError(
                    f"{inst.id}: mention ({m.start}, {m.end}) overlaps an "
                    f"earlier mention at position {i}")
            occupied[i] = True
    links_by_fusion: dict[int, list[Link]] = {}
    for link in inst.links:
        if not 0 <= link.fusion_mention < len(inst.mentions):
            raise CorpusError(f"{inst.id}: link fusion index {link.fusion_mention} "
                              f"out of range")
        if not 0 <= link.sep_mention < len(inst.mentions):
            raise CorpusError(f"{inst.id}: link separation index "
                              f"{link.sep_mention} out of range")
        if inst.mentions[link.fusion_mention].type != FUSION:
            raise CorpusError(f"{inst.id}: link source {link.fusion_mention} "
                              f"is not a fusion mention")
        if inst.mentions[link.sep_mention].type != SEPARATION:
            raise CorpusError(f"{inst.id}: link target {link.sep_mention} "
                              f"is not a separation mention")
        if link.char not in (0, 1):
            raise CorpusError(f"{inst.id}: link char index {link.char} not 0 or 1")
        links_by_fusion.setdefault(link.fusion_mention, []).append(link)
    for i, m in enumerate(inst.mentions):
        if m.type != FUSION:
            continue
        if m.length() != 2:
            raise CorpusError(
                f"{inst.id}: fusion mention ({m.start}, {m.end}) has length "
                f"{m.length()}, expected 2")
        chars = sorted(link.char for link in links_by_fusion.get(i, []))
        if chars != [0, 1]:
            raise CorpusError(
                f"{inst.id}: fusion mention {i} needs exactly one link per "
                f"character, got chars {chars}")


def _instance_from_obj(obj: dict, context: str) -> Instance:
    try:
        inst = Instance(
            id=str(obj["id"]),
            text=str(obj["text"]),
            mentions=[Mention(int(m["start"]), int(m["end"]), str(m["type"]))
                      for m in obj.get("mentions", [])],
            links=[Link(int(k["fusion_mention"]), int(k["char"]),
                        int(k["sep_mention"]))
                   for k in obj.get("links", [])],
        )
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"{context}: missing or malformed field ({exc})")
    validate_instance(inst)
    return inst


def parse_corpus(path) -> list[Instance]:
    instances = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: bad JSON ({exc.msg})")
            instances.append(_instance_from_obj(obj, f"{path}:{lineno}"))
    return instances


def instance_to_obj(inst: Instance) -> dict:
    return {
        "id": inst.id,
        "text": inst.text,
        "mentions": [{"start": m.start, "end": m.end, "type": m.type}
                     for m in inst.mentions],
        "links": [{"fusion_mention": k.fusion_mention, "char": k.char,
                   "sep_mention": k.sep_mention} for k in inst.links],
    }


def serialize_corpus(instances, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            f.write(json.dumps(instance_to_obj(inst), ensure_ascii=False) + "\n")


# -- validity of a candidate triple ---------------------------------------------


def _corresponds(char: str, sep_word: str,
                 lexicon: SememeLexicon | None) -> bool:
    """A fusion character associates with its separation word if borrowed
    verbatim or, with a lexicon, if the two share any sememe."""
    if char in sep_word:
        return True
    if lexicon is None:
        return False
    char_sememes = lexicon.word_sememes(char)
    return bool(char_sememes & lexicon.word_sememes(sep_word))


def validate_lexical_fusion(triple: Triple, instance: Instance,
                            lexicon: SememeLexicon | None = None) -> list[str]:
    """Violation descriptions, empty when the triple is a valid fusion.

    Without a lexicon only the structural rules apply; with one, character
    correspondence and separation-word independence are checked too.
    """
    violations = []
    text = instance.text
    fusion_word, sep1_word, sep2_word = triple.words(text)
    if len(fusion_word) != 2:
        violations.append(
            f"fusion-length: {fusion_word!r} has {len(fusion_word)} characters")
    if triple.sep1 == triple.sep2:
        violations.append("one-one: both characters link to the same mention")
    elif sep1_word == sep2_word:
        violations.append(
            f"one-one: separation words both read {sep1_word!r}")
    if len(fusion_word) == 2:
        for idx, (char, sep_word) in enumerate(
                zip(fusion_word, (sep1_word, sep2_word))):
            if lexicon is not None and not _corresponds(char, sep_word, lexicon):
                violations.append(
                    f"correspondence: character {char!r} (index {idx}) has no "
                    f"association with {sep_word!r}")
    if lexicon is not None:
        for joined in (sep1_word + sep2_word, sep2_word + sep1_word):
            if lexicon.senses(joined):
                violations.append(
                    f"independence: {sep1_word!r} and {sep2_word!r} form the "
                    f"single word {joined!r}")
                break
    return violations


# -- distant supervision ----------------------------------------------------------


@dataclass(frozen=True)
class SeedTriple:
    fusion: str
    sep1: str
    sep2: str


def parse_seeds(path) -> list[SeedTriple]:
    seeds = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CorpusError(
                    f"{path}:{lineno}: expected 3 tab-separated words, "
                    f"got {len(parts)}")
            fusion, sep1, sep2 = parts
            if len(fusion) != 2:
                raise CorpusError(
                    f"{path}:{lineno}: fusion word {fusion!r} must have "
                    f"exactly 2 characters")
            seeds.append(SeedTriple(fusion, sep1, sep2))
    return seeds


def parse_raw_paragraphs(path) -> list[tuple[str, str]]:
    paragraphs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            pid, sep, text = line.partition("\t")
            if not sep or not text:
                raise CorpusError(f"{path}:{lineno}: expected 'id\\ttext'")
            paragraphs.append((pid, text))
    return paragraphs


def _first_spans(text: str, seed: SeedTriple):
    spans = []
    for word in (seed.fusion, seed.sep1, seed.sep2):
        pos = text.find(word)
        if pos < 0:
            return None
        spans.append((pos, pos + len(word) - 1))
    return spans


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def build_pseudo_corpus(seeds, raw_paragraphs) -> list[Instance]:
    """Instances for every paragraph containing all three words of a seed.

    Each word anchors at its first occurrence.  Identical (span, type)
    anchors are shared across seeds; any other overlap between anchors
    taints the paragraph and it is dropped entirely.
    """
    usable = [s for s in seeds if len(s.fusion) == 2 and s.sep1 != s.sep2]
    instances = []
    for pid, text in raw_paragraphs:
        anchors: list[tuple[tuple[int, int], str]] = []
        triples: list[list[tuple[int, int]]] = []
        conflict = False
        for seed in usable:
            spans = _first_spans(text, seed)
            if spans is None or spans in triples:
                continue
            fusion_span, s1, s2 = spans
            triples.append(spans)
            for span, kind in ((fusion_span, FUSION), (s1, SEPARATION),
                               (s2, SEPARATION)):
                if (span, kind) in anchors:
                    continue
                if any(_overlaps(span, other) for other, _ in anchors):
                    conflict = True
                anchors.append((span, kind))
        if not triples or conflict:
            continue
        anchors.sort(key=lambda a: a[0])
        index = {anchor: i for i, anchor in enumerate(anchors)}
        mentions = [Mention(span[0], span[1], kind) for span, kind in anchors]
        links = []
        for fusion_span, s1, s2 in triples:
            fm = index[(fusion_span, FUSION)]
            links.append(Link(fm, 0, index[(s1, SEPARATION)]))
            links.append(Link(fm, 1, index[(s2, SEPARATION)]))
        inst = Instance(id=pid, text=text, mentions=mentions, links=links)
        try:
            # Two seeds can demand incompatible links (e.g. one fusion word
            # with two different separation pairs); drop such paragraphs.
            validate_instance(inst)
        except CorpusError:
            continue
        instances.append(inst)
    return instances


def split_corpus(instances, ratios=(0.8, 0.2), seed: int = 0):
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"split ratios {ratios} do not sum to 1")
    order = np.random.default_rng(seed).permutation(len(instances))
    n_train = int(round(ratios[0] * len(instances)))
    train = [instances[i] for i in order[:n_train]]
    dev = [instances[i] for i in order[n_train:]]
    return train, dev
