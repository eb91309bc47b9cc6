"""Sememe lexicon access: word -> senses -> sememe graphs, plus the
covering-word matcher that feeds the sememe-enhanced encoder.

All positions and offsets are in Unicode characters, never bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class LexiconError(ValueError):
    """Malformed lexicon file or dangling reference."""


@dataclass(frozen=True)
class SememeGraph:
    """Undirected sememe graph, normalized: symmetric edges plus self-loops.

    `nodes` are indices into the lexicon's global sememe vocabulary;
    `edges` are local (i, j) node-index pairs.
    """

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def adjacency(self) -> np.ndarray:
        n = len(self.nodes)
        adj = np.zeros((n, n))
        for i, j in self.edges:
            adj[i, j] = 1.0
        return adj

    def fully_connected(self) -> "SememeGraph":
        """The pseudo-graph variant: every sememe pair mutually connected."""
        n = len(self.nodes)
        edges = tuple((i, j) for i in range(n) for j in range(n))
        return SememeGraph(self.nodes, edges)


@dataclass(frozen=True)
class Sense:
    identifier: str
    word: str
    graph: SememeGraph


class SememeLexicon:
    """Immutable after load; safe for concurrent readers."""

    def __init__(self, sememes: list[str], words: dict[str, list[Sense]]):
        self.sememes = list(sememes)
        self.words = words
        self.sememe_index = {name: i for i, name in enumerate(self.sememes)}

    def senses(self, word: str) -> list[Sense]:
        return self.words.get(word, [])

    def sememe_names(self, sense: Sense) -> set[str]:
        return {self.sememes[i] for i in sense.graph.nodes}

    def word_sememes(self, word: str) -> set[str]:
        names: set[str] = set()
        for sense in self.senses(word):
            names |= self.sememe_names(sense)
        return names

    def __len__(self) -> int:
        return len(self.words)

    def to_dict(self) -> dict:
        """JSON object layout accepted by lexicon_from_dict."""
        return {
            "sememes": list(self.sememes),
            "words": {
                word: [{"sememes": list(s.graph.nodes),
                        "edges": [list(e) for e in s.graph.edges]}
                       for s in senses]
                for word, senses in self.words.items()},
        }


def _normalize_edges(node_count: int, raw_edges) -> tuple[tuple[int, int], ...]:
    edges = {(i, i) for i in range(node_count)}
    for i, j in raw_edges:
        edges.add((i, j))
        edges.add((j, i))
    return tuple(sorted(edges))


def lexicon_from_dict(obj: dict) -> SememeLexicon:
    """Build and validate a lexicon from the JSON object layout."""
    if not isinstance(obj, dict) or "sememes" not in obj or "words" not in obj:
        raise LexiconError("lexicon must be an object with 'sememes' and 'words'")
    sememes = obj["sememes"]
    if not isinstance(sememes, list) or not all(isinstance(s, str) for s in sememes):
        raise LexiconError("'sememes' must be a list of strings")
    words: dict[str, list[Sense]] = {}
    for word, raw_senses in obj["words"].items():
        if not word:
            raise LexiconError("empty word in lexicon")
        senses = []
        for raw in raw_senses:
            node_ids = raw.get("sememes", [])
            if not node_ids:
                raise LexiconError(f"word {word!r}: sense {raw.get('sense')!r} has no sememes")
            for idx in node_ids:
                if not isinstance(idx, int) or not (0 <= idx < len(sememes)):
                    raise LexiconError(
                        f"word {word!r}: sense {raw.get('sense')!r} references "
                        f"undefined sememe index {idx}")
            for pair in raw.get("edges", []):
                if len(pair) != 2 or not all(
                        isinstance(k, int) and 0 <= k < len(node_ids) for k in pair):
                    raise LexiconError(
                        f"word {word!r}: sense {raw.get('sense')!r} has edge {pair} "
                        f"outside its {len(node_ids)} nodes")
            graph = SememeGraph(
                nodes=tuple(node_ids),
                edges=_normalize_edges(len(node_ids), raw.get("edges", [])),
            )
            senses.append(Sense(identifier=str(raw.get("sense", word)), word=word, graph=graph))
        words[word] = senses
    return SememeLexicon(sememes, words)


def load_lexicon(path) -> SememeLexicon:
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise LexiconError(f"not valid JSON: {e}") from e
    return lexicon_from_dict(obj)


@dataclass(frozen=True)
class WordMatch:
    """A lexicon word covering the current character.

    `start`/`end` are the relative positions of the word's first and last
    characters to the current one, so start <= 0 <= end always holds.
    """

    word: str
    senses: tuple[Sense, ...]
    start: int
    end: int


def match_words(paragraph: str, lexicon: SememeLexicon,
                max_word_len: int = 4) -> list[list[WordMatch]]:
    """All lexicon words of length <= max_word_len covering each character."""
    if max_word_len < 1:
        raise ValueError(f"max_word_len must be >= 1, got {max_word_len}")
    chars = list(paragraph)
    n = len(chars)
    matches: list[list[WordMatch]] = [[] for _ in range(n)]
    for start in range(n):
        for length in range(1, min(max_word_len, n - start) + 1):
            word = "".join(chars[start:start + length])
            senses = lexicon.words.get(word)
            if not senses:
                continue
            for pos in range(start, start + length):
                matches[pos].append(WordMatch(
                    word=word,
                    senses=tuple(senses),
                    start=start - pos,
                    end=start + length - 1 - pos,
                ))
    return matches
