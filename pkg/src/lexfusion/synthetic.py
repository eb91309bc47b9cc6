"""Synthetic corpora with controllable fusion structure.

Two generators: a borrow-style corpus where fusion characters are taken
verbatim from their separation words (easy to overfit), and a
family-style corpus where every link is type B and the only consistent
linking signal is a shared sememe family, with evaluation instances
built from surface forms never seen in training.
"""

from __future__ import annotations

import numpy as np

from lexfusion.corpus import Instance, SeedTriple, build_pseudo_corpus
from lexfusion.sememes import SememeLexicon, lexicon_from_dict

_CJK_BASE = 0x4E00
_FILLER = [chr(0x3041 + i) for i in range(10)]


def _char(index: int) -> str:
    return chr(_CJK_BASE + index)


def _paragraph(words: list[str], rng: np.random.Generator) -> str:
    order = [words[i] for i in rng.permutation(len(words))]
    parts = []
    for word in order:
        parts.append("".join(rng.choice(_FILLER)
                             for _ in range(int(rng.integers(1, 4)))))
        parts.append(word)
    parts.append("".join(rng.choice(_FILLER)
                         for _ in range(int(rng.integers(1, 4)))))
    return "".join(parts)


def make_borrow_seeds(n_seeds: int) -> list[SeedTriple]:
    """Seed i uses its own four characters: fusion ab, separations ax, by."""
    seeds = []
    for i in range(n_seeds):
        a, b, x, y = (_char(4 * i + k) for k in range(4))
        seeds.append(SeedTriple(a + b, a + x, b + y))
    return seeds


def make_borrow_corpus(n_seeds: int, n_paragraphs: int,
                       seed: int = 0) -> tuple[list[Instance], list[SeedTriple]]:
    """Pseudo-labeled corpus where every link is type A."""
    seeds = make_borrow_seeds(n_seeds)
    rng = np.random.default_rng(seed)
    raws = []
    for p in range(n_paragraphs):
        st = seeds[p % n_seeds]
        raws.append((f"syn{p}", _paragraph([st.fusion, st.sep1, st.sep2], rng)))
    instances = build_pseudo_corpus(seeds, raws)
    if len(instances) != n_paragraphs:
        raise AssertionError("synthetic paragraph failed distant supervision")
    return instances, seeds


# -- sememe-family corpus ---------------------------------------------------------


class FamilyInventory:
    """Characters and words grouped into sememe families.

    Family k owns `chars_per_family` single characters and
    `words_per_family` two-character words.  Each character carries the
    family sememe; each word carries the family sememe plus its own
    modifier sememe.  Word surfaces are disjoint from the character
    inventory, so a fusion built from family characters never borrows
    from a separation word: every link is type B.
    """

    def __init__(self, n_families: int = 6, chars_per_family: int = 4,
                 words_per_family: int = 4):
        self.n_families = n_families
        self.chars_per_family = chars_per_family
        self.words_per_family = words_per_family
        base = 0x100  # clear of the borrow generator's range
        self.chars = [[_char(base + k * chars_per_family + i)
                       for i in range(chars_per_family)]
                      for k in range(n_families)]
        wbase = base + n_families * chars_per_family
        self.words = []
        for k in range(n_families):
            row = []
            for j in range(words_per_family):
                offset = wbase + 2 * (k * words_per_family + j)
                row.append(_char(offset) + _char(offset + 1))
            self.words.append(row)

    def lexicon(self) -> SememeLexicon:
        sememes = [f"Family{k}" for k in range(self.n_families)]
        sememes += [f"Mod{k}_{j}" for k in range(self.n_families)
                    for j in range(self.words_per_family)]
        index = {name: i for i, name in enumerate(sememes)}
        words: dict = {}
        for k in range(self.n_families):
            for ch in self.chars[k]:
                words[ch] = [{"sememes": [index[f"Family{k}"]], "edges": []}]
            for j, word in enumerate(self.words[k]):
                words[word] = [{
                    "sememes": [index[f"Family{k}"], index[f"Mod{k}_{j}"]],
                    "edges": [[0, 1]]}]
        return lexicon_from_dict({"sememes": sememes, "words": words})


def make_family_corpus(inventory: FamilyInventory, n_instances: int,
                       char_indices, word_indices, seed: int = 0,
                       id_prefix: str = "fam") -> list[Instance]:
    """Instances whose links are decidable only through sememe families.

    char_indices / word_indices restrict which surface forms appear, so a
    disjoint index split yields evaluation data with unseen fusions and
    unseen separation words drawn from the same families.
    """
    rng = np.random.default_rng(seed)
    seeds = []
    raws = []
    for i in range(n_instances):
        ka, kb = rng.choice(inventory.n_families, size=2, replace=False)
        fusion = (inventory.chars[ka][int(rng.choice(char_indices))]
                  + inventory.chars[kb][int(rng.choice(char_indices))])
        sep1 = inventory.words[ka][int(rng.choice(word_indices))]
        sep2 = inventory.words[kb][int(rng.choice(word_indices))]
        seeds.append(SeedTriple(fusion, sep1, sep2))
        raws.append((f"{id_prefix}{i}", _paragraph([fusion, sep1, sep2], rng)))
    out = []
    # One seed per paragraph: anchor each raw against its own seed only,
    # so repeated words across instances cannot cross-contaminate.
    for st, raw in zip(seeds, raws):
        built = build_pseudo_corpus([st], [raw])
        if len(built) != 1:
            raise AssertionError("family paragraph failed distant supervision")
        out.extend(built)
    return out
