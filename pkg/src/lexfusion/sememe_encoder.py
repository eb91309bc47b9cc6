"""Sememe-enhanced character representations.

Each sense of a matched word carries a small sememe graph.  A one-layer
multi-head graph attention network encodes the graph, the mean node
output concatenated with a position-offset embedding gives the sense
representation, and a global attention over a character's candidate
senses (guided by the base encoder output) yields h_sem for that
character.  h_sem replaces the base output by default; a flag appends
it instead.
"""

from __future__ import annotations

import numpy as np

from lexfusion.numerics import Tape, Tensor
from lexfusion.sememes import Sense, SememeLexicon, match_words

LEAKY_SLOPE = 0.2
OFFSET_MIN_START = -3
OFFSET_MAX_END = 3


def offset_index(start: int, end: int) -> int:
    """Single-unit index for a clamped (start, end) offset pair."""
    s = min(0, max(OFFSET_MIN_START, start))
    e = max(0, min(OFFSET_MAX_END, end))
    return (s - OFFSET_MIN_START) * (OFFSET_MAX_END + 1) + e


N_OFFSET_PAIRS = offset_index(0, OFFSET_MAX_END) + 1


def sense_width(heads: int = 3, head_dim: int = 16, offset_dim: int = 12) -> int:
    return heads * head_dim + offset_dim


def init_sememe_params(n_sememes: int, d_h: int, heads: int = 3,
                       head_dim: int = 16, sememe_dim: int = 200,
                       offset_dim: int = 12,
                       rng: np.random.Generator | None = None) -> dict[str, Tensor]:
    rng = rng if rng is not None else np.random.default_rng(0)

    def normal(*shape, scale):
        return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)

    width = sense_width(heads, head_dim, offset_dim)
    params = {
        "sememe.emb": normal(n_sememes, sememe_dim, scale=0.1),
        "sememe.offset_emb": normal(N_OFFSET_PAIRS, offset_dim, scale=0.1),
        "sememe.v": normal(d_h + width, scale=1.0 / np.sqrt(d_h + width)),
        "sememe.fallback": normal(d_h, width, scale=1.0 / np.sqrt(d_h)),
        "sememe.align": normal(width, d_h, scale=1.0 / np.sqrt(width)),
    }
    for k in range(heads):
        params[f"sememe.gat.w{k}"] = normal(sememe_dim, head_dim,
                                            scale=1.0 / np.sqrt(sememe_dim))
        params[f"sememe.gat.a{k}"] = normal(2 * head_dim, scale=0.5)
    return params


def _head_count(params: dict[str, Tensor]) -> int:
    return sum(1 for name in params if name.startswith("sememe.gat.w"))


def gat_layer(node_embeddings: Tensor, adjacency: np.ndarray,
              params: dict[str, Tensor], tape: Tape,
              return_attention: bool = False):
    """Multi-head graph attention over one sememe graph.

    Attention logits use a leaky ReLU; each node's softmax runs over its
    neighbors only (non-edges are masked out), and head outputs are
    concatenated without a further nonlinearity.
    """
    m = node_embeddings.shape[0]
    if adjacency.shape != (m, m):
        raise ValueError(
            f"adjacency shape {adjacency.shape} does not match {m} nodes")
    # Non-edges get an additive -inf surrogate so their weight underflows
    # to exactly zero; self-loops guarantee each row keeps a real entry.
    neg_mask = Tensor((np.asarray(adjacency, dtype=np.float64) - 1.0) * 1e30)
    ones_row = Tensor(np.ones((1, m)))
    heads = []
    attention = []
    for k in range(_head_count(params)):
        wx = tape.matmul(node_embeddings, params[f"sememe.gat.w{k}"])
        a = params[f"sememe.gat.a{k}"]
        head_dim = wx.shape[1]
        left = tape.matmul(wx, tape.reshape(tape.narrow(a, 0, 0, head_dim),
                                            (head_dim, 1)))
        right = tape.matmul(wx, tape.reshape(tape.narrow(a, 0, head_dim, head_dim),
                                             (head_dim, 1)))
        pair = tape.add(tape.matmul(left, ones_row),
                        tape.reshape(right, (m,)))
        logits = tape.leaky_relu(pair, slope=LEAKY_SLOPE)
        alpha = tape.softmax(tape.add(logits, neg_mask), axis=1)
        heads.append(tape.matmul(alpha, wx))
        attention.append(alpha.data.copy())
    out = heads[0] if len(heads) == 1 else tape.concat(heads, axis=1)
    return (out, attention) if return_attention else out


def sense_repr(sense: Sense, offset: tuple[int, int],
               params: dict[str, Tensor], tape: Tape,
               pseudo_graph: bool = False,
               graph_mean: Tensor | None = None) -> Tensor:
    """Mean GAT node output concatenated with the offset-pair embedding.

    graph_mean, when given, substitutes a precomputed mean so callers can
    reuse one graph encoding across the offsets a word occurs at.
    """
    if graph_mean is None:
        graph_mean = encode_sense_graph(sense, params, tape, pseudo_graph)
    off = tape.embedding_lookup(params["sememe.offset_emb"],
                                [offset_index(*offset)])
    return tape.concat([graph_mean, tape.reshape(off, (off.shape[1],))], axis=0)


def encode_sense_graph(sense: Sense, params: dict[str, Tensor], tape: Tape,
                       pseudo_graph: bool = False) -> Tensor:
    """Offset-independent part of a sense representation."""
    table = params["sememe.emb"]
    if max(sense.graph.nodes) >= table.shape[0]:
        raise ValueError(
            f"sense {sense.identifier!r} references sememe id "
            f"{max(sense.graph.nodes)} outside the embedding table")
    emb = tape.embedding_lookup(table, list(sense.graph.nodes))
    graph = sense.graph.fully_connected() if pseudo_graph else sense.graph
    adj = graph.adjacency()
    return tape.mean(gat_layer(emb, adj, params, tape), axis=0)


def aggregate(h_i: Tensor, sense_reprs: list[Tensor],
              params: dict[str, Tensor], tape: Tape,
              return_attention: bool = False):
    """Convex combination of sense representations, weighted by global
    attention scores tanh(v . [h_i ; h_sn_j])."""
    if not sense_reprs:
        raise ValueError("aggregate needs at least one sense representation")
    d = h_i.shape[0]
    rows = [tape.reshape(tape.concat([h_i, sr], axis=0), (1, d + sr.shape[0]))
            for sr in sense_reprs]
    cat = rows[0] if len(rows) == 1 else tape.concat(rows, axis=0)
    v = params["sememe.v"]
    scores = tape.tanh(tape.matmul(cat, tape.reshape(v, (v.shape[0], 1))))
    weights = tape.softmax(tape.reshape(scores, (len(sense_reprs),)), axis=0)
    stacked = tape.concat([tape.reshape(sr, (1, sr.shape[0]))
                           for sr in sense_reprs], axis=0) \
        if len(sense_reprs) > 1 else tape.reshape(sense_reprs[0],
                                                  (1, sense_reprs[0].shape[0]))
    out = tape.reshape(tape.matmul(tape.reshape(weights, (1, len(sense_reprs))),
                                   stacked), (stacked.shape[1],))
    return (out, weights.data.copy()) if return_attention else out


def enhance(paragraph: str, base_output: Tensor, lexicon: SememeLexicon,
            params: dict[str, Tensor], tape: Tape, mode: str = "word",
            pseudo_graph: bool = False, concat_base: bool = False,
            max_word_len: int = 4) -> Tensor:
    """Per-character sememe-aware representations for a whole paragraph.

    mode "char" restricts word matching to single characters; "word" uses
    every lexicon word up to max_word_len.  Characters without any match
    fall back to a learned projection of the base representation.
    """
    n = len(paragraph)
    if base_output.shape[0] != n:
        raise ValueError(
            f"base output has {base_output.shape[0]} rows for a paragraph "
            f"of {n} characters")
    if mode not in ("char", "word"):
        raise ValueError(f"unknown sememe mode {mode!r}")
    matches = match_words(paragraph, lexicon,
                          max_word_len=1 if mode == "char" else max_word_len)
    d_h = base_output.shape[1]
    graph_cache: dict[str, Tensor] = {}

    def graph_mean(sense: Sense) -> Tensor:
        if sense.identifier not in graph_cache:
            graph_cache[sense.identifier] = encode_sense_graph(
                sense, params, tape, pseudo_graph)
        return graph_cache[sense.identifier]

    rows = []
    for i in range(n):
        h_row = tape.narrow(base_output, 0, i, 1)
        reprs = [sense_repr(sense, (wm.start, wm.end), params, tape,
                            graph_mean=graph_mean(sense))
                 for wm in matches[i] for sense in wm.senses]
        if reprs:
            h_i = tape.reshape(h_row, (d_h,))
            pooled = tape.reshape(aggregate(h_i, reprs, params, tape),
                                  (1, reprs[0].shape[0]))
        else:
            pooled = tape.matmul(h_row, params["sememe.fallback"])
        rows.append(tape.matmul(pooled, params["sememe.align"]))
    h_sem = rows[0] if n == 1 else tape.concat(rows, axis=0)
    return tape.concat([base_output, h_sem], axis=1) if concat_base else h_sem
