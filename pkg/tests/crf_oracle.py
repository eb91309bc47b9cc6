"""Brute-force linear-chain reference shared by unit and acceptance tests.

Everything here enumerates all K^n tag sequences directly, so it is only
usable for small n but is independent of the forward-algorithm code paths
it checks.
"""

from __future__ import annotations

import itertools

import numpy as np


def all_sequences(n: int, k: int = 5) -> np.ndarray:
    return np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)


def enumerate_scores(emissions, transitions):
    """(sequences, score per sequence) with T indexed [current, previous]."""
    e = np.asarray(emissions, dtype=np.float64)
    t = np.asarray(transitions, dtype=np.float64)
    n = e.shape[0]
    seqs = all_sequences(n, e.shape[1])
    scores = e[np.arange(n), seqs].sum(axis=1)
    if n > 1:
        scores = scores + t[seqs[:, 1:], seqs[:, :-1]].sum(axis=1)
    return seqs, scores


def log_partition_oracle(emissions, transitions) -> float:
    _, scores = enumerate_scores(emissions, transitions)
    m = scores.max()
    return float(m + np.log(np.exp(scores - m).sum()))


def sequence_log_prob_oracle(emissions, transitions, tags) -> float:
    e = np.asarray(emissions, dtype=np.float64)
    t = np.asarray(transitions, dtype=np.float64)
    tags = list(tags)
    score = sum(e[i, y] for i, y in enumerate(tags))
    score += sum(t[tags[i], tags[i - 1]] for i in range(1, len(tags)))
    return float(score - log_partition_oracle(e, t))


def best_sequence_oracle(emissions, transitions):
    """Argmax sequence (first on exact ties) and its raw score."""
    seqs, scores = enumerate_scores(emissions, transitions)
    best = int(scores.argmax())
    return list(seqs[best]), float(scores[best])


def marginals_oracle(emissions, transitions) -> np.ndarray:
    """Per-position tag marginals under the CRF distribution."""
    e = np.asarray(emissions, dtype=np.float64)
    seqs, scores = enumerate_scores(e, transitions)
    p = np.exp(scores - scores.max())
    p /= p.sum()
    marg = np.zeros_like(e)
    for i in range(e.shape[0]):
        np.add.at(marg[i], seqs[:, i], p)
    return marg
