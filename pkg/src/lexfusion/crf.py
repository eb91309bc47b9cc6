"""Mention detection as BIO-with-type sequence labeling.

Emission scores project encoder outputs to per-tag scores; a linear-chain
CRF scores whole tag sequences with a learned transition matrix indexed
as T[current, previous].  Position 1 contributes its emission only; there
are no start/stop transition vectors.
"""

from __future__ import annotations

import numpy as np

from lexfusion.numerics import Tape, Tensor

TAGS = ("O", "B-F", "I-F", "B-S", "I-S")
TAG_IDS = {name: i for i, name in enumerate(TAGS)}
N_TAGS = len(TAGS)


def init_crf_params(d_in: int,
                    rng: np.random.Generator | None = None) -> dict[str, Tensor]:
    rng = rng if rng is not None else np.random.default_rng(0)
    return {
        "crf.w": Tensor(rng.normal(0.0, 1.0 / np.sqrt(d_in), size=(d_in, N_TAGS)),
                        requires_grad=True),
        "crf.b": Tensor(np.zeros(N_TAGS), requires_grad=True),
        "crf.t": Tensor(rng.normal(0.0, 0.1, size=(N_TAGS, N_TAGS)),
                        requires_grad=True),
    }


def emissions(encoder_output: Tensor, params: dict[str, Tensor],
              tape: Tape) -> Tensor:
    """Per-position tag scores o_i = W h_i + b."""
    w = params["crf.w"]
    if encoder_output.shape[1] != w.shape[0]:
        raise ValueError(
            f"encoder output width {encoder_output.shape[1]} does not match "
            f"emission projection input {w.shape[0]}")
    return tape.add(tape.matmul(encoder_output, w), params["crf.b"])


def _as_array(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def _check_tags(tags, n: int) -> list[int]:
    tags = list(tags)
    if len(tags) != n:
        raise ValueError(f"tag sequence length {len(tags)} != {n} positions")
    for t in tags:
        if not 0 <= t < N_TAGS:
            raise ValueError(f"tag id {t} out of range")
    return tags


def _row(scores: Tensor, i: int, tape: Tape) -> Tensor:
    return tape.reshape(tape.narrow(scores, 0, i, 1), (N_TAGS,))


def log_partition(scores: Tensor, transitions: Tensor, tape: Tape) -> Tensor:
    """log Z over all tag sequences, by the forward algorithm in log space."""
    n = scores.shape[0]
    alpha = _row(scores, 0, tape)
    for i in range(1, n):
        # inner[y] = lse over prev of T[y, prev] + alpha[prev]
        inner = tape.log_sum_exp(tape.add(transitions, alpha), axis=1)
        alpha = tape.add(_row(scores, i, tape), inner)
    return tape.log_sum_exp(alpha)


def sequence_score(scores: Tensor, transitions: Tensor, tags,
                   tape: Tape) -> Tensor:
    n = scores.shape[0]
    tags = _check_tags(tags, n)
    total = tape.sum(tape.take(scores, [i * N_TAGS + t for i, t in enumerate(tags)]))
    if n > 1:
        trans = tape.take(transitions,
                          [tags[i] * N_TAGS + tags[i - 1] for i in range(1, n)])
        total = tape.add(total, tape.sum(trans))
    return total


def sequence_log_prob(scores: Tensor, transitions: Tensor, tags,
                      tape: Tape) -> Tensor:
    return tape.sub(sequence_score(scores, transitions, tags, tape),
                    log_partition(scores, transitions, tape))


def mention_loss(scores: Tensor, transitions: Tensor, gold_tags,
                 tape: Tape) -> Tensor:
    """Negative log probability of the gold tagging sequence."""
    return tape.scale(sequence_log_prob(scores, transitions, gold_tags, tape),
                      -1.0)


def viterbi(scores, transitions) -> list[int]:
    """Highest-scoring tag sequence; ties break toward the lowest tag id."""
    o = _as_array(scores)
    t = _as_array(transitions)
    n = o.shape[0]
    delta = o[0].copy()
    backptr = np.zeros((n, N_TAGS), dtype=np.int64)
    for i in range(1, n):
        # cand[cur, prev]; argmax returns the first (lowest) prev on ties
        cand = t + delta
        backptr[i] = cand.argmax(axis=1)
        delta = o[i] + cand.max(axis=1)
    best = int(delta.argmax())
    path = [best]
    for i in range(n - 1, 0, -1):
        best = int(backptr[i][best])
        path.append(best)
    return path[::-1]


def decode_mentions(tags) -> list[tuple[tuple[int, int], str]]:
    """Maximal B-x (I-x)* runs as ((start, end), kind) with inclusive ends.

    An I-x that does not continue a same-type run opens a new mention
    (repair rule for raw model output).
    """
    mentions: list[tuple[tuple[int, int], str]] = []
    start = None
    kind = None

    def close(upto):
        nonlocal start, kind
        if start is not None:
            mentions.append(((start, upto), kind))
        start, kind = None, None

    for i, tag in enumerate(tags):
        name = TAGS[tag]
        if name == "O":
            close(i - 1)
        elif name.startswith("B-") or name[2:] != kind:
            close(i - 1)
            start, kind = i, name[2:]
    close(len(list(tags)) - 1)
    return mentions


def encode_tags(mentions, n: int) -> list[int]:
    """Gold tag ids from ((start, end), kind) mentions; inverse of decode."""
    tags = [TAG_IDS["O"]] * n
    occupied = [False] * n
    for (start, end), kind in mentions:
        if kind not in ("F", "S"):
            raise ValueError(f"unknown mention kind {kind!r}")
        if not (0 <= start <= end < n):
            raise ValueError(f"span ({start}, {end}) outside 0..{n - 1}")
        for i in range(start, end + 1):
            if occupied[i]:
                raise ValueError(f"overlapping mention at position {i}")
            occupied[i] = True
        tags[start] = TAG_IDS[f"B-{kind}"]
        for i in range(start + 1, end + 1):
            tags[i] = TAG_IDS[f"I-{kind}"]
    return tags


def transition_mask(penalty: float = -1e4) -> np.ndarray:
    """Additive penalty on transitions into I-x from outside its own run."""
    mask = np.zeros((N_TAGS, N_TAGS))
    for kind in ("F", "S"):
        cur = TAG_IDS[f"I-{kind}"]
        allowed = {TAG_IDS[f"B-{kind}"], cur}
        for prev in range(N_TAGS):
            if prev not in allowed:
                mask[cur, prev] = penalty
    return mask


def apply_transition_mask(transitions: Tensor, tape: Tape) -> Tensor:
    return tape.add(transitions, Tensor(transition_mask()))
