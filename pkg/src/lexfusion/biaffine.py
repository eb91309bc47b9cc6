"""Pairwise character coreference scoring.

Encoder outputs are fused with tag embeddings (z_i = [h_i ; tag_i]),
every ordered pair (i, j) gets a two-class score via a biaffine form
s = z_i' U z_j + W [z_i ; z_j] + b, and training averages the per-pair
cross-entropy over all n(n-1) ordered pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lexfusion.corpus import CorpusError, Instance
from lexfusion.crf import N_TAGS
from lexfusion.numerics import Tape, Tensor

TAG_EMB_DIM = 25


def init_coref_params(d_z: int, tag_dim: int = TAG_EMB_DIM,
                      rng: np.random.Generator | None = None) -> dict[str, Tensor]:
    rng = rng if rng is not None else np.random.default_rng(0)

    def normal(*shape, scale):
        return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)

    return {
        "coref.tag_emb": normal(N_TAGS, tag_dim, scale=0.5),
        "coref.u0": normal(d_z, d_z, scale=1.0 / d_z),
        "coref.u1": normal(d_z, d_z, scale=1.0 / d_z),
        "coref.w": normal(2, 2 * d_z, scale=1.0 / np.sqrt(2 * d_z)),
        "coref.b": Tensor(np.zeros(2), requires_grad=True),
    }


def fuse(encoder_output: Tensor, tags, params: dict[str, Tensor],
         tape: Tape) -> Tensor:
    """z_i = h_i concatenated with the embedding of position i's tag."""
    tags = list(tags)
    if len(tags) != encoder_output.shape[0]:
        raise ValueError(
            f"{len(tags)} tags for {encoder_output.shape[0]} positions")
    emb = tape.embedding_lookup(params["coref.tag_emb"], tags)
    return tape.concat([encoder_output, emb], axis=1)


@dataclass
class PairScores:
    """Class scores for every ordered pair; the diagonal is never read."""

    neg: Tensor
    pos: Tensor

    @property
    def n(self) -> int:
        return self.neg.shape[0]


def biaffine_pair(z_i: Tensor, z_j: Tensor, params: dict[str, Tensor],
                  tape: Tape) -> Tensor:
    """Two-class score vector for one directed pair."""
    d_z = params["coref.u0"].shape[0]
    if z_i.shape != (d_z,) or z_j.shape != (d_z,):
        raise ValueError(
            f"pair widths {z_i.shape}, {z_j.shape} do not match params ({d_z},)")
    zi = tape.reshape(z_i, (1, d_z))
    zj = tape.reshape(z_j, (d_z, 1))
    bil = tape.concat([
        tape.reshape(tape.matmul(zi, tape.matmul(params["coref.u0"], zj)), (1,)),
        tape.reshape(tape.matmul(zi, tape.matmul(params["coref.u1"], zj)), (1,)),
    ], axis=0)
    cat = tape.reshape(tape.concat([z_i, z_j], axis=0), (2 * d_z, 1))
    lin = tape.reshape(tape.matmul(params["coref.w"], cat), (2,))
    return tape.add(tape.add(bil, lin), params["coref.b"])


def pair_scores(z: Tensor, params: dict[str, Tensor], tape: Tape) -> PairScores:
    """All-pairs scores; row i column j holds the score of pair (i, j)."""
    n, d_z = z.shape
    if d_z != params["coref.u0"].shape[0]:
        raise ValueError(
            f"fused width {d_z} does not match params {params['coref.u0'].shape[0]}")
    zt = tape.transpose(z)
    w = params["coref.w"]
    ones_row = Tensor(np.ones((1, n)))
    ones_col = Tensor(np.ones((n, 1)))
    channels = []
    for k, u_name in enumerate(("coref.u0", "coref.u1")):
        bil = tape.matmul(tape.matmul(z, params[u_name]), zt)
        w_i = tape.reshape(tape.narrow(w, 0, k, 1), (2 * d_z,))
        left = tape.matmul(z, tape.reshape(tape.narrow(w_i, 0, 0, d_z), (d_z, 1)))
        right = tape.matmul(z, tape.reshape(tape.narrow(w_i, 0, d_z, d_z),
                                            (d_z, 1)))
        b_k = tape.reshape(tape.narrow(params["coref.b"], 0, k, 1), (1, 1))
        left_b = tape.add(left, tape.matmul(ones_col, b_k))
        channels.append(tape.add(tape.add(bil, tape.matmul(left_b, ones_row)),
                                 tape.reshape(right, (n,))))
    return PairScores(neg=channels[0], pos=channels[1])


def build_pair_labels(instance: Instance) -> np.ndarray:
    """n x n binary gold relations; each fusion character connects to every
    character of its separation word, in both orders."""
    n = len(instance.text)
    labels = np.zeros((n, n), dtype=np.int64)
    for link in instance.links:
        fusion = instance.mentions[link.fusion_mention]
        c = fusion.start + link.char
        if c > fusion.end:
            raise CorpusError(
                f"{instance.id}: character {link.char} outside fusion span "
                f"({fusion.start}, {fusion.end})")
        sep = instance.mentions[link.sep_mention]
        for j in range(sep.start, sep.end + 1):
            labels[c, j] = 1
            labels[j, c] = 1
    return labels


def pair_loss(scores: PairScores, labels: np.ndarray, tape: Tape,
              positive_weight: float = 1.0, literal: bool = False) -> Tensor:
    """Averaged pair-classification loss over ordered pairs i != j.

    Default is cross-entropy, -log p of the gold class; `literal` averages
    the gold-class probability itself instead (a sign-flipped variant kept
    for comparison runs).
    """
    n = scores.n
    if labels.shape != (n, n):
        raise ValueError(f"labels shape {labels.shape} != ({n}, {n})")
    if n < 2:
        return tape.scale(tape.sum(scores.neg), 0.0)
    r = np.asarray(labels, dtype=np.float64)
    flat_neg = tape.reshape(scores.neg, (n * n,))
    flat_pos = tape.reshape(scores.pos, (n * n,))
    both = tape.concat([tape.reshape(scores.neg, (n * n, 1)),
                        tape.reshape(scores.pos, (n * n, 1))], axis=1)
    lse = tape.log_sum_exp(both, axis=1)
    r_flat = r.reshape(-1)
    gold = tape.add(tape.mul(flat_neg, Tensor(1.0 - r_flat)),
                    tape.mul(flat_pos, Tensor(r_flat)))
    log_p = tape.sub(gold, lse)
    mask = (1.0 - np.eye(n)).reshape(-1)
    weights = mask * np.where(r_flat > 0, positive_weight, 1.0)
    weighted = tape.mul(log_p if literal is False else tape.exp(log_p),
                        Tensor(weights))
    total = tape.sum(weighted)
    sign = -1.0 if not literal else 1.0
    return tape.scale(total, sign / (n * (n - 1)))


def pair_probabilities(scores: PairScores) -> np.ndarray:
    """Positive-class probability per ordered pair, computed stably."""
    diff = scores.neg.data - scores.pos.data
    out = np.empty_like(diff)
    big = diff >= 0.0
    out[~big] = 1.0 / (1.0 + np.exp(diff[~big]))
    e = np.exp(-diff[big])
    out[big] = e / (1.0 + e)
    return out
