"""Contextual character representations.

Two interchangeable sources feed the decoders: a small trainable
self-attention encoder over character embeddings, and precomputed
per-paragraph embedding files written by an external exporter.  Both
yield an n x d matrix for a paragraph of n characters.
"""

from __future__ import annotations

import struct

import numpy as np

from lexfusion.numerics import Tape, Tensor

UNK = "<unk>"
EMBEDDING_MAGIC = b"LFEMB1"


class EncoderError(ValueError):
    """Bad paragraph, vocabulary, or embedding file."""


def build_vocab(texts) -> dict[str, int]:
    """Character vocabulary with id 0 reserved for unknown characters."""
    vocab = {UNK: 0}
    for text in texts:
        for ch in text:
            vocab.setdefault(ch, len(vocab))
    return vocab


def char_ids(paragraph: str, vocab: dict[str, int]) -> list[int]:
    unk = vocab[UNK]
    return [vocab.get(ch, unk) for ch in paragraph]


def init_toy_params(vocab_size: int, d_emb: int = 64, d_h: int = 64,
                    max_len: int = 512,
                    rng: np.random.Generator | None = None) -> dict[str, Tensor]:
    rng = rng if rng is not None else np.random.default_rng(0)

    def normal(*shape, scale):
        return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)

    s = 1.0 / np.sqrt(d_emb)
    return {
        "encoder.char_emb": normal(vocab_size, d_emb, scale=0.5),
        "encoder.pos_emb": normal(max_len, d_emb, scale=0.1),
        "encoder.wq": normal(d_emb, d_emb, scale=s),
        "encoder.wk": normal(d_emb, d_emb, scale=s),
        "encoder.wv": normal(d_emb, d_emb, scale=s),
        "encoder.wo": normal(d_emb, d_emb, scale=s),
        "encoder.w_out": normal(d_emb, d_h, scale=s),
        "encoder.b_out": Tensor(np.zeros(d_h), requires_grad=True),
    }


def encode_toy(paragraph: str, vocab: dict[str, int],
               params: dict[str, Tensor], tape: Tape) -> Tensor:
    """n x d_h contextual representations from one attention mixing layer."""
    if not paragraph:
        raise EncoderError("cannot encode an empty paragraph")
    max_len = params["encoder.pos_emb"].shape[0]
    n = len(paragraph)
    if n > max_len:
        raise EncoderError(
            f"paragraph has {n} characters but the encoder supports {max_len}; "
            f"truncate it upstream")
    ids = char_ids(paragraph, vocab)
    x = tape.add(tape.embedding_lookup(params["encoder.char_emb"], ids),
                 tape.embedding_lookup(params["encoder.pos_emb"], list(range(n))))
    q = tape.matmul(x, params["encoder.wq"])
    k = tape.matmul(x, params["encoder.wk"])
    v = tape.matmul(x, params["encoder.wv"])
    d_emb = params["encoder.wq"].shape[0]
    logits = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / np.sqrt(d_emb))
    mixed = tape.matmul(tape.softmax(logits, axis=1), v)
    h = tape.add(x, tape.matmul(mixed, params["encoder.wo"]))
    return tape.tanh(tape.add(tape.matmul(h, params["encoder.w_out"]),
                              params["encoder.b_out"]))


# -- precomputed embedding files ------------------------------------------------


def write_embeddings(path, entries: dict[str, np.ndarray]) -> None:
    """Write id -> (n, d) arrays; values are stored as little-endian f32."""
    dims = {arr.shape[1] for arr in entries.values()}
    if len(dims) > 1:
        raise EncoderError(f"inconsistent embedding dims {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "wb") as f:
        f.write(EMBEDDING_MAGIC)
        f.write(struct.pack("<II", len(entries), dim))
        for pid, arr in entries.items():
            if arr.ndim != 2:
                raise EncoderError(f"embedding for {pid!r} must be 2-d, got {arr.shape}")
            encoded = pid.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.shape[0]))
            f.write(np.asarray(arr, dtype="<f4", order="C").tobytes())


def read_embeddings(path) -> dict[str, np.ndarray]:
    """Load every record; f32 values are upcast exactly to f64."""
    with open(path, "rb") as f:
        magic = f.read(len(EMBEDDING_MAGIC))
        if magic != EMBEDDING_MAGIC:
            raise EncoderError(f"bad embedding file magic {magic!r}")
        count, dim = struct.unpack("<II", f.read(8))
        entries: dict[str, np.ndarray] = {}
        for _ in range(count):
            (id_len,) = struct.unpack("<I", f.read(4))
            pid = f.read(id_len).decode("utf-8")
            (n,) = struct.unpack("<I", f.read(4))
            raw = f.read(4 * n * dim)
            if len(raw) != 4 * n * dim:
                raise EncoderError(f"truncated embedding record for {pid!r}")
            entries[pid] = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(n, dim)
        return entries


def load_external(path, paragraph_id: str, expected_len: int) -> np.ndarray:
    """One paragraph's precomputed embeddings, checked against the corpus."""
    entries = read_embeddings(path)
    if paragraph_id not in entries:
        raise EncoderError(f"embedding file has no record for id {paragraph_id!r}")
    arr = entries[paragraph_id]
    if arr.shape[0] != expected_len:
        raise EncoderError(
            f"embedding length {arr.shape[0]} for id {paragraph_id!r} does not match "
            f"the paragraph's {expected_len} characters (tokenization disagreement?)")
    return arr
