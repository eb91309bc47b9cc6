"""Frozen contextual character embeddings for a recognition corpus.

Reads the corpus JSONL format (only ``id`` and ``text`` are used), runs
a pretrained encoder in eval mode, pools subword vectors down to one
vector per Unicode character, and writes an LFEMB1 file that the
recognition pipeline accepts in place of its built-in encoder.

The two packages share nothing but the file formats: corpus JSONL in,
LFEMB1 out.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass

import numpy as np

EMBEDDING_MAGIC = b"LFEMB1"


class ExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExportManifest:
    corpus: str
    model: str
    out: str
    max_len: int = 512
    device: str = "cpu"


def read_corpus_texts(path) -> list[tuple[str, str]]:
    """(id, text) per corpus line; labels on the line are ignored."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append((str(obj["id"]), str(obj["text"])))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ExportError(f"{path}:{lineno}: bad corpus line ({exc})")
    return out


def write_embeddings(path, entries: list[tuple[str, np.ndarray]]) -> None:
    """LFEMB1 writer: header magic, u32 count, u32 dim; then per record
    u32 id byte length, the id, u32 row count, and f32 LE rows."""
    dim = 0
    for _, arr in entries:
        if dim == 0:
            dim = arr.shape[1]
        elif arr.shape[1] != dim:
            raise ExportError(
                f"inconsistent embedding widths: {arr.shape[1]} vs {dim}")
    with open(path, "wb") as f:
        f.write(EMBEDDING_MAGIC)
        f.write(struct.pack("<II", len(entries), dim))
        for pid, arr in entries:
            raw = pid.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", arr.shape[0]))
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def char_pool(hidden: np.ndarray, offsets, n_chars: int) -> np.ndarray:
    """Average the subword vectors covering each character position.

    Special tokens carry empty offsets and contribute nothing; characters
    no piece covers (e.g. whitespace the tokenizer drops) stay zero.
    """
    out = np.zeros((n_chars, hidden.shape[1]), dtype=np.float32)
    counts = np.zeros(n_chars, dtype=np.int64)
    for row, (start, end) in zip(hidden, offsets):
        for c in range(start, min(end, n_chars)):
            out[c] += row
            counts[c] += 1
    covered = counts > 0
    out[covered] /= counts[covered, None]
    return out


def export(manifest: ExportManifest) -> tuple[int, list[tuple[str, str]]]:
    """Write manifest.out; returns (records written, skipped (id, reason)).

    Instances whose token count exceeds manifest.max_len are skipped with
    a warning and listed in the sidecar log ``<out>.skipped``.
    """
    import torch
    from transformers import AutoModel, AutoTokenizer

    if manifest.max_len < 1:
        raise ExportError(f"max_len must be positive, got {manifest.max_len}")
    tokenizer = AutoTokenizer.from_pretrained(manifest.model)
    if not tokenizer.is_fast:
        raise ExportError(
            "character alignment needs a fast tokenizer with offset support")
    model = AutoModel.from_pretrained(manifest.model)
    model = model.to(manifest.device).eval()
    capacity = getattr(model.config, "max_position_embeddings", None)
    if capacity is not None and manifest.max_len > capacity:
        raise ExportError(
            f"max_len {manifest.max_len} exceeds the encoder's positional "
            f"capacity {capacity}")

    entries: list[tuple[str, np.ndarray]] = []
    skipped: list[tuple[str, str]] = []
    with torch.no_grad():
        for pid, text in read_corpus_texts(manifest.corpus):
            enc = tokenizer(text, return_offsets_mapping=True,
                            return_tensors="pt")
            n_pieces = enc["input_ids"].shape[1]
            if n_pieces > manifest.max_len:
                reason = (f"{n_pieces} pieces exceed max length "
                          f"{manifest.max_len}")
                warnings.warn(f"skipping {pid!r}: {reason}")
                skipped.append((pid, reason))
                continue
            offsets = enc.pop("offset_mapping")[0].tolist()
            hidden = model(**enc.to(manifest.device)).last_hidden_state
            pooled = char_pool(hidden[0].cpu().numpy(), offsets, len(text))
            entries.append((pid, pooled))
    write_embeddings(manifest.out, entries)
    if skipped:
        with open(f"{manifest.out}.skipped", "w", encoding="utf-8") as f:
            for pid, reason in skipped:
                f.write(f"{pid}\t{reason}\n")
    return len(entries), skipped
