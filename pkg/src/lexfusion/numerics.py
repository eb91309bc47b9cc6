"""Dense float64 tensors with a reverse-mode autodiff tape.

Every trainable component in this package builds on the primitive set
here: values are numpy arrays in row-major order, a Tape records each
executed op, and backward() replays the record in reverse to accumulate
gradients on the requires_grad leaves.  There is deliberately no
broadcasting beyond bias-vector addition; callers reshape explicitly.
"""

from __future__ import annotations

import struct
from typing import Callable, Sequence

import numpy as np


class NumericsError(ValueError):
    """Shape mismatch or non-finite value produced by a primitive op."""


class Tensor:
    """A dense float64 array plus a gradient slot filled by backward()."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != ():
            raise NumericsError(f"item() needs a scalar, got shape {self.data.shape}")
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def zero_grads(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.grad = None


class Tape:
    """Ordered record of primitive ops for one forward pass.

    Single-threaded: one tape per forward; separate tapes share no state.
    `train` gates dropout, `rng` makes dropout masks reproducible.
    """

    def __init__(self, train: bool = False, rng: np.random.Generator | None = None):
        self.train = train
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self._records: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []
        self._produced: set[int] = set()

    def _emit(self, op: str, value: np.ndarray, inputs: Sequence[Tensor],
              backward: Callable[[np.ndarray], None]) -> Tensor:
        if not np.all(np.isfinite(value)):
            raise NumericsError(f"{op} produced a non-finite value")
        out = Tensor(value, requires_grad=any(t.requires_grad for t in inputs))
        if out.requires_grad:
            self._records.append((out, backward))
            self._produced.add(id(out))
        return out

    # -- arithmetic ----------------------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        """Elementwise a + b; also matrix + trailing-dim bias vector."""
        if a.shape == b.shape:
            def back(g):
                _accumulate(a, g)
                _accumulate(b, g)
        elif a.data.ndim >= 2 and b.data.ndim == 1 and a.shape[-1] == b.shape[0]:
            def back(g):
                _accumulate(a, g)
                _accumulate(b, g.reshape(-1, b.shape[0]).sum(axis=0))
        else:
            raise NumericsError(f"add: incompatible shapes {a.shape} and {b.shape}")
        return self._emit("add", a.data + b.data, (a, b), back)

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise NumericsError(f"sub: incompatible shapes {a.shape} and {b.shape}")

        def back(g):
            _accumulate(a, g)
            _accumulate(b, -g)

        return self._emit("sub", a.data - b.data, (a, b), back)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise NumericsError(f"mul: incompatible shapes {a.shape} and {b.shape}")

        def back(g):
            _accumulate(a, g * b.data)
            _accumulate(b, g * a.data)

        return self._emit("mul", a.data * b.data, (a, b), back)

    def scale(self, a: Tensor, c: float) -> Tensor:
        def back(g):
            _accumulate(a, g * c)

        return self._emit("scale", a.data * c, (a,), back)

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
            raise NumericsError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

        def back(g):
            _accumulate(a, g @ b.data.T)
            _accumulate(b, a.data.T @ g)

        return self._emit("matmul", a.data @ b.data, (a, b), back)

    # -- shape ops -----------------------------------------------------

    def concat(self, parts: Sequence[Tensor], axis: int = 0) -> Tensor:
        if not parts:
            raise NumericsError("concat: empty input list")
        value = np.concatenate([p.data for p in parts], axis=axis)
        sizes = [p.shape[axis] for p in parts]

        def back(g):
            offset = 0
            for p, size in zip(parts, sizes):
                index = [slice(None)] * g.ndim
                index[axis] = slice(offset, offset + size)
                _accumulate(p, g[tuple(index)])
                offset += size

        return self._emit("concat", value, tuple(parts), back)

    def reshape(self, a: Tensor, shape: Sequence[int]) -> Tensor:
        shape = tuple(shape)

        def back(g):
            _accumulate(a, g.reshape(a.shape))

        return self._emit("reshape", a.data.reshape(shape), (a,), back)

    def transpose(self, a: Tensor) -> Tensor:
        if a.data.ndim != 2:
            raise NumericsError(f"transpose: expected a matrix, got shape {a.shape}")

        def back(g):
            _accumulate(a, g.T)

        return self._emit("transpose", a.data.T.copy(), (a,), back)

    def narrow(self, a: Tensor, axis: int, start: int, length: int) -> Tensor:
        index = [slice(None)] * a.data.ndim
        index[axis] = slice(start, start + length)
        index = tuple(index)

        def back(g):
            full = np.zeros_like(a.data)
            full[index] = g
            _accumulate(a, full)

        return self._emit("narrow", a.data[index].copy(), (a,), back)

    # -- elementwise nonlinearities --------------------------------------

    def tanh(self, a: Tensor) -> Tensor:
        value = np.tanh(a.data)

        def back(g):
            _accumulate(a, g * (1.0 - value * value))

        return self._emit("tanh", value, (a,), back)

    def exp(self, a: Tensor) -> Tensor:
        with np.errstate(over="ignore"):
            value = np.exp(a.data)

        def back(g):
            _accumulate(a, g * value)

        return self._emit("exp", value, (a,), back)

    def log(self, a: Tensor) -> Tensor:
        with np.errstate(divide="ignore", invalid="ignore"):
            value = np.log(a.data)

        def back(g):
            _accumulate(a, g / a.data)

        return self._emit("log", value, (a,), back)

    def leaky_relu(self, a: Tensor, slope: float = 0.2) -> Tensor:
        positive = a.data > 0
        value = np.where(positive, a.data, slope * a.data)

        def back(g):
            _accumulate(a, g * np.where(positive, 1.0, slope))

        return self._emit("leaky_relu", value, (a,), back)

    # -- reductions and normalizers --------------------------------------

    def softmax(self, a: Tensor, axis: int = -1) -> Tensor:
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        value = e / e.sum(axis=axis, keepdims=True)

        def back(g):
            inner = (g * value).sum(axis=axis, keepdims=True)
            _accumulate(a, value * (g - inner))

        return self._emit("softmax", value, (a,), back)

    def log_sum_exp(self, a: Tensor, axis: int | None = None) -> Tensor:
        m = a.data.max(axis=axis, keepdims=True)
        e = np.exp(a.data - m)
        s = e.sum(axis=axis, keepdims=True)
        value = np.squeeze(np.log(s) + m, axis=axis) if axis is not None \
            else (np.log(s) + m).reshape(())
        soft = e / s

        def back(g):
            if axis is None:
                _accumulate(a, soft * g)
            else:
                _accumulate(a, soft * np.expand_dims(g, axis))

        return self._emit("log_sum_exp", value, (a,), back)

    def sum(self, a: Tensor, axis: int | None = None) -> Tensor:
        value = a.data.sum(axis=axis)

        def back(g):
            if axis is None:
                _accumulate(a, np.full_like(a.data, g))
            else:
                _accumulate(a, np.broadcast_to(np.expand_dims(g, axis), a.shape).copy())

        return self._emit("sum", value, (a,), back)

    def mean(self, a: Tensor, axis: int | None = None) -> Tensor:
        count = a.data.size if axis is None else a.shape[axis]
        value = a.data.mean(axis=axis)

        def back(g):
            if axis is None:
                _accumulate(a, np.full_like(a.data, g / count))
            else:
                _accumulate(a, np.broadcast_to(np.expand_dims(g, axis), a.shape) / count)

        return self._emit("mean", value, (a,), back)

    # -- lookups ---------------------------------------------------------

    def embedding_lookup(self, table: Tensor, ids: Sequence[int]) -> Tensor:
        ids = np.asarray(ids, dtype=np.intp)
        if table.data.ndim != 2:
            raise NumericsError(f"embedding_lookup: table must be 2-d, got {table.shape}")
        if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
            raise NumericsError(
                f"embedding_lookup: id out of range for table with {table.shape[0]} rows")

        def back(g):
            if not table.requires_grad:
                return
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids, g)

        return self._emit("embedding_lookup", table.data[ids], (table,), back)

    def take(self, a: Tensor, flat_indices: Sequence[int]) -> Tensor:
        """Select elements by row-major flat index, as a 1-d tensor."""
        idx = np.asarray(flat_indices, dtype=np.intp)

        def back(g):
            full = np.zeros(a.data.size)
            np.add.at(full, idx, g)
            _accumulate(a, full.reshape(a.shape))

        return self._emit("take", a.data.reshape(-1)[idx], (a,), back)

    # -- regularization ----------------------------------------------------

    def dropout(self, a: Tensor, rate: float) -> Tensor:
        """Inverted dropout; the exact identity when the tape is not training."""
        if not (0.0 <= rate < 1.0):
            raise NumericsError(f"dropout: rate {rate} outside [0, 1)")
        if not self.train or rate == 0.0:
            return a
        keep = 1.0 - rate
        mask = (self.rng.random(a.shape) < keep) / keep

        def back(g):
            _accumulate(a, g * mask)

        return self._emit("dropout", a.data * mask, (a,), back)

    # -- reverse pass ------------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into .grad for every requires_grad leaf."""
        if loss.data.shape != ():
            raise NumericsError(f"backward: loss must be scalar, got shape {loss.shape}")
        if id(loss) not in self._produced:
            raise NumericsError("backward: loss was not produced on this tape")
        loss.grad = np.ones(())
        for out, back in reversed(self._records):
            if out.grad is None:
                continue
            back(out.grad)


# -- optimizer ---------------------------------------------------------------


class AdamState:
    """Per-parameter first/second moment accumulators plus the step count."""

    def __init__(self):
        self.step = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
              state: AdamState, lr: float = 0.001,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One Adam update with bias correction; mutates params in place.

    Parameters missing from `grads` are left untouched (their moments do
    not decay either, matching sparse-update practice).
    """
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise NumericsError(
                f"adam_step: gradient shape {g.shape} != parameter shape {p.data.shape} for {name!r}")
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


# -- parameter checkpoints ---------------------------------------------------

CHECKPOINT_MAGIC = b"LFCKPT1"


def save_checkpoint(path, params: dict[str, Tensor]) -> None:
    """Write named parameters; round-trips bit-exactly through load_checkpoint."""
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        for name, p in params.items():
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d
            arr = np.asarray(p.data, dtype="<f8", order="C")
            f.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<I", dim))
            f.write(arr.tobytes())


def load_checkpoint(path) -> dict[str, Tensor]:
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise NumericsError(f"bad checkpoint magic {magic!r}")
        params: dict[str, Tensor] = {}
        while True:
            header = f.read(4)
            if not header:
                break
            (name_len,) = struct.unpack("<I", header)
            name = f.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", f.read(4))
            dims = tuple(struct.unpack("<I", f.read(4))[0] for _ in range(rank))
            count = int(np.prod(dims)) if dims else 1
            raw = f.read(8 * count)
            if len(raw) != 8 * count:
                raise NumericsError(f"truncated checkpoint while reading {name!r}")
            data = np.frombuffer(raw, dtype="<f8").reshape(dims).copy()
            params[name] = Tensor(data, requires_grad=True)
        return params
