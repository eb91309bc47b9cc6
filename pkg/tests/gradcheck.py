"""Central finite-difference gradient oracle shared across test modules."""

from __future__ import annotations

import numpy as np

from lexfusion.numerics import Tensor


def numeric_grads(f, leaves: list[Tensor], step: float = 1e-5) -> list[np.ndarray]:
    """Gradient of the scalar f() w.r.t. each leaf, by central differences.

    f must recompute the forward pass from the leaves' current .data on
    every call; leaf values are perturbed in place and restored.
    """
    grads = []
    for leaf in leaves:
        flat = leaf.data.reshape(-1)
        g = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = f()
            flat[i] = orig - step
            down = f()
            flat[i] = orig
            g[i] = (up - down) / (2.0 * step)
        grads.append(g.reshape(leaf.data.shape))
    return grads


def assert_grads_match(f, leaves: list[Tensor], rtol: float = 1e-4,
                       step: float = 1e-5) -> None:
    """Check tape gradients in leaf.grad against the finite-difference oracle.

    Relative error uses max(1, |analytic|, |numeric|) in the denominator,
    so near-zero gradients are compared absolutely.
    """
    numeric = numeric_grads(f, leaves, step=step)
    for leaf, num in zip(leaves, numeric):
        assert leaf.grad is not None, "leaf did not receive a gradient"
        denom = np.maximum(1.0, np.maximum(np.abs(leaf.grad), np.abs(num)))
        err = np.abs(leaf.grad - num) / denom
        assert err.max() < rtol, f"gradient mismatch: max rel err {err.max():.3e}"
