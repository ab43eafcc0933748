"""Finite-difference verification of the reverse-mode gradients."""
from __future__ import annotations

import numpy as np

from .autograd import Tensor


def gradient_check(
    loss_fn,
    params: list[Tensor],
    epsilon: float = 1e-5,
    n_samples: int = 120,
    rng: "np.random.Generator | None" = None,
) -> float:
    """Compare analytic gradients against central differences.

    ``loss_fn`` must rebuild the graph and return the scalar loss tensor
    on every call.  Returns the worst relative error over sampled
    coordinates of every parameter.
    """
    if rng is None:
        rng = np.random.default_rng(0)

    loss = loss_fn()
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = [
        np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params
    ]

    coords: list[tuple[int, tuple[int, ...]]] = []
    for pi, p in enumerate(params):
        for flat in range(p.data.size):
            coords.append((pi, np.unravel_index(flat, p.data.shape)))
    if len(coords) > n_samples:
        chosen = rng.permutation(len(coords))[:n_samples]
        coords = [coords[int(i)] for i in chosen]

    worst = 0.0
    for pi, idx in coords:
        p = params[pi]
        orig = p.data[idx]
        p.data[idx] = orig + epsilon
        hi = float(loss_fn().data)
        p.data[idx] = orig - epsilon
        lo = float(loss_fn().data)
        p.data[idx] = orig
        numeric = (hi - lo) / (2.0 * epsilon)
        exact = float(analytic[pi][idx])
        denom = max(1e-8, abs(numeric), abs(exact))
        worst = max(worst, abs(numeric - exact) / denom)
    return worst
