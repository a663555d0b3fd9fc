from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst: str
    checked: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    tol: float = 1e-4,
    floor: float = 1e-6,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
    analytic: dict[int, np.ndarray] | None = None,
) -> GradCheckReport:
    """Compare backprop gradients of the scalar ``f()`` with central differences.

    ``analytic`` (keyed by position in ``params``) overrides the backprop
    gradient, which is how a corrupted gradient is fed in as a negative
    control.  ``max_coords`` samples that many coordinates per parameter.
    """
    for p in params:
        p.grad = None
    out = f()
    out.backward()
    grads = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    if analytic:
        for i, g in analytic.items():
            grads[i] = g
    rng = rng or np.random.default_rng(0)
    worst, where, count = 0.0, "", 0
    for pi, p in enumerate(params):
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        for c in coords:
            old = flat[c]
            flat[c] = old + h
            fp = f().item()
            flat[c] = old - h
            fm = f().item()
            flat[c] = old
            num = (fp - fm) / (2.0 * h)
            ana = grads[pi].reshape(-1)[c]
            rel = abs(ana - num) / max(abs(ana), abs(num), floor)
            count += 1
            if rel > worst:
                worst, where = rel, f"{p.name or pi}[{c}]"
    for p in params:
        p.grad = None
    return GradCheckReport(worst, where, count, tol)
