from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .tensor import Tensor


@dataclass
class ParamStore:
    """Named trainable tensors plus Adam moment estimates."""

    params: dict[str, Tensor] = field(default_factory=dict)
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.params[name] = t
        self.m[name] = np.zeros_like(t.data)
        self.v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def items(self):
        return self.params.items()

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(np.sum(p.grad ** 2) for p in self.params.values()
                                 if p.grad is not None)))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        if set(state) != set(self.params):
            raise KeyError("parameter names do not match")
        for k, arr in state.items():
            if arr.shape != self.params[k].shape:
                raise ValueError(f"{k}: shape {arr.shape} != {self.params[k].shape}")
            self.params[k].data = np.array(arr, dtype=np.float64, copy=True)

    def copy_from(self, other: "ParamStore") -> None:
        self.load_state_dict(other.state_dict())

    def num_params(self) -> int:
        return sum(p.data.size for p in self.params.values())


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    clip_norm: float | None = None,
) -> None:
    missing = [k for k, p in store.items() if p.grad is None]
    if missing:
        raise ValueError(f"adam_step: no gradient for {missing}")
    scale = 1.0
    if clip_norm is not None:
        norm = store.grad_norm()
        if norm > clip_norm:
            scale = clip_norm / norm
    store.step += 1
    bc1 = 1.0 - beta1 ** store.step
    bc2 = 1.0 - beta2 ** store.step
    for k, p in store.items():
        g = p.grad if scale == 1.0 else p.grad * scale
        m = store.m[k]
        v = store.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        denom = np.sqrt(v)
        denom *= 1.0 / np.sqrt(bc2)
        denom += eps
        step = m / denom
        step *= lr / bc1
        p.data -= step
    store.zero_grad()


def save_params(path: str | Path, **stores: ParamStore) -> None:
    """Write stores to one ``.npz``; keys are ``<store>/<param>``."""
    flat = {f"{s}/{k}": arr for s, st in stores.items() for k, arr in st.state_dict().items()}
    buf = io.BytesIO()
    np.savez(buf, **flat)
    Path(path).write_bytes(buf.getvalue())


def load_params(path: str | Path) -> dict[str, dict[str, np.ndarray]]:
    out: dict[str, dict[str, np.ndarray]] = {}
    with np.load(path) as z:
        for key in z.files:
            s, k = key.split("/", 1)
            out.setdefault(s, {})[k] = z[key]
    return out
