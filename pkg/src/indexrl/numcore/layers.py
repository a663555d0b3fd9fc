from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor

ACTIVATIONS = {
    "identity": T.identity,
    "relu": T.relu,
    "tanh": T.tanh,
    "sigmoid": T.sigmoid,
}


def _check_finite(x: Tensor, where: str) -> None:
    if not np.all(np.isfinite(x.data)):
        raise FloatingPointError(f"non-finite values entering {where}")


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def embed(ids: np.ndarray, table: Tensor) -> Tensor:
    """Row lookup; id 0 (PAD) always yields a zero vector and gets no gradient."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"token id out of range for table with {table.shape[0]} rows")
    out = T.take_rows(table, ids)
    mask = (ids != 0)[..., None].astype(np.float64)
    return T.mul(out, mask)


def dense(x: Tensor, W: Tensor, b: Tensor | None = None, activation: str = "identity") -> Tensor:
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"dense: input width {x.shape[-1]} != weight rows {W.shape[0]}")
    if b is not None and b.shape[-1] != W.shape[1]:
        raise ValueError("dense: bias width mismatch")
    _check_finite(x, "dense")
    y = T.matmul(x, W)
    if b is not None:
        y = T.add(y, b)
    return ACTIVATIONS[activation](y)


def init_gru(rng: np.random.Generator, n_in: int, hidden: int, prefix: str) -> dict[str, np.ndarray]:
    """Gate order in the stacked weights: update, reset, candidate."""
    lim = 1.0 / np.sqrt(hidden)
    return {
        f"{prefix}.W": rng.uniform(-lim, lim, size=(n_in, 3 * hidden)),
        f"{prefix}.U": rng.uniform(-lim, lim, size=(hidden, 3 * hidden)),
        f"{prefix}.b": np.zeros(3 * hidden),
    }


def gru(seq: Tensor, W: Tensor, U: Tensor, b: Tensor, reverse: bool = False) -> list[Tensor]:
    """Run a GRU over ``seq`` of shape (B, N, E); returns N hidden states (B, H)."""
    B, N, _ = seq.shape
    H = U.shape[0]
    xproj = T.add(T.matmul(seq, W), b)
    Uzr, Un = U[:, : 2 * H], U[:, 2 * H:]
    h = Tensor(np.zeros((B, H)))
    out: list[Tensor | None] = [None] * N
    steps = range(N - 1, -1, -1) if reverse else range(N)
    for t in steps:
        xt = xproj[:, t, :]
        zr = T.sigmoid(T.add(xt[:, : 2 * H], T.matmul(h, Uzr)))
        z, r = zr[:, :H], zr[:, H:]
        n = T.tanh(T.add(xt[:, 2 * H:], T.matmul(T.mul(r, h), Un)))
        h = T.add(n, T.mul(z, T.sub(h, n)))
        out[t] = h
    return out  # type: ignore[return-value]


def bigru(seq: Tensor, params: dict[str, Tensor], prefix: str) -> Tensor:
    """Bidirectional GRU: (B, N, E) -> (B, N, 2H), forward states first."""
    if seq.shape[1] < 1:
        raise ValueError("bigru needs a non-empty sequence")
    _check_finite(seq, "bigru")
    fw = gru(seq, params[f"{prefix}.fw.W"], params[f"{prefix}.fw.U"], params[f"{prefix}.fw.b"])
    bw = gru(seq, params[f"{prefix}.bw.W"], params[f"{prefix}.bw.U"], params[f"{prefix}.bw.b"],
             reverse=True)
    return T.concat([T.stack(fw, axis=1), T.stack(bw, axis=1)], axis=-1)
