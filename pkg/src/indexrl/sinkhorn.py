"""Sinkhorn relaxation of permutations, Hungarian rounding and row-swap exploration.

Score convention: ``X[i, j]`` is the affinity of input slot ``i`` for output
position ``j``; a hard permutation ``P`` has ``P[i, j] = 1`` when slot ``i``
lands at position ``j``.
"""

from __future__ import annotations

import itertools

import numpy as np

from .numcore import tensor as T
from .numcore.tensor import Tensor


def sinkhorn(X, tau: float = 0.05, n_iters: int = 10):
    """Row-then-column normalization of ``exp(X / tau)``, ``n_iters`` rounds.

    Works in the log domain.  Accepts an ndarray (returns an ndarray) or a
    :class:`Tensor` (returns a differentiable Tensor).  Batched inputs of
    shape (..., N, N) are normalized independently.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    if isinstance(X, Tensor):
        if not np.all(np.isfinite(X.data)):
            raise ValueError("sinkhorn input must be finite")
        la = T.mul(X, 1.0 / tau)
        for _ in range(n_iters):
            la = T.sub(la, T.logsumexp(la, axis=-1))
            la = T.sub(la, T.logsumexp(la, axis=-2))
        return T.exp(la)
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("sinkhorn input must be finite")
    la = X / tau
    for _ in range(n_iters):
        la = la - _lse(la, -1)
        la = la - _lse(la, -2)
    return np.exp(la)


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    m = a.max(axis=axis, keepdims=True)
    return np.log(np.exp(a - m).sum(axis=axis, keepdims=True)) + m


def is_doubly_stochastic(M: np.ndarray, tol: float = 1e-6) -> bool:
    M = np.asarray(M)
    return bool(
        np.all(M >= 0)
        and np.all(np.abs(M.sum(axis=-1) - 1.0) <= tol)
        and np.all(np.abs(M.sum(axis=-2) - 1.0) <= tol)
    )


def hungarian_min(cost: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimum-cost perfect assignment (potentials / shortest augmenting path).

    Returns ``assign`` with ``assign[i]`` the column of row ``i``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)  # p[j]: row matched to column j (1-based)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = inf, 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assign = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        assign[p[j] - 1] = j - 1
    return assign, float(cost[np.arange(n), assign].sum())


def round_hungarian(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Permutation matrix maximizing ``sum(P * M)``.

    Among optimal assignments the lexicographically smallest column vector
    wins (row 0 takes the smallest feasible column, then row 1, ...), so a
    uniform matrix rounds to the identity.
    """
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    cost = -M
    _, best = hungarian_min(cost)
    rows = list(range(n))
    cols = list(range(n))
    assign = np.zeros(n, dtype=np.int64)
    spent = 0.0
    for i in range(n):
        rest_rows = rows[1:]
        for j in cols:
            rest_cols = [c for c in cols if c != j]
            sub = cost[np.ix_(rest_rows, rest_cols)]
            val = spent + cost[i, j] + (hungarian_min(sub)[1] if rest_rows else 0.0)
            if val <= best + tol * max(1.0, abs(best)):
                assign[i] = j
                spent += cost[i, j]
                cols = rest_cols
                break
        else:  # numerical corner: fall back to the unrefined optimum
            return _perm_matrix(hungarian_min(cost)[0])
        rows = rest_rows
    return _perm_matrix(assign)


def _perm_matrix(assign: np.ndarray) -> np.ndarray:
    n = len(assign)
    P = np.zeros((n, n))
    P[np.arange(n), assign] = 1.0
    return P


def brute_force_assignment(M: np.ndarray) -> tuple[np.ndarray, float]:
    """Exhaustive maximum-weight assignment; exponential, for checking only."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    best, arg = -np.inf, None
    rows = np.arange(n)
    for perm in itertools.permutations(range(n)):
        s = M[rows, list(perm)].sum()
        if s > best:
            best, arg = s, perm
    return _perm_matrix(np.array(arg)), float(best)


def explore_swap(P: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    """With probability ``eps`` swap two distinct, uniformly chosen rows."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must be in [0, 1]")
    P = np.array(P, copy=True)
    if P.shape[0] < 2 or rng.random() >= eps:
        return P
    i, j = rng.choice(P.shape[0], size=2, replace=False)
    P[[i, j]] = P[[j, i]]
    return P
