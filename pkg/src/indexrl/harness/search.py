"""Adaptive parameter search over per-query index choices.

Every training query owns an ``m``-vector over ``{0..n_max}`` (the same
encoding as the compact agent action).  A configuration decodes to one index
per query; the union of those indices is scored on a fixed random subsample
of training queries.  Two techniques, uniform random sampling and
single-parameter hill climbing around the incumbent, are picked by a UCB
bandit fed with each technique's recent improvement record.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from ..converter import RewardModel, decode_compact
from ..dbsim import CostModel, cost_matrix, index_bytes
from ..schema import Index, Query, TableSchema, Workload

TECHNIQUES = ("random", "hillclimb")


@dataclass
class SearchProblem:
    queries: list[Query]
    subsample: np.ndarray
    lookup: np.ndarray  # (Q, n_codes) -> column id or -1
    base: np.ndarray  # base-(n_max+1) digit weights for a choice vector
    indices: list[Index]
    sizes: np.ndarray
    default_col: int
    matrix: object
    w_latency: float  # already multiplied by the latency scope factor
    w_size: float
    latency_scale: float
    size_scale: float
    n_max: int
    m: int

    def columns(self, config: np.ndarray) -> np.ndarray:
        codes = config @ self.base
        cols = self.lookup[np.arange(len(self.queries)), codes]
        return np.unique(cols[cols >= 0])

    def score(self, config: np.ndarray) -> float:
        cols = self.columns(config)
        built = cols[cols != self.default_col]
        lat = self.matrix.latencies(np.append(built, self.default_col))
        return float(self.w_latency * lat.sum() / self.latency_scale
                     + self.w_size * self.sizes[built].sum() / self.size_scale)

    def index_set(self, config: np.ndarray) -> list[Index]:
        return [self.indices[c] for c in self.columns(config) if c != self.default_col]


def build_problem(
    train_workloads: Sequence[Workload],
    schema: TableSchema,
    cost_model: CostModel,
    reward: RewardModel,
    rng: np.random.Generator,
    n_max: int = 3,
    m: int = 3,
    subsample: float = 0.5,
    workload_length: int | None = None,
) -> SearchProblem:
    """Precompute decode table and per-(query, index) costs.

    With ``workload_length`` set, summed subsample latency is rescaled to
    ``workload_length`` queries, so index size trades against latency at the
    same rate the agents face within one workload.  Without it the latency
    term is the plain total over the subsample.
    """
    queries = [q for w in train_workloads for q in w]
    nq = len(queries)
    k = max(1, int(round(subsample * nq)))
    sub = np.sort(rng.choice(nq, size=k, replace=False))

    base = (n_max + 1) ** np.arange(m - 1, -1, -1)
    choices = list(product(range(n_max + 1), repeat=m))
    indices: list[Index] = [schema.default_index]
    col = {schema.default_index.keys: 0}
    lookup = np.full((nq, len(choices)), -1, dtype=np.int64)
    for qi, q in enumerate(queries):
        for ci, ch in enumerate(choices):
            ix = decode_compact(ch, q)
            if ix is None:
                continue
            j = col.get(ix.keys)
            if j is None:
                j = col[ix.keys] = len(indices)
                indices.append(ix)
            lookup[qi, ci] = j
    mat = cost_matrix([queries[i] for i in sub], indices, schema, cost_model)
    sizes = np.array([index_bytes(ix, schema, cost_model) for ix in indices], dtype=np.float64)
    w_lat = reward.w_latency
    if workload_length is not None:
        w_lat *= workload_length / len(sub)
    return SearchProblem(queries, sub, lookup, base, indices, sizes, 0, mat,
                         w_lat, reward.w_size, reward.latency_scale,
                         reward.size_scale, n_max, m)


@dataclass
class SearchResult:
    indices: list[Index]
    best_config: np.ndarray
    best_score: float
    default_score: float
    history: list[tuple[str, float]] = field(default_factory=list)


def _ucb_pick(stats: dict[str, deque], uses: dict[str, int], t: int, c: float) -> str:
    for name in TECHNIQUES:
        if uses[name] == 0:
            return name
    best, best_v = TECHNIQUES[0], -math.inf
    for name in TECHNIQUES:
        win = stats[name]
        v = (sum(win) / len(win) if win else 0.0) + c * math.sqrt(2 * math.log(t) / uses[name])
        if v > best_v:
            best, best_v = name, v
    return best


def adaptive_search(problem: SearchProblem, budget: int, rng: np.random.Generator,
                    window: int = 20, explore_c: float = 0.5) -> SearchResult:
    """Run ``budget`` configuration evaluations; the first is the all-zeros default."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    shape = (len(problem.queries), problem.m)
    best = np.zeros(shape, dtype=np.int64)
    best_score = default_score = problem.score(best)
    history = [("default", best_score)]
    stats = {n: deque(maxlen=window) for n in TECHNIQUES}
    uses = {n: 0 for n in TECHNIQUES}
    for t in range(1, budget):
        tech = _ucb_pick(stats, uses, t, explore_c)
        if tech == "random":
            cand = rng.integers(0, problem.n_max + 1, size=shape)
        else:
            cand = best.copy()
            i, j = rng.integers(shape[0]), rng.integers(shape[1])
            cand[i, j] = (cand[i, j] + rng.integers(1, problem.n_max + 1)) % (problem.n_max + 1)
        s = problem.score(cand)
        improved = s < best_score
        if improved:
            best, best_score = cand, s
        stats[tech].append(1.0 if improved else 0.0)
        uses[tech] += 1
        history.append((tech, s))
    return SearchResult(problem.index_set(best), best, best_score, default_score, history)


def search_baseline(
    train_workloads: Sequence[Workload],
    schema: TableSchema,
    budget: int = 500,
    cost_model: CostModel = CostModel(),
    reward: RewardModel | None = None,
    seed: int = 0,
    n_max: int = 3,
    m: int = 3,
    subsample: float = 0.5,
    window: int = 20,
    explore_c: float = 0.5,
    latency_scope: str = "workload",
) -> SearchResult:
    if latency_scope not in ("workload", "total"):
        raise ValueError("latency_scope must be 'workload' or 'total'")
    reward = reward or RewardModel.for_schema(schema, cost_model)
    sub_rng, search_rng = np.random.default_rng(seed).spawn(2)
    length = len(train_workloads[0]) if latency_scope == "workload" else None
    problem = build_problem(train_workloads, schema, cost_model, reward, sub_rng,
                            n_max, m, subsample, length)
    return adaptive_search(problem, budget, search_rng, window, explore_c)
