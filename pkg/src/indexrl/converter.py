"""Translation between the simulated system and the agents.

States are token-id encodings of (query, context); agent outputs are decoded
into an :class:`~indexrl.schema.Index` or ``None`` (no-op); system feedback is
folded into a scalar reward.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from math import comb, factorial
from typing import Sequence

import numpy as np

from .dbsim import CostModel, IndexSet
from .schema import Index, Op, Query, TableSchema

log = logging.getLogger(__name__)
_warned: set[str] = set()


def _overflow(kind: str, n: int, limit: int) -> None:
    # first overflow of each kind is a warning, later ones only debug noise
    level = logging.DEBUG if kind in _warned else logging.WARNING
    _warned.add(kind)
    log.log(level, "%s overflow (%d > %d tokens); context truncated", kind, n, limit)

PAD, IDX, NOOP = "PAD", "IDX", "NOOP"


class Vocabulary:
    """Dense token ids; ``PAD`` is always 0."""

    def __init__(self, tokens: Sequence[str]):
        if not tokens or tokens[0] != PAD:
            raise ValueError("PAD must be the first token")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens")
        self.tokens = list(tokens)
        self.token_to_id = {t: i for i, t in enumerate(self.tokens)}

    @classmethod
    def from_schema(cls, schema: TableSchema) -> "Vocabulary":
        toks = [PAD, IDX, NOOP] + [op.symbol for op in Op]
        for a in schema.attribute_names:
            toks += [a, a + "_idx"]
        return cls(toks)

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, token: str) -> int:
        return self.token_to_id[token]

    def ids(self, tokens: Sequence[str]) -> list[int]:
        return [self.token_to_id[t] for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.tokens[int(i)] for i in ids]

    def to_json(self) -> str:
        return json.dumps(self.token_to_id, indent=1)


@dataclass(frozen=True)
class FlatState:
    token_ids: np.ndarray
    truncated: bool = False


@dataclass(frozen=True)
class MatrixState:
    rows: np.ndarray
    n_predicates: int
    truncated: bool = False


def _index_tokens(index: Index) -> list[str]:
    return [IDX] + [k + "_idx" for k in index.keys]


def _query_tokens(query: Query) -> list[str]:
    toks = []
    for p in query.predicates:
        toks += [p.attribute, p.op.symbol]
    return toks


def to_flat_state(query: Query, context: IndexSet, vocab: Vocabulary, length: int = 32) -> FlatState:
    toks = _query_tokens(query)
    attrs = set(query.attributes)
    for index in context:
        if attrs.intersection(index.keys):
            toks += _index_tokens(index)
    truncated = len(toks) > length
    if truncated:
        _overflow("flat state", len(toks), length)
        toks = toks[:length]
    ids = np.zeros(length, dtype=np.int64)
    ids[: len(toks)] = vocab.ids(toks)
    return FlatState(ids, truncated)


def to_matrix_state(
    query: Query,
    context: IndexSet,
    vocab: Vocabulary,
    n_max: int = 3,
    row_tokens: int = 8,
) -> MatrixState:
    """N x K token matrix, N = n_max + 1; the last row is the no-op slot."""
    n = len(query.predicates)
    if n > n_max:
        raise ValueError(f"query has {n} predicates > n_max={n_max}")
    rows = np.zeros((n_max + 1, row_tokens), dtype=np.int64)
    truncated = False
    for i, p in enumerate(query.predicates):
        toks = [p.attribute, p.op.symbol]
        for index in context:
            if p.attribute in index.keys:
                toks += _index_tokens(index)
        if len(toks) > row_tokens:
            _overflow("matrix state row", len(toks), row_tokens)
            toks = toks[:row_tokens]
            truncated = True
        rows[i, : len(toks)] = vocab.ids(toks)
    rows[n_max, 0] = vocab[NOOP]
    return MatrixState(rows, n, truncated)


def decode_compact(choices: Sequence[int], query: Query) -> Index | None:
    keys: list[str] = []
    preds = query.predicates
    for c in choices:
        c = int(c)
        if 1 <= c <= len(preds):
            a = preds[c - 1].attribute
            if a not in keys:
                keys.append(a)
    return Index(query.table, tuple(keys)) if keys else None


def permutation_order(hard: np.ndarray) -> np.ndarray:
    """Slot placed at each output position: ``order[j] = i`` iff ``hard[i, j] == 1``."""
    hard = np.asarray(hard)
    n = hard.shape[0]
    if hard.shape != (n, n) or not (
        np.all(hard.sum(axis=0) == 1) and np.all(hard.sum(axis=1) == 1)
        and np.all((hard == 0) | (hard == 1))
    ):
        raise ValueError("not a permutation matrix")
    return np.argmax(hard, axis=0)


def decode_permutation(hard: np.ndarray, query: Query) -> Index | None:
    """Read permuted slots left to right up to the first pad or no-op slot.

    Slots ``0..n-1`` hold the query's attributes; every other slot (padding
    and the trailing no-op slot) ends the index.
    """
    order = permutation_order(hard)
    n = len(query.predicates)
    keys = []
    for slot in order:
        if slot >= n:
            break
        keys.append(query.predicates[slot].attribute)
    return Index(query.table, tuple(keys)) if keys else None


class Scheme(enum.Enum):
    COMBINATORIAL = "combinatorial"
    COMPACT = "compact"


def action_space_size(n: int, scheme: Scheme = Scheme.COMBINATORIAL, m: int = 3) -> int:
    if n < 0:
        raise ValueError("n must be >= 0")
    if scheme is Scheme.COMBINATORIAL:
        return sum(comb(n, k) * factorial(k) for k in range(n + 1))
    return (n + 1) ** m


@dataclass(frozen=True)
class RewardModel:
    w_size: float = 0.5
    w_latency: float = 0.5
    size_scale: float = 1.0
    latency_scale: float = 1.0

    @classmethod
    def for_schema(cls, schema: TableSchema, cost_model: CostModel = CostModel(),
                   w_size: float = 0.5, w_latency: float = 0.5) -> "RewardModel":
        # a 3-key index over average-width attributes; a full scan
        mean_w = np.mean([a.width_bytes for a in schema.attributes])
        size_scale = schema.row_count * (3 * mean_w + cost_model.pointer_width)
        return cls(w_size, w_latency, float(size_scale), cost_model.scan_cost(schema))

    def __call__(self, delta_size: float, latency: float) -> float:
        return to_reward(delta_size, latency, self)


def to_reward(delta_size: float, latency: float, model: RewardModel) -> float:
    if delta_size < 0 or latency < 0:
        raise ValueError("delta_size and latency must be nonnegative")
    return -(model.w_size * delta_size / model.size_scale) - (
        model.w_latency * latency / model.latency_scale
    )
