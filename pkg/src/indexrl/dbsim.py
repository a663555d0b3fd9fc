"""Deterministic stand-in for a DBMS: index set bookkeeping and a B-tree
access-path cost model with prefix intersection.

An index is usable for a query only through a prefix of its keys: every key
of the prefix must carry a predicate, all but the last with equality, and at
most one trailing range key narrows the scan.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .schema import Index, Op, Query, SchemaError, TableSchema

FULL_SCAN = "FULL_SCAN"


@dataclass(frozen=True)
class CostModel:
    c_seq: float = 1.0
    c_probe: float = 50.0
    c_fetch: float = 2.0
    c_op: float = 100.0
    f_range: float = 1.0 / 3.0
    pointer_width: int = 8
    noise_sigma: float = 0.0

    def scan_cost(self, schema: TableSchema) -> float:
        return self.c_seq * schema.row_count


@dataclass(frozen=True)
class IndexSet:
    table: str
    indices: tuple[Index, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        keys = [i.keys for i in self.indices]
        if len(set(keys)) != len(keys):
            raise SchemaError("index set holds duplicate indices")

    def __contains__(self, index: Index) -> bool:
        return any(i.keys == index.keys for i in self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class ExecutionReport:
    latency: float
    chosen_path: str | Index
    usable_prefix_len: int

    @property
    def path_name(self) -> str:
        return FULL_SCAN if self.chosen_path == FULL_SCAN else str(self.chosen_path)


def validate_index(index: Index, schema: TableSchema) -> None:
    if index.table != schema.name:
        raise SchemaError(f"index on {index.table}, schema is {schema.name}")
    for k in index.keys:
        schema.attribute(k)


def usable_prefix(index: Index, query: Query) -> int:
    ops = {p.attribute: p.op for p in query.predicates}
    p = 0
    for key in index.keys:
        op = ops.get(key)
        if op is None:
            break
        p += 1
        if op is not Op.EQ:
            break
    return p


def match_fraction(index: Index, query: Query, schema: TableSchema, prefix: int,
                   model: CostModel) -> float:
    """Estimated fraction of rows an index probe returns.

    Equality on a key with ``d`` distinct values keeps ``1/d`` of the rows
    (uniform data); a trailing range key keeps ``f_range``.
    """
    frac = 1.0
    for key in index.keys[:prefix]:
        if query.op_of(key) is Op.EQ:
            frac /= schema.attribute(key).distinct_count
        else:
            frac *= model.f_range
    return frac


def index_cost(fraction: float, schema: TableSchema, model: CostModel) -> float:
    r = schema.row_count
    return model.c_probe * math.log2(r) + model.c_fetch * fraction * r + model.c_op


def _path_order(cost: float, index: Index | None):
    # FULL_SCAN sorts after any index at equal cost
    if index is None:
        return (cost, math.inf, ())
    return (cost, len(index.keys), index.keys)


def cost(
    query: Query,
    index_set: IndexSet,
    schema: TableSchema,
    model: CostModel = CostModel(),
    rng: np.random.Generator | None = None,
) -> ExecutionReport:
    if query.table != schema.name or index_set.table != schema.name:
        raise SchemaError("query, index set and schema must share a table")
    best_key = _path_order(model.scan_cost(schema), None)
    best = (model.scan_cost(schema), FULL_SCAN, 0)
    for index in index_set:
        p = usable_prefix(index, query)
        if p == 0:
            continue
        c = index_cost(match_fraction(index, query, schema, p, model), schema, model)
        key = _path_order(c, index)
        if key < best_key:
            best_key, best = key, (c, index, p)
    latency = best[0]
    if model.noise_sigma > 0.0:
        if rng is None:
            raise ValueError("latency noise requires an rng")
        latency *= float(np.exp(model.noise_sigma * rng.standard_normal()))
    return ExecutionReport(latency, best[1], best[2])


def index_bytes(index: Index, schema: TableSchema, model: CostModel = CostModel()) -> int:
    width = sum(schema.attribute(k).width_bytes for k in index.keys)
    return schema.row_count * (width + model.pointer_width)


def index_set_bytes(index_set: IndexSet, schema: TableSchema,
                    model: CostModel = CostModel()) -> int:
    return sum(index_bytes(i, schema, model) for i in index_set)


def create_index(
    index_set: IndexSet,
    index: Index | None,
    schema: TableSchema,
    model: CostModel = CostModel(),
) -> tuple[IndexSet, int]:
    """Add ``index`` (``None`` is a no-op); returns the new set and bytes added."""
    if index is None or index in index_set:
        return index_set, 0
    validate_index(index, schema)
    return IndexSet(index_set.table, index_set.indices + (index,)), index_bytes(index, schema, model)


def reset(schema: TableSchema) -> IndexSet:
    return IndexSet(schema.name, (schema.default_index,))


def write_reports_csv(path: str | Path, rows: Iterable[tuple[int, ExecutionReport]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["query_id", "chosen_path", "latency", "usable_prefix_len"])
        for qid, rep in rows:
            w.writerow([qid, rep.path_name, repr(rep.latency), rep.usable_prefix_len])


@dataclass
class CostMatrix:
    """Vectorized per-(query, index) costs for batch evaluation of many index sets.

    ``costs[q, j]`` is the cost of answering query ``q`` through index ``j``
    alone (``inf`` when unusable); the scan cost is kept separately.
    """

    queries: Sequence[Query]
    indices: list[Index]
    costs: np.ndarray
    scan: float
    column: dict[tuple[str, ...], int] = field(default_factory=dict)

    def latencies(self, columns: Sequence[int]) -> np.ndarray:
        if len(columns) == 0:
            return np.full(len(self.queries), self.scan)
        best = self.costs[:, list(columns)].min(axis=1)
        return np.minimum(best, self.scan)


def cost_matrix(
    queries: Sequence[Query],
    indices: Sequence[Index],
    schema: TableSchema,
    model: CostModel = CostModel(),
) -> CostMatrix:
    names = schema.attribute_names
    col = {n: i for i, n in enumerate(names)}
    nq = len(queries)
    # op code per (query, attribute): 0 absent, 1 EQ, 2 range
    code = np.zeros((nq, len(names)), dtype=np.int8)
    for qi, q in enumerate(queries):
        for p in q.predicates:
            code[qi, col[p.attribute]] = 1 if p.op is Op.EQ else 2
    inv_d = np.array([1.0 / schema.attribute(n).distinct_count for n in names])
    r = schema.row_count
    fixed = model.c_probe * math.log2(r) + model.c_op
    out = np.full((nq, len(indices)), np.inf)
    for j, index in enumerate(indices):
        frac = np.ones(nq)
        alive = np.ones(nq, dtype=bool)
        used = np.zeros(nq, dtype=bool)
        for key in index.keys:
            c = code[:, col[key]]
            step = alive & (c > 0)
            frac = np.where(step & (c == 1), frac * inv_d[col[key]], frac)
            frac = np.where(step & (c == 2), frac * model.f_range, frac)
            used |= step
            alive = step & (c == 1)
        out[used, j] = fixed + model.c_fetch * frac[used] * r
    return CostMatrix(queries, list(indices), out, model.scan_cost(schema),
                      {ix.keys: j for j, ix in enumerate(indices)})
