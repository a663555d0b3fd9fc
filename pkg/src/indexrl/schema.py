"""Simulated table schema, per-attribute statistics and synthetic workloads.

Queries are single-table conjunctive ``SELECT COUNT(*)`` filters.  Predicate
values are integer codes in ``[0, distinct_count)``; the simulator only ever
looks at operators and selectivities, never at the literal values.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class SchemaError(ValueError):
    pass


class Op(str, enum.Enum):
    EQ = "EQ"
    LT = "LT"
    GT = "GT"

    @property
    def symbol(self) -> str:
        return {"EQ": "=", "LT": "<", "GT": ">"}[self.value]

    @property
    def is_range(self) -> bool:
        return self is not Op.EQ


@dataclass(frozen=True)
class AttributeStats:
    name: str
    distinct_count: int
    ordered: bool = True
    width_bytes: int = 4

    def __post_init__(self):
        if self.distinct_count < 1:
            raise SchemaError(f"{self.name}: distinct_count must be >= 1")
        if self.width_bytes < 1:
            raise SchemaError(f"{self.name}: width_bytes must be >= 1")


@dataclass(frozen=True)
class Index:
    """A B-tree index: an ordered key list over one table."""

    table: str
    keys: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(self.keys))
        if not self.keys:
            raise SchemaError("index needs at least one key")
        if len(set(self.keys)) != len(self.keys):
            raise SchemaError(f"duplicate index keys: {self.keys}")

    def __str__(self) -> str:
        return "[" + ", ".join(self.keys) + "]"


@dataclass(frozen=True)
class TableSchema:
    name: str
    row_count: int
    attributes: tuple[AttributeStats, ...]
    default_index: Index

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if self.row_count < 1:
            raise SchemaError("row_count must be positive")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("attribute names must be unique")
        for a in self.attributes:
            if a.distinct_count > self.row_count:
                raise SchemaError(f"{a.name}: distinct_count exceeds row_count")
        if self.default_index.table != self.name:
            raise SchemaError("default index belongs to another table")
        missing = set(self.default_index.keys) - set(names)
        if missing:
            raise SchemaError(f"default index keys not in schema: {sorted(missing)}")
        object.__setattr__(self, "_by_name", {a.name: a for a in self.attributes})

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def attribute(self, name: str) -> AttributeStats:
        try:
            return self._by_name[name]  # type: ignore[attr-defined]
        except KeyError:
            raise SchemaError(f"unknown attribute {name!r} in table {self.name}") from None

    def to_dict(self) -> dict:
        return {
            "table": self.name,
            "row_count": self.row_count,
            "attributes": [
                {
                    "name": a.name,
                    "distinct_count": a.distinct_count,
                    "ordered": a.ordered,
                    "width_bytes": a.width_bytes,
                }
                for a in self.attributes
            ],
            "default_index": list(self.default_index.keys),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TableSchema":
        try:
            attrs = tuple(
                AttributeStats(
                    name=a["name"],
                    distinct_count=int(a["distinct_count"]),
                    ordered=bool(a.get("ordered", True)),
                    width_bytes=int(a.get("width_bytes", 4)),
                )
                for a in doc["attributes"]
            )
            table = doc["table"]
            return cls(
                name=table,
                row_count=int(doc["row_count"]),
                attributes=attrs,
                default_index=Index(table, tuple(doc["default_index"])),
            )
        except KeyError as e:
            raise SchemaError(f"schema document missing field {e}") from None


def load_schema(path: str | Path | None = None) -> TableSchema:
    """Load a schema statistics file; ``None`` loads the bundled LINEITEM."""
    if path is None:
        text = resources.files("indexrl.data").joinpath("lineitem.json").read_text()
    else:
        text = Path(path).read_text()
    return TableSchema.from_dict(json.loads(text))


def selectivity(table: TableSchema, attribute: str) -> float:
    """Distinct values divided by row count (higher means more selective)."""
    a = table.attribute(attribute)
    return a.distinct_count / table.row_count


@dataclass(frozen=True)
class Predicate:
    attribute: str
    op: Op
    value: int


@dataclass(frozen=True)
class Query:
    table: str
    predicates: tuple[Predicate, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicates", tuple(self.predicates))
        if not self.predicates:
            raise SchemaError("query needs at least one predicate")
        attrs = [p.attribute for p in self.predicates]
        if len(set(attrs)) != len(attrs):
            raise SchemaError(f"duplicate predicate attributes: {attrs}")

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(p.attribute for p in self.predicates)

    @property
    def has_range(self) -> bool:
        return any(p.op.is_range for p in self.predicates)

    def op_of(self, attribute: str) -> Op | None:
        for p in self.predicates:
            if p.attribute == attribute:
                return p.op
        return None

    def to_sql(self) -> str:
        where = " AND ".join(
            f"{p.attribute} {p.op.symbol} '{p.value}'" for p in self.predicates
        )
        return f"SELECT COUNT(*) FROM {self.table.lower()} WHERE {where}"

    def to_dict(self) -> dict:
        return {
            "table": self.table,
            "predicates": [[p.attribute, p.op.value, p.value] for p in self.predicates],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Query":
        return cls(
            doc["table"],
            tuple(Predicate(a, Op(o), int(v)) for a, o, v in doc["predicates"]),
        )


@dataclass(frozen=True)
class Workload:
    queries: tuple[Query, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))

    def __len__(self) -> int:
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "queries": [q.to_dict() for q in self.queries]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Workload":
        return cls(tuple(Query.from_dict(q) for q in doc["queries"]), int(doc["seed"]))


def validate_query(query: Query, schema: TableSchema, n_max: int | None = None) -> None:
    if query.table != schema.name:
        raise SchemaError(f"query on {query.table}, schema is {schema.name}")
    if n_max is not None and len(query.predicates) > n_max:
        raise SchemaError(f"query has {len(query.predicates)} predicates > n_max={n_max}")
    for p in query.predicates:
        a = schema.attribute(p.attribute)
        if p.op.is_range and not a.ordered:
            raise SchemaError(f"range operator on unordered attribute {a.name}")


def sample_query(
    schema: TableSchema,
    rng: np.random.Generator,
    n_max: int = 3,
    p_eq: float = 0.7,
) -> Query:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n_attrs = len(schema.attributes)
    k = int(rng.integers(1, min(n_max, n_attrs) + 1))
    picks = rng.choice(n_attrs, size=k, replace=False)
    preds = []
    for i in picks:
        a = schema.attributes[int(i)]
        # unordered domains redraw until EQ, i.e. always EQ
        if not a.ordered or rng.random() < p_eq:
            op = Op.EQ
        else:
            op = Op.LT if rng.random() < 0.5 else Op.GT
        preds.append(Predicate(a.name, op, int(rng.integers(0, a.distinct_count))))
    return Query(schema.name, tuple(preds))


def build_workloads(
    schema: TableSchema,
    count: int,
    length: int = 25,
    seed: int = 0,
    n_max: int = 3,
    p_eq: float = 0.7,
) -> list[Workload]:
    """Sample ``count`` independent workloads of ``length`` queries each."""
    if count < 1 or length < 1:
        raise ValueError("count and length must be >= 1")
    children = np.random.SeedSequence(seed).spawn(count)
    out = []
    for child in children:
        rng = np.random.default_rng(child)
        qs = tuple(sample_query(schema, rng, n_max, p_eq) for _ in range(length))
        out.append(Workload(qs, int(child.generate_state(1)[0])))
    return out


def dump_workloads(workloads: Iterable[Workload], path: str | Path) -> None:
    Path(path).write_text(json.dumps([w.to_dict() for w in workloads], indent=1))


def load_workloads(path: str | Path) -> list[Workload]:
    return [Workload.from_dict(d) for d in json.loads(Path(path).read_text())]


def workload_attributes(workloads: Sequence[Workload]) -> list[str]:
    seen: dict[str, None] = {}
    for w in workloads:
        for q in w:
            for a in q.attributes:
                seen.setdefault(a)
    return list(seen)
