"""Task-specific statistics: selectivity ratios, intersection behaviour,
per-run summaries and per-episode learning curves."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from ..dbsim import ExecutionReport, IndexSet
from ..schema import Index, Query, TableSchema, selectivity


@dataclass
class StepRecord:
    episode: int
    step: int
    query_id: int
    action: str
    reward: float
    latency: float
    delta_size: int
    chosen_path: str
    intersection_opportunity: bool
    intersection_taken: bool
    selectivity_ratio: float | None

    def __post_init__(self):
        if self.intersection_taken and not self.intersection_opportunity:
            raise ValueError("intersection taken without an opportunity")

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[str]:
        out = []
        for k, v in asdict(self).items():
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "StepRecord":
        ratio = row["selectivity_ratio"]
        return cls(
            episode=int(row["episode"]),
            step=int(row["step"]),
            query_id=int(row["query_id"]),
            action=row["action"],
            reward=float(row["reward"]),
            latency=float(row["latency"]),
            delta_size=int(row["delta_size"]),
            chosen_path=row["chosen_path"],
            intersection_opportunity=row["intersection_opportunity"] == "1",
            intersection_taken=row["intersection_taken"] == "1",
            selectivity_ratio=float(ratio) if ratio else None,
        )

    @property
    def is_noop(self) -> bool:
        return self.action == "NOOP"


def action_label(indices: Sequence[Index]) -> str:
    if not indices:
        return "NOOP"
    return ";".join("|".join(i.keys) for i in indices)


def selectivity_ratio(index: Index, query: Query, schema: TableSchema) -> float:
    """Mean selectivity of the index keys over mean selectivity of the query attributes."""
    if not index.keys:
        raise ValueError("empty index")
    ik = np.mean([selectivity(schema, k) for k in index.keys])
    qa = np.mean([selectivity(schema, a) for a in query.attributes])
    return float(ik / qa)


def intersection_candidates(query: Query, index_set: IndexSet) -> list[Index]:
    """Indices whose key prefix equals a prefix of some permutation of the query's attributes.

    A non-empty common prefix exists exactly when the index's first key is a
    query attribute.
    """
    attrs = set(query.attributes)
    return [i for i in index_set if i.keys[0] in attrs]


def intersection_stats(query: Query, built: Sequence[Index], index_set_before: IndexSet,
                       report: ExecutionReport) -> tuple[bool, bool]:
    cands = intersection_candidates(query, index_set_before)
    opportunity = bool(cands)
    taken = opportunity and not built and any(report.chosen_path == c for c in cands)
    return opportunity, taken


def nearest_rank(values: Sequence[float], pct: float) -> float:
    xs = sorted(values)
    if not xs:
        return math.nan
    k = max(1, math.ceil(pct / 100.0 * len(xs)))
    return float(xs[k - 1])


@dataclass
class EvalSummary:
    agent: str
    seed: int
    mean_latency: float
    p80_latency: float
    total_index_bytes: float
    built_index_bytes: float
    noop_rate: float
    mean_index_keys: float
    intersection_opportunity_rate: float
    intersection_taken_rate: float
    noop_rate_range: float
    noop_rate_eq: float
    build_mean_latency: float
    per_workload_mean_latency: list[float]
    per_workload_p80_latency: list[float]
    per_workload_index_bytes: list[float]
    per_workload_built_bytes: list[float]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalSummary":
        return cls(**d)


def _rate(num: float, den: float) -> float:
    return float(num / den) if den else math.nan


def summarize(
    agent: str,
    seed: int,
    build_records: Sequence[StepRecord],
    build_queries: Sequence[Query],
    latencies: Sequence[Sequence[float]],
    set_bytes: Sequence[float],
    built_bytes: Sequence[float],
) -> EvalSummary:
    """Aggregate a two-pass evaluation.

    ``latencies`` holds the pass-2 latencies per workload, ``set_bytes`` the
    final index set size per workload (default index included).
    """
    flat = [x for w in latencies for x in w]
    noops = [r.is_noop for r in build_records]
    keys = [len(part.split("|")) for r in build_records if not r.is_noop
            for part in r.action.split(";")]
    rng_q = [r.is_noop for r, q in zip(build_records, build_queries) if q.has_range]
    eq_q = [r.is_noop for r, q in zip(build_records, build_queries) if not q.has_range]
    opp = sum(r.intersection_opportunity for r in build_records)
    taken = sum(r.intersection_taken for r in build_records)
    return EvalSummary(
        agent=agent,
        seed=seed,
        mean_latency=float(np.mean(flat)),
        p80_latency=nearest_rank(flat, 80),
        total_index_bytes=float(np.mean(set_bytes)),
        built_index_bytes=float(np.mean(built_bytes)),
        noop_rate=_rate(sum(noops), len(noops)),
        mean_index_keys=float(np.mean(keys)) if keys else math.nan,
        intersection_opportunity_rate=_rate(opp, len(build_records)),
        intersection_taken_rate=_rate(taken, opp),
        noop_rate_range=_rate(sum(rng_q), len(rng_q)),
        noop_rate_eq=_rate(sum(eq_q), len(eq_q)),
        build_mean_latency=float(np.mean([r.latency for r in build_records])),
        per_workload_mean_latency=[float(np.mean(w)) for w in latencies],
        per_workload_p80_latency=[nearest_rank(w, 80) for w in latencies],
        per_workload_index_bytes=[float(b) for b in set_bytes],
        per_workload_built_bytes=[float(b) for b in built_bytes],
    )


CURVE_COLUMNS = [
    "episode",
    "selectivity_ratio",
    "intersection_taken_rate",
    "intersection_opportunity_rate",
    "noop_rate",
    "mean_reward",
    "selectivity_ratio_smooth",
    "intersection_taken_rate_smooth",
    "noop_rate_smooth",
    "mean_reward_smooth",
]


def trailing_mean(xs: Sequence[float], window: int = 10) -> list[float]:
    """Trailing moving average that skips NaNs (NaN only if the window is all NaN)."""
    out = []
    arr = np.asarray(xs, dtype=np.float64)
    for i in range(len(arr)):
        w = arr[max(0, i - window + 1): i + 1]
        w = w[~np.isnan(w)]
        out.append(float(w.mean()) if w.size else math.nan)
    return out


def learning_curves(records: Iterable[StepRecord], window: int = 10) -> list[dict]:
    by_ep: dict[int, list[StepRecord]] = {}
    for r in records:
        by_ep.setdefault(r.episode, []).append(r)
    rows = []
    for ep in sorted(by_ep):
        rs = by_ep[ep]
        ratios = [r.selectivity_ratio for r in rs if r.selectivity_ratio is not None]
        opp = sum(r.intersection_opportunity for r in rs)
        rows.append({
            "episode": ep,
            "selectivity_ratio": float(np.mean(ratios)) if ratios else math.nan,
            "intersection_taken_rate": _rate(sum(r.intersection_taken for r in rs), opp),
            "intersection_opportunity_rate": _rate(opp, len(rs)),
            "noop_rate": _rate(sum(r.is_noop for r in rs), len(rs)),
            "mean_reward": float(np.mean([r.reward for r in rs])),
        })
    for key in ("selectivity_ratio", "intersection_taken_rate", "noop_rate", "mean_reward"):
        sm = trailing_mean([row[key] for row in rows], window)
        for row, v in zip(rows, sm):
            row[key + "_smooth"] = v
    return rows
