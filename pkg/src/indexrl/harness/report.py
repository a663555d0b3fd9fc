"""Run artifacts on disk: step CSVs, summaries, learning curves, checkpoints."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..numcore import load_params, save_params
from ..schema import Index, Workload, dump_workloads, load_workloads
from .config import RunConfig, config_from_dict
from .loop import Env, EvalResult, TrainResult, make_policy
from .policies import Policy
from .search import SearchResult
from .stats import CURVE_COLUMNS, EvalSummary, StepRecord, learning_curves, summarize

STEPS = "train_steps.csv"
EVAL_STEPS = "eval_steps.csv"
EVAL_LAT = "eval_latencies.csv"
CURVES = "curves.csv"
SUMMARY = "summary.json"
TEST_WL = "test_workloads.json"
CKPT = "checkpoint.json"
PARAMS = "params.npz"
AGGREGATE = "aggregate.json"
UPDATES = "updates.csv"


def _writable(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise OSError(f"output directory {out} is not writable: {e}") from e
    return out


def write_steps_csv(path: str | Path, records: Iterable[StepRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(StepRecord.columns())
        for r in records:
            w.writerow(r.row())


def read_steps_csv(path: str | Path) -> list[StepRecord]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != StepRecord.columns():
            raise ValueError(f"{path}: unexpected columns {rd.fieldnames}")
        return [StepRecord.from_row(row) for row in rd]


def write_curves_csv(path: str | Path, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, CURVE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_curves_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (int(v) if k == "episode" else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)]


def write_latencies_csv(path: str | Path, latencies: Sequence[Sequence[float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["workload", "query", "latency"])
        for wi, lat in enumerate(latencies):
            for qi, x in enumerate(lat):
                w.writerow([wi, qi, repr(float(x))])


def read_latencies_csv(path: str | Path) -> list[list[float]]:
    out: dict[int, list[float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(int(row["workload"]), []).append(float(row["latency"]))
    return [out[k] for k in sorted(out)]


def write_update_log(path: str | Path, rows: Iterable[tuple[int, float, float, int]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "loss", "eps", "buffer_size"])
        for step, loss, eps, size in rows:
            w.writerow([step, repr(float(loss)), repr(float(eps)), size])


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(x):
    # JSON has no NaN; store it as null
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, list):
        return [_clean(v) for v in x]
    return x


def write_json(path: str | Path, data) -> None:
    if isinstance(data, dict):
        data = {k: _clean(v) for k, v in data.items()}
    Path(path).write_text(json.dumps(data, indent=2, default=_json_default) + "\n")


def read_summary(path: str | Path) -> EvalSummary:
    d = json.loads(Path(path).read_text())
    d = {k: (math.nan if v is None else v) for k, v in d.items()}
    return EvalSummary.from_dict(d)


def summary_from_files(run_dir: str | Path) -> EvalSummary:
    """Recompute a run's summary from its CSVs and stored per-workload index sizes."""
    run_dir = Path(run_dir)
    prev = json.loads((run_dir / SUMMARY).read_text())
    build = read_steps_csv(run_dir / EVAL_STEPS)
    lat = read_latencies_csv(run_dir / EVAL_LAT)
    queries = [q for w in load_workloads(run_dir / TEST_WL) for q in w]
    return summarize(prev["agent"], prev["seed"], build, queries, lat,
                     prev["per_workload_index_bytes"], prev["per_workload_built_bytes"])


def save_checkpoint(out_dir: Path, cfg: RunConfig, policy: Policy,
                    search: SearchResult | None = None) -> Path:
    meta = {"agent": cfg.agent, "seed": cfg.seed, "config": cfg.to_dict(), "params": None,
            "search_indices": None}
    if hasattr(policy, "stores"):
        save_params(out_dir / PARAMS, **policy.stores())
        meta["params"] = PARAMS
    if search is not None:
        meta["search_indices"] = [list(ix.keys) for ix in search.indices]
    path = out_dir / CKPT
    write_json(path, meta)
    return path


def load_checkpoint(path: str | Path) -> tuple[RunConfig, Policy, Env]:
    path = Path(path)
    meta = json.loads(path.read_text())
    cfg = config_from_dict(meta["config"])
    env = Env.from_config(cfg)
    fixed = None
    if meta.get("search_indices") is not None:
        fixed = [Index(env.schema.name, tuple(k)) for k in meta["search_indices"]]
    policy = make_policy(cfg, env.schema, fixed)
    if meta.get("params"):
        stored = load_params(path.parent / meta["params"])
        stores = policy.stores()
        if set(stored) != set(stores):
            raise ValueError(f"checkpoint stores {sorted(stored)} != {sorted(stores)}")
        for name, st in stores.items():
            st.load_state_dict(stored[name])
    return cfg, policy, env


def write_eval(out_dir: str | Path, ev: EvalResult, test_workloads: Sequence[Workload]) -> None:
    out = _writable(out_dir)
    write_steps_csv(out / EVAL_STEPS, ev.build_records)
    write_latencies_csv(out / EVAL_LAT, ev.latencies)
    dump_workloads(test_workloads, out / TEST_WL)
    write_json(out / SUMMARY, ev.summary.to_dict())


def write_run(out_dir: str | Path, cfg: RunConfig, result: TrainResult,
              ev: EvalResult | None = None) -> Path:
    """Write every artifact of one (agent, seed) run."""
    out = _writable(out_dir)
    write_json(out / "config.json", cfg.to_dict())
    write_steps_csv(out / STEPS, result.records)
    write_curves_csv(out / CURVES, learning_curves(result.records, cfg.curve_window))
    save_checkpoint(out, cfg, result.policy, result.search)
    agent = getattr(result.policy, "agent", None)
    if agent is not None:
        write_update_log(out / UPDATES, agent.update_log)
    if ev is not None:
        write_eval(out, ev, result.test_workloads)
    return out


def find_runs(paths: Sequence[str | Path]) -> list[Path]:
    runs = []
    for p in paths:
        p = Path(p)
        if (p / SUMMARY).exists():
            runs.append(p)
        else:
            runs.extend(sorted(q.parent for q in p.rglob(SUMMARY)))
    return sorted(set(runs))


NUMERIC = [
    "mean_latency", "p80_latency", "total_index_bytes", "built_index_bytes", "noop_rate",
    "mean_index_keys", "intersection_opportunity_rate", "intersection_taken_rate",
    "noop_rate_range", "noop_rate_eq", "build_mean_latency",
]


def aggregate(summaries: Sequence[EvalSummary]) -> dict:
    """Per-agent mean with min/max band over seeds."""
    by_agent: dict[str, list[EvalSummary]] = {}
    for s in summaries:
        by_agent.setdefault(s.agent, []).append(s)
    out = {}
    for agent, ss in sorted(by_agent.items()):
        entry = {"seeds": sorted(s.seed for s in ss)}
        for k in NUMERIC:
            xs = np.array([getattr(s, k) for s in ss], dtype=np.float64)
            ok = xs[~np.isnan(xs)]
            entry[k] = {
                "mean": float(ok.mean()) if ok.size else None,
                "min": float(ok.min()) if ok.size else None,
                "max": float(ok.max()) if ok.size else None,
            }
        out[agent] = entry
    return out


def report(run_dirs: Sequence[str | Path], out_dir: str | Path | None = None) -> dict:
    runs = find_runs(run_dirs)
    if not runs:
        raise FileNotFoundError(f"no runs with {SUMMARY} under {list(map(str, run_dirs))}")
    agg = aggregate([read_summary(r / SUMMARY) for r in runs])
    agg["_runs"] = [str(r) for r in runs]
    target = _writable(out_dir if out_dir is not None else Path(run_dirs[0]))
    write_json(target / AGGREGATE, agg)
    return agg
