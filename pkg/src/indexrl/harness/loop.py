"""Training loop and two-pass evaluation."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..agents import Transition
from ..converter import RewardModel
from ..dbsim import CostModel, IndexSet, cost, create_index, index_set_bytes, reset
from ..schema import Index, Query, TableSchema, Workload, build_workloads, load_schema
from .config import RunConfig
from .policies import (
    BdqnPolicy,
    DefaultPolicy,
    FixedSetPolicy,
    FullPolicy,
    Policy,
    SpgPolicy,
)
from .search import SearchResult, search_baseline
from .stats import (
    EvalSummary,
    StepRecord,
    action_label,
    intersection_stats,
    selectivity_ratio,
    summarize,
)

log = logging.getLogger(__name__)


@dataclass
class Env:
    schema: TableSchema
    cost_model: CostModel
    reward: RewardModel
    noise_rng: np.random.Generator | None = None

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "Env":
        schema = load_schema(cfg.schema_path)
        reward = RewardModel.for_schema(schema, cfg.cost, cfg.reward.w_size, cfg.reward.w_latency)
        noise = np.random.default_rng([cfg.seed, 7]) if cfg.cost.noise_sigma > 0 else None
        return cls(schema, cfg.cost, reward, noise)

    def step(self, query: Query, index_set: IndexSet, built, episode: int, step: int,
             query_id: int) -> tuple[IndexSet, StepRecord]:
        """Apply the decided indices, run the query, and describe the step."""
        before = index_set
        delta = 0
        for ix in built:
            index_set, d = create_index(index_set, ix, self.schema, self.cost_model)
            delta += d
        rep = cost(query, index_set, self.schema, self.cost_model, self.noise_rng)
        r = self.reward(delta, rep.latency)
        opp, taken = intersection_stats(query, built, before, rep)
        ratio = None
        if built:
            ratio = float(np.mean([selectivity_ratio(ix, query, self.schema) for ix in built]))
        rec = StepRecord(episode, step, query_id, action_label(built), r, rep.latency, delta,
                         rep.path_name, opp, taken, ratio)
        return index_set, rec


def make_workloads(cfg: RunConfig, schema: TableSchema) -> tuple[list[Workload], list[Workload]]:
    w = cfg.workload
    train = build_workloads(schema, w.train_count, w.length, cfg.train_seed(), w.n_max, w.p_eq)
    test = build_workloads(schema, w.test_count, w.length, w.test_seed, w.n_max, w.p_eq)
    return train, test


def make_policy(cfg: RunConfig, schema: TableSchema,
                fixed_indices: Sequence[Index] | None = None) -> Policy:
    rng = np.random.default_rng(cfg.seed)
    if cfg.agent == "bdqn":
        bc = dataclasses.replace(cfg.bdqn, n_streams=cfg.encoder.max_keys,
                                 n_choices=cfg.workload.n_max + 1,
                                 state_len=cfg.encoder.flat_len)
        return BdqnPolicy(schema, bc, cfg.total_steps, rng, cfg.encoder.flat_len)
    if cfg.agent == "spg":
        sc = dataclasses.replace(cfg.spg, n_rows=cfg.workload.n_max + 1,
                                 row_tokens=cfg.encoder.row_tokens)
        return SpgPolicy(schema, sc, cfg.total_steps, rng, cfg.workload.n_max)
    if cfg.agent == "default":
        return DefaultPolicy()
    if cfg.agent == "full":
        return FullPolicy()
    if fixed_indices is None:
        raise ValueError("search policy needs its searched index set")
    return FixedSetPolicy(list(fixed_indices))


@dataclass
class TrainResult:
    policy: Policy
    records: list[StepRecord]
    train_workloads: list[Workload]
    test_workloads: list[Workload]
    env: Env
    search: SearchResult | None = None
    extras: dict = field(default_factory=dict)


def run_episodes(policy: Policy, workloads: Sequence[Workload], env: Env,
                 explore: bool = True, learn: bool = True,
                 progress: Callable[[int, list[StepRecord]], None] | None = None
                 ) -> tuple[list[StepRecord], list[IndexSet]]:
    """One pass of the training loop per workload.

    Returns one record per query and the final index set of each workload.
    """
    records: list[StepRecord] = []
    finals: list[IndexSet] = []
    qid = 0
    for ep, wl in enumerate(workloads):
        index_set = policy.start(env.schema)
        pending: Transition | None = None
        ep_records = []
        for step, query in enumerate(wl):
            dec = policy.decide(query, index_set, explore)
            if pending is not None:
                pending.next_state = dec.state
                policy.observe(pending)
                pending = None
            index_set, rec = env.step(query, index_set, dec.indices, ep, step, qid)
            qid += 1
            ep_records.append(rec)
            if learn and policy.learns:
                t = Transition(dec.state, dec.raw, rec.reward)
                if policy.bootstrap:
                    pending = t
                else:
                    policy.observe(t)
        if pending is not None:
            policy.observe(pending)  # last query of the workload: terminal
        records.extend(ep_records)
        finals.append(index_set)
        if progress is not None:
            progress(ep, ep_records)
    return records, finals


def train(cfg: RunConfig, progress=None) -> TrainResult:
    env = Env.from_config(cfg)
    train_wl, test_wl = make_workloads(cfg, env.schema)
    search = None
    if cfg.agent == "search":
        s = cfg.search
        search = search_baseline(train_wl, env.schema, s.budget, env.cost_model, env.reward,
                                 cfg.seed, cfg.workload.n_max, cfg.encoder.max_keys,
                                 s.subsample, s.window, s.explore_c, s.latency_scope)
    policy = make_policy(cfg, env.schema, search.indices if search else None)
    try:
        records, _ = run_episodes(policy, train_wl, env, explore=True, learn=True,
                                  progress=progress)
    except Exception as e:
        raise RuntimeError(f"training {cfg.agent} (seed {cfg.seed}) failed: {e}") from e
    return TrainResult(policy, records, train_wl, test_wl, env, search)


@dataclass
class EvalResult:
    summary: EvalSummary
    build_records: list[StepRecord]
    latencies: list[list[float]]
    final_sets: list[IndexSet]


def evaluate(policy: Policy, test_workloads: Sequence[Workload], env: Env,
             agent: str | None = None, seed: int = 0) -> EvalResult:
    """Pass 1 builds indices greedily with context; pass 2 runs every query on the final set."""
    build, sets = run_episodes(policy, test_workloads, env, explore=False, learn=False)
    base = index_set_bytes(reset(env.schema), env.schema, env.cost_model)
    lat, set_bytes, built_bytes = [], [], []
    for wl, final in zip(test_workloads, sets):
        lat.append([cost(q, final, env.schema, env.cost_model, env.noise_rng).latency for q in wl])
        total = index_set_bytes(final, env.schema, env.cost_model)
        set_bytes.append(total)
        built_bytes.append(total - base)
    queries = [q for wl in test_workloads for q in wl]
    summary = summarize(agent or policy.name, seed, build, queries, lat, set_bytes, built_bytes)
    return EvalResult(summary, build, lat, sets)
