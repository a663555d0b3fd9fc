"""Uniform wrappers around the learned agents and the non-learned baselines.

A policy turns (query, current index set) into a list of indices to build.
Learned policies also keep the encoded state and raw action so the training
loop can hand transitions back to the agent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from ..agents import BdqnAgent, BdqnConfig, SpgAgent, SpgConfig, Transition
from ..converter import Vocabulary, decode_compact, decode_permutation, to_flat_state, to_matrix_state
from ..dbsim import IndexSet, reset
from ..schema import Index, Query, TableSchema


@dataclass
class Decision:
    indices: list[Index]
    state: Any = None
    raw: Any = None


class Policy:
    name = "policy"
    learns = False
    bootstrap = False

    def start(self, schema: TableSchema) -> IndexSet:
        return reset(schema)

    def decide(self, query: Query, index_set: IndexSet, explore: bool) -> Decision:
        raise NotImplementedError

    def encode(self, query: Query, index_set: IndexSet):
        return None

    def observe(self, t: Transition) -> None:
        pass


class DefaultPolicy(Policy):
    """Keeps only the default index."""

    name = "default"

    def decide(self, query, index_set, explore):
        return Decision([])


class FullPolicy(Policy):
    """Builds a single-key index on every attribute it sees."""

    name = "full"

    def decide(self, query, index_set, explore):
        out = []
        for a in query.attributes:
            ix = Index(query.table, (a,))
            if ix not in index_set:
                out.append(ix)
        return Decision(out)


class FixedSetPolicy(Policy):
    """Starts every workload from a precomputed set and never builds more."""

    name = "search"

    def __init__(self, indices: list[Index]):
        self.indices = list(indices)

    def start(self, schema):
        s = reset(schema)
        extra = tuple(i for i in self.indices if i not in s)
        return IndexSet(s.table, s.indices + extra)

    def decide(self, query, index_set, explore):
        return Decision([])


class BdqnPolicy(Policy):
    name = "bdqn"
    learns = True
    bootstrap = True

    def __init__(self, schema: TableSchema, cfg: BdqnConfig, total_steps: int,
                 rng: np.random.Generator, flat_len: int = 32):
        self.vocab = Vocabulary.from_schema(schema)
        self.flat_len = flat_len
        self.agent = BdqnAgent(len(self.vocab), cfg, total_steps, rng)

    def encode(self, query, index_set):
        return to_flat_state(query, index_set, self.vocab, self.flat_len).token_ids

    def decide(self, query, index_set, explore):
        state = self.encode(query, index_set)
        choices = self.agent.act(state, explore)
        ix = decode_compact(choices, query)
        return Decision([] if ix is None else [ix], state, choices)

    def observe(self, t):
        self.agent.observe(t)

    def stores(self):
        return self.agent.stores()


class SpgPolicy(Policy):
    name = "spg"
    learns = True
    bootstrap = False

    def __init__(self, schema: TableSchema, cfg: SpgConfig, total_steps: int,
                 rng: np.random.Generator, n_max: int = 3):
        self.vocab = Vocabulary.from_schema(schema)
        self.n_max = n_max
        self.agent = SpgAgent(len(self.vocab), cfg, total_steps, rng)

    def encode(self, query, index_set):
        return to_matrix_state(query, index_set, self.vocab, self.n_max,
                               self.agent.cfg.row_tokens).rows

    def decide(self, query, index_set, explore):
        state = self.encode(query, index_set)
        action = self.agent.act(state, explore)
        ix = decode_permutation(action.hard, query)
        return Decision([] if ix is None else [ix], state, action.hard)

    def observe(self, t):
        self.agent.observe(t)

    def stores(self):
        return self.agent.stores()
