"""Sinkhorn policy gradient: a deterministic permutation actor with a Q critic.

Actor: token embedding -> per-row dense features -> bidirectional GRU ->
dense to an N x N score matrix -> Sinkhorn -> Hungarian rounding.
Critic: per-row state features plus an embedding of each row's assigned
position (a row of the permutation) -> bidirectional GRU -> scalar Q.

Episodes are treated as 1-step for credit assignment: the critic regresses
the immediate reward.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..numcore import ParamStore, Tensor, adam_step, bigru, dense, embed, glorot, init_gru, no_grad
from ..numcore import tensor as T
from ..sinkhorn import explore_swap, round_hungarian, sinkhorn
from .replay import ReplayBuffer, ReplayMode, Transition
from .schedule import LinearSchedule


@dataclass
class SpgConfig:
    embed_dim: int = 48
    hidden: int = 48
    n_rows: int = 4
    row_tokens: int = 8
    tau: float = 0.05
    sinkhorn_iters: int = 10
    score_scale: float | None = 0.25  # rows standardized then scaled; None leaves them linear
    lr_actor: float = 0.005
    lr_critic: float = 0.001
    batch_size: int = 32
    warmup: int = 256
    buffer_size: int = 4096
    replay: str = "prioritized"
    alpha: float = 0.6
    beta: float = 0.4
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_decay_frac: float = 0.5
    clip_norm: float | None = 10.0


@dataclass(frozen=True)
class PermutationAction:
    hard: np.ndarray
    relaxed: np.ndarray


def _add_gru(store: ParamStore, rng, n_in: int, hidden: int, prefix: str) -> None:
    for d in ("fw", "bw"):
        for k, v in init_gru(rng, n_in, hidden, f"{prefix}.{d}").items():
            store.add(k, v)


class SpgNets:
    def __init__(self, vocab_size: int, cfg: SpgConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.vocab_size = vocab_size
        E, H, N, K = cfg.embed_dim, cfg.hidden, cfg.n_rows, cfg.row_tokens
        a = self.actor = ParamStore()
        emb = rng.uniform(-0.1, 0.1, size=(vocab_size, E))
        emb[0] = 0.0
        a.add("emb", emb)
        a.add("row.W", glorot(rng, K * E, E))
        a.add("row.b", np.zeros(E))
        _add_gru(a, rng, E, H, "gru")
        a.add("out.W", glorot(rng, 2 * H, N))
        a.add("out.b", np.zeros(N))

        c = self.critic = ParamStore()
        emb = rng.uniform(-0.1, 0.1, size=(vocab_size, E))
        emb[0] = 0.0
        c.add("emb", emb)
        c.add("row.W", glorot(rng, K * E, E))
        c.add("row.b", np.zeros(E))
        c.add("act.W", glorot(rng, N, E))
        c.add("act.b", np.zeros(E))
        _add_gru(c, rng, E, H, "gru")
        c.add("head.W", glorot(rng, 2 * H, H))
        c.add("head.b", np.zeros(H))
        c.add("q.W", glorot(rng, H, 1))
        c.add("q.b", np.zeros(1))

    def _row_features(self, store: ParamStore, rows: np.ndarray) -> Tensor:
        rows = np.asarray(rows)
        B, N, K = rows.shape
        e = embed(rows, store["emb"]).reshape(B, N, K * self.cfg.embed_dim)
        return dense(e, store["row.W"], store["row.b"], "relu")

    def scores(self, rows: np.ndarray) -> Tensor:
        """(B, N, K) token rows -> (B, N, N) slot-to-position scores."""
        a = self.actor
        h = bigru(self._row_features(a, rows), a.params, "gru")
        x = dense(h, a["out.W"], a["out.b"])
        c = self.cfg.score_scale
        if c is None:
            return x
        # a linear critic is maximized at a vertex, so raw scores grow without
        # bound until Sinkhorn at small tau saturates and passes zero gradient;
        # standardizing each row fixes the sharpness at c / tau
        d = x - x.mean(axis=-1, keepdims=True)
        var = (d * d).mean(axis=-1, keepdims=True)
        return d * T.exp(T.log(var + 1e-6) * -0.5) * c

    def relaxed(self, rows: np.ndarray, tau: float | None = None,
                n_iters: int | None = None) -> Tensor:
        cfg = self.cfg
        return sinkhorn(self.scores(rows), tau or cfg.tau, n_iters or cfg.sinkhorn_iters)

    def q(self, rows: np.ndarray, perm) -> Tensor:
        """Critic value of (state, permutation); ``perm`` may be hard or relaxed."""
        c = self.critic
        s = self._row_features(c, rows)
        act = dense(T.as_tensor(perm), c["act.W"], c["act.b"])
        h = bigru(s + act, c.params, "gru")
        z = dense(h.mean(axis=1), c["head.W"], c["head.b"], "relu")
        return dense(z, c["q.W"], c["q.b"]).reshape(-1)


def _rows(states: Sequence) -> np.ndarray:
    return np.stack([getattr(s, "rows", s) for s in states])


def spg_act(nets: SpgNets, rows: np.ndarray, tau: float, n_iters: int, eps: float,
            rng: np.random.Generator) -> PermutationAction:
    with no_grad():
        M = nets.relaxed(np.asarray(rows)[None], tau, n_iters).data[0]
    P = explore_swap(round_hungarian(M), eps, rng)
    return PermutationAction(P, M)


def spg_critic_update(
    nets: SpgNets,
    batch: Sequence[Transition],
    lr_critic: float,
    weights: np.ndarray | None = None,
    clip_norm: float | None = 10.0,
) -> tuple[float, np.ndarray]:
    """Regress Q(s, P) on the immediate reward; returns (loss, r - Q)."""
    rows = _rows([t.state for t in batch])
    P = np.stack([getattr(t.action, "hard", t.action) for t in batch])
    r = np.array([t.reward for t in batch], dtype=np.float64)
    w = np.ones(len(batch)) if weights is None else np.asarray(weights, dtype=np.float64)
    q = nets.q(rows, P)
    diff = q - r
    loss = (diff * diff * (0.5 * w)).mean()
    nets.critic.zero_grad()
    loss.backward()
    adam_step(nets.critic, lr_critic, clip_norm=clip_norm)
    return loss.item(), -diff.data


def spg_actor_update(
    nets: SpgNets,
    states: Sequence,
    lr_actor: float,
    tau: float | None = None,
    n_iters: int | None = None,
    clip_norm: float | None = 10.0,
) -> float:
    """Ascend mean Q(s, P(s)) with P rounded from M(s); critic frozen.

    Rounding is straight-through: the critic sees the hard permutation it was
    trained on and the gradient passes to the relaxed M unchanged.
    """
    rows = _rows(states)
    frozen = [p for _, p in nets.critic.items()]
    for p in frozen:
        p.requires_grad = False
    try:
        M = nets.relaxed(rows, tau, n_iters)
        P = np.stack([round_hungarian(m) for m in M.data])
        obj = nets.q(rows, M + (P - M.data)).mean()
        nets.actor.zero_grad()
        (-obj).backward()
    finally:
        for p in frozen:
            p.requires_grad = True
    adam_step(nets.actor, lr_actor, clip_norm=clip_norm)
    return obj.item()


class SpgAgent:
    kind = "spg"

    def __init__(self, vocab_size: int, cfg: SpgConfig, total_steps: int,
                 rng: np.random.Generator):
        self.cfg = cfg
        init_rng, self.rng, replay_rng = rng.spawn(3)
        self.nets = SpgNets(vocab_size, cfg, init_rng)
        self.buffer = ReplayBuffer(cfg.buffer_size, ReplayMode(cfg.replay), cfg.alpha,
                                   cfg.beta, rng=replay_rng)
        self.eps = LinearSchedule(cfg.eps_start, cfg.eps_end,
                                  int(cfg.eps_decay_frac * total_steps))
        self.steps = 0
        self.updates = 0
        self.last_loss = float("nan")
        self.update_log: list[tuple[int, float, float, int]] = []  # step, loss, eps, buffer size

    def act(self, rows: np.ndarray, explore: bool = True) -> PermutationAction:
        eps = self.eps(self.steps) if explore else 0.0
        return spg_act(self.nets, rows, self.cfg.tau, self.cfg.sinkhorn_iters, eps, self.rng)

    def observe(self, t: Transition) -> float | None:
        self.buffer.push(t)
        self.steps += 1
        if len(self.buffer) < max(self.cfg.warmup, self.cfg.batch_size):
            return None
        idx, batch, w = self.buffer.sample(self.cfg.batch_size)
        loss, delta = spg_critic_update(self.nets, batch, self.cfg.lr_critic, w,
                                        self.cfg.clip_norm)
        if self.buffer.mode is ReplayMode.PRIORITIZED:
            self.buffer.update_priorities(idx, delta)
        spg_actor_update(self.nets, [t.state for t in batch], self.cfg.lr_actor,
                         clip_norm=self.cfg.clip_norm)
        self.updates += 1
        self.last_loss = loss
        self.update_log.append((self.steps, loss, self.eps(self.steps), len(self.buffer)))
        return loss

    def stores(self) -> dict[str, ParamStore]:
        return {"actor": self.nets.actor, "critic": self.nets.critic}
