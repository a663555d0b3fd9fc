"""Branching dueling Q-network over the compact (per-key stream) action scheme."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..numcore import ParamStore, Tensor, adam_step, dense, embed, glorot, no_grad
from ..numcore import tensor as T
from .replay import ReplayBuffer, ReplayMode, Transition
from .schedule import LinearSchedule


@dataclass
class BdqnConfig:
    embed_dim: int = 128
    trunk_dim: int = 128
    stream_dim: int = 32
    n_streams: int = 3
    n_choices: int = 4
    state_len: int = 32
    lr: float = 1e-3
    gamma: float = 0.9
    batch_size: int = 32
    warmup: int = 256
    target_sync: int = 100
    buffer_size: int = 4096
    replay: str = "uniform"
    alpha: float = 0.6
    beta: float = 0.4
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_decay_frac: float = 0.5
    clip_norm: float | None = 10.0


class BdqnNet:
    """Shared trunk, one state-value head, one advantage head per key stream.

    ``Q_d(s, a) = V(s) + A_d(s, a) - mean_a A_d(s, a)``.
    """

    def __init__(self, vocab_size: int, cfg: BdqnConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.vocab_size = vocab_size
        s = self.store = ParamStore()
        E, L, Hd, Sd = cfg.embed_dim, cfg.state_len, cfg.trunk_dim, cfg.stream_dim
        emb = rng.uniform(-0.1, 0.1, size=(vocab_size, E))
        emb[0] = 0.0
        s.add("emb", emb)
        s.add("trunk.W", glorot(rng, L * E, Hd))
        s.add("trunk.b", np.zeros(Hd))
        s.add("value.W1", glorot(rng, Hd, Sd))
        s.add("value.b1", np.zeros(Sd))
        s.add("value.W2", glorot(rng, Sd, 1))
        s.add("value.b2", np.zeros(1))
        for d in range(cfg.n_streams):
            s.add(f"adv{d}.W1", glorot(rng, Hd, Sd))
            s.add(f"adv{d}.b1", np.zeros(Sd))
            s.add(f"adv{d}.W2", glorot(rng, Sd, cfg.n_choices))
            s.add(f"adv{d}.b2", np.zeros(cfg.n_choices))

    def forward(self, ids: np.ndarray) -> Tensor:
        """(B, state_len) token ids -> (B, streams, choices) Q-values."""
        s = self.store
        ids = np.asarray(ids)
        B = ids.shape[0]
        x = embed(ids, s["emb"]).reshape(B, -1)
        h = dense(x, s["trunk.W"], s["trunk.b"], "relu")
        v = dense(dense(h, s["value.W1"], s["value.b1"], "relu"), s["value.W2"], s["value.b2"])
        advs = []
        for d in range(self.cfg.n_streams):
            a = dense(h, s[f"adv{d}.W1"], s[f"adv{d}.b1"], "relu")
            advs.append(dense(a, s[f"adv{d}.W2"], s[f"adv{d}.b2"]))
        A = T.stack(advs, axis=1)
        A = A - A.mean(axis=-1, keepdims=True)
        return A + v.reshape(B, 1, 1)

    def q_values(self, ids: np.ndarray) -> np.ndarray:
        with no_grad():
            return self.forward(ids).data

    def clone(self) -> "BdqnNet":
        other = BdqnNet.__new__(BdqnNet)
        other.cfg = self.cfg
        other.vocab_size = self.vocab_size
        other.store = ParamStore()
        for k, p in self.store.items():
            other.store.add(k, p.data)
        return other


def bdqn_act(net: BdqnNet, token_ids: np.ndarray, eps: float,
             rng: np.random.Generator) -> np.ndarray:
    q = net.q_values(np.asarray(token_ids)[None])[0]
    greedy = np.argmax(q, axis=-1)
    explore = rng.random(len(greedy)) < eps
    rand = rng.integers(0, q.shape[-1], size=len(greedy))
    return np.where(explore, rand, greedy).astype(np.int64)


def _ids(states: Sequence) -> np.ndarray:
    return np.stack([getattr(s, "token_ids", s) for s in states])


def bdqn_targets(batch: Sequence[Transition], target_net: BdqnNet, gamma: float) -> np.ndarray:
    """``r + gamma * mean_d max_a Q_d(s', a)`` per transition; ``r`` at terminals."""
    r = np.array([t.reward for t in batch], dtype=np.float64)
    live = [i for i, t in enumerate(batch) if not t.terminal]
    if live and gamma != 0.0:
        q = target_net.q_values(_ids([batch[i].next_state for i in live]))
        r[live] += gamma * q.max(axis=-1).mean(axis=-1)
    return r


def bdqn_target(t: Transition, target_net: BdqnNet, gamma: float) -> float:
    return float(bdqn_targets([t], target_net, gamma)[0])


def bdqn_update(
    net: BdqnNet,
    target_net: BdqnNet,
    batch: Sequence[Transition],
    gamma: float,
    lr: float,
    weights: np.ndarray | None = None,
    clip_norm: float | None = 10.0,
) -> tuple[float, np.ndarray]:
    """One Adam step on the per-stream squared TD error; returns (loss, td)."""
    if not batch:
        raise ValueError("empty batch")
    targets = bdqn_targets(batch, target_net, gamma)
    actions = np.stack([np.asarray(t.action) for t in batch])
    B, D = actions.shape
    onehot = np.zeros((B, D, net.cfg.n_choices))
    onehot[np.arange(B)[:, None], np.arange(D)[None, :], actions] = 1.0
    q = net.forward(_ids([t.state for t in batch]))
    q_sa = (q * onehot).sum(axis=-1)
    diff = q_sa - targets[:, None]
    w = np.ones(B) if weights is None else np.asarray(weights, dtype=np.float64)
    loss = (diff * diff * (0.5 * w[:, None])).mean()
    net.store.zero_grad()
    loss.backward()
    adam_step(net.store, lr, clip_norm=clip_norm)
    return loss.item(), diff.data.mean(axis=1)


class BdqnAgent:
    kind = "bdqn"

    def __init__(self, vocab_size: int, cfg: BdqnConfig, total_steps: int,
                 rng: np.random.Generator):
        self.cfg = cfg
        init_rng, self.rng, replay_rng = rng.spawn(3)
        self.net = BdqnNet(vocab_size, cfg, init_rng)
        self.target = self.net.clone()
        self.buffer = ReplayBuffer(cfg.buffer_size, ReplayMode(cfg.replay), cfg.alpha,
                                   cfg.beta, rng=replay_rng)
        self.eps = LinearSchedule(cfg.eps_start, cfg.eps_end,
                                  int(cfg.eps_decay_frac * total_steps))
        self.steps = 0
        self.updates = 0
        self.last_loss = float("nan")
        self.update_log: list[tuple[int, float, float, int]] = []  # step, loss, eps, buffer size

    def act(self, token_ids: np.ndarray, explore: bool = True) -> np.ndarray:
        eps = self.eps(self.steps) if explore else 0.0
        return bdqn_act(self.net, token_ids, eps, self.rng)

    def observe(self, t: Transition) -> float | None:
        """Store a transition, then run one update once past warmup."""
        self.buffer.push(t)
        self.steps += 1
        if len(self.buffer) < max(self.cfg.warmup, self.cfg.batch_size):
            return None
        idx, batch, w = self.buffer.sample(self.cfg.batch_size)
        loss, td = bdqn_update(self.net, self.target, batch, self.cfg.gamma, self.cfg.lr,
                               w, self.cfg.clip_norm)
        if self.buffer.mode is ReplayMode.PRIORITIZED:
            self.buffer.update_priorities(idx, td)
        self.updates += 1
        if self.updates % self.cfg.target_sync == 0:
            self.sync_target()
        self.last_loss = loss
        self.update_log.append((self.steps, loss, self.eps(self.steps), len(self.buffer)))
        return loss

    def sync_target(self) -> None:
        self.target.store.copy_from(self.net.store)

    def stores(self) -> dict[str, ParamStore]:
        return {"q": self.net.store, "target": self.target.store}
