"""Padded episode storage with a ring-buffer replay memory."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Batch:
    """Episode tensors padded to a common length T.

    obs (B, T+1, n, o), state (B, T+1, S), avail (B, T+1, n, A),
    actions (B, T, n), rewards (B, T), terminated (B, T), filled (B, T),
    lengths (B,). ``filled`` is 1 on live steps and 0 on padding.
    """

    obs: np.ndarray
    state: np.ndarray
    avail: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    terminated: np.ndarray
    filled: np.ndarray
    lengths: np.ndarray

    @property
    def size(self) -> int:
        return self.actions.shape[0]

    @property
    def max_len(self) -> int:
        return self.actions.shape[1]


class EpisodeRecorder:
    """Accumulates one episode step by step, then emits a length-1 Batch."""

    def __init__(self):
        self.obs, self.state, self.avail = [], [], []
        self.actions, self.rewards, self.terminated = [], [], []

    def add_frame(self, obs, state, avail) -> None:
        self.obs.append(np.asarray(obs, dtype=np.float64))
        self.state.append(np.asarray(state, dtype=np.float64))
        self.avail.append(np.asarray(avail, dtype=np.int8))

    def add_step(self, actions, reward: float, terminated: bool) -> None:
        self.actions.append(np.asarray(actions, dtype=np.int64))
        self.rewards.append(float(reward))
        self.terminated.append(bool(terminated))

    def finish(self) -> Batch:
        T = len(self.actions)
        if len(self.obs) != T + 1:
            raise ValueError("an episode needs one more frame than steps")
        return Batch(
            obs=np.stack(self.obs)[None], state=np.stack(self.state)[None],
            avail=np.stack(self.avail)[None], actions=np.stack(self.actions)[None],
            rewards=np.array(self.rewards)[None], terminated=np.array(self.terminated, dtype=np.float64)[None],
            filled=np.ones((1, T)), lengths=np.array([T]))


class EpisodeBuffer:
    """Fixed-capacity FIFO of episodes padded to ``episode_limit``."""

    def __init__(self, capacity: int, episode_limit: int, n_agents: int, obs_dim: int,
                 state_dim: int, n_actions: int):
        self.capacity = capacity
        self.limit = episode_limit
        L = episode_limit
        self.obs = np.zeros((capacity, L + 1, n_agents, obs_dim))
        self.state = np.zeros((capacity, L + 1, state_dim))
        self.avail = np.zeros((capacity, L + 1, n_agents, n_actions), dtype=np.int8)
        self.actions = np.zeros((capacity, L, n_agents), dtype=np.int64)
        self.rewards = np.zeros((capacity, L))
        self.terminated = np.zeros((capacity, L))
        self.filled = np.zeros((capacity, L))
        self.lengths = np.zeros(capacity, dtype=np.int64)
        self.index = 0
        self.count = 0

    def __len__(self) -> int:
        return self.count

    def insert(self, ep: Batch) -> None:
        for b in range(ep.size):
            T = int(ep.lengths[b])
            if T > self.limit:
                raise ValueError(f"episode length {T} exceeds limit {self.limit}")
            i = self.index
            self.obs[i] = 0
            self.state[i] = 0
            self.avail[i] = 0
            self.actions[i] = 0
            self.rewards[i] = 0
            self.terminated[i] = 0
            self.filled[i] = 0
            self.obs[i, :T + 1] = ep.obs[b, :T + 1]
            self.state[i, :T + 1] = ep.state[b, :T + 1]
            self.avail[i, :T + 1] = ep.avail[b, :T + 1]
            self.actions[i, :T] = ep.actions[b, :T]
            self.rewards[i, :T] = ep.rewards[b, :T]
            self.terminated[i, :T] = ep.terminated[b, :T]
            self.filled[i, :T] = 1
            self.lengths[i] = T
            self.index = (i + 1) % self.capacity
            self.count = min(self.count + 1, self.capacity)

    def can_sample(self, batch_size: int) -> bool:
        return self.count >= batch_size

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if not self.can_sample(batch_size):
            raise ValueError(f"buffer holds {self.count} episodes, need {batch_size}")
        idx = np.sort(rng.choice(self.count, batch_size, replace=False))
        T = int(self.lengths[idx].max())
        return Batch(
            obs=self.obs[idx, :T + 1], state=self.state[idx, :T + 1], avail=self.avail[idx, :T + 1],
            actions=self.actions[idx, :T], rewards=self.rewards[idx, :T],
            terminated=self.terminated[idx, :T], filled=self.filled[idx, :T],
            lengths=self.lengths[idx].copy())


def concat_batches(batches: list[Batch]) -> Batch:
    """Pad episodes of different lengths into one batch."""
    T = max(int(b.lengths.max()) for b in batches)
    B = sum(b.size for b in batches)
    first = batches[0]
    n, o = first.obs.shape[2:]
    S, A = first.state.shape[2], first.avail.shape[3]
    out = Batch(np.zeros((B, T + 1, n, o)), np.zeros((B, T + 1, S)),
                np.zeros((B, T + 1, n, A), dtype=np.int8), np.zeros((B, T, n), dtype=np.int64),
                np.zeros((B, T)), np.zeros((B, T)), np.zeros((B, T)), np.zeros(B, dtype=np.int64))
    k = 0
    for b in batches:
        for j in range(b.size):
            L = int(b.lengths[j])
            out.obs[k, :L + 1] = b.obs[j, :L + 1]
            out.state[k, :L + 1] = b.state[j, :L + 1]
            out.avail[k, :L + 1] = b.avail[j, :L + 1]
            out.actions[k, :L] = b.actions[j, :L]
            out.rewards[k, :L] = b.rewards[j, :L]
            out.terminated[k, :L] = b.terminated[j, :L]
            out.filled[k, :L] = 1
            out.lengths[k] = L
            k += 1
    return out
