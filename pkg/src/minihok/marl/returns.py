"""Exploration schedule, masked action selection and return estimators."""

from __future__ import annotations

import numpy as np


def epsilon_schedule(t: float, start: float = 1.0, finish: float = 0.05,
                     anneal_steps: float = 100_000) -> float:
    """Linear decay from ``start`` to ``finish`` over ``anneal_steps`` env steps."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if anneal_steps <= 0:
        return finish
    frac = min(t / anneal_steps, 1.0)
    return start + frac * (finish - start)


def masked_argmax(q: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise argmax over legal entries; ties go to the lowest index."""
    q = np.asarray(q, dtype=np.float64)
    mask = np.asarray(mask).astype(bool)
    if not mask.any(axis=-1).all():
        raise ValueError("availability mask has an all-zero row")
    return np.where(mask, q, -np.inf).argmax(axis=-1)


def select_actions_eps_greedy(q: np.ndarray, mask: np.ndarray, epsilon: float,
                              rng: np.random.Generator) -> np.ndarray:
    """Per agent: uniform legal action with prob ε, else masked argmax.

    Two uniform draws per agent are always consumed, so the RNG stream does
    not depend on which branch was taken.
    """
    greedy = masked_argmax(q, mask)
    mask = np.asarray(mask).astype(bool)
    n = mask.shape[0]
    explore = rng.random(n) < epsilon
    pick = rng.random(n)
    out = greedy.copy()
    for i in np.flatnonzero(explore):
        legal = np.flatnonzero(mask[i])
        out[i] = legal[min(int(pick[i] * legal.size), legal.size - 1)]
    return out


def td_lambda_targets(rewards, next_values, dones, gamma: float = 0.99, lam: float = 0.6,
                      mask=None) -> np.ndarray:
    """λ-returns along the last axis.

    ``next_values[t]`` is the bootstrap value of the state after step t and
    ``dones[t]`` flags termination at step t (truncation is not termination).
    G_t = r_t + γ (1 - d_t) [(1 - λ) V_{t+1} + λ G_{t+1}], and the last live
    step bootstraps fully from V_{t+1}. Padded steps (``mask`` = 0) get 0.
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(next_values, dtype=np.float64)
    d = np.asarray(dones, dtype=np.float64)
    if not (r.shape == v.shape == d.shape):
        raise ValueError(f"length mismatch: {r.shape}, {v.shape}, {d.shape}")
    m = np.ones_like(r) if mask is None else np.asarray(mask, dtype=np.float64)
    T = r.shape[-1]
    out = np.zeros_like(r)
    g_next = v[..., T - 1]
    for t in range(T - 1, -1, -1):
        live_next = m[..., t + 1] if t + 1 < T else np.zeros_like(r[..., t])
        # past the last live step the recursion reduces to a one-step bootstrap
        blend = (1 - lam) * v[..., t] + lam * np.where(live_next > 0, g_next, v[..., t])
        g = r[..., t] + gamma * (1 - d[..., t]) * blend
        out[..., t] = g * m[..., t]
        g_next = g
    return out


def gae(rewards, values, dones, gamma: float = 0.99, lam: float = 0.95, mask=None) -> np.ndarray:
    """Generalized advantage estimates along the last axis.

    ``values`` has one more entry than ``rewards``: V(s_0) .. V(s_T).
    δ_t = r_t + γ (1 - d_t) V_{t+1} - V_t,  A_t = δ_t + γ λ (1 - d_t) A_{t+1}.
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    d = np.asarray(dones, dtype=np.float64)
    if v.shape[-1] != r.shape[-1] + 1 or d.shape != r.shape:
        raise ValueError("values must have one more step than rewards and dones")
    m = np.ones_like(r) if mask is None else np.asarray(mask, dtype=np.float64)
    T = r.shape[-1]
    adv = np.zeros_like(r)
    a_next = np.zeros_like(r[..., 0])
    for t in range(T - 1, -1, -1):
        live_next = m[..., t + 1] if t + 1 < T else np.zeros_like(a_next)
        delta = r[..., t] + gamma * (1 - d[..., t]) * v[..., t + 1] - v[..., t]
        a = delta + gamma * lam * (1 - d[..., t]) * live_next * a_next
        adv[..., t] = a * m[..., t]
        a_next = a
    return adv


class ValueNorm:
    """Running mean/variance used to normalize value targets."""

    def __init__(self, beta: float = 0.99999, eps: float = 1e-5):
        self.beta, self.eps = beta, eps
        self.mean = 0.0
        self.mean_sq = 0.0
        self.debias = 0.0

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size == 0:
            return
        w = self.beta
        self.mean = w * self.mean + (1 - w) * x.mean()
        self.mean_sq = w * self.mean_sq + (1 - w) * (x * x).mean()
        self.debias = w * self.debias + (1 - w)

    def _stats(self) -> tuple[float, float]:
        d = max(self.debias, self.eps)
        mean = self.mean / d
        var = max(self.mean_sq / d - mean * mean, 1e-2)
        return mean, var

    def normalize(self, x):
        mean, var = self._stats()
        return (np.asarray(x) - mean) / np.sqrt(var)

    def denormalize(self, x):
        mean, var = self._stats()
        return np.asarray(x) * np.sqrt(var) + mean

    def state_dict(self) -> dict:
        return {"mean": self.mean, "mean_sq": self.mean_sq, "debias": self.debias}

    def load_state_dict(self, d: dict) -> None:
        self.mean, self.mean_sq, self.debias = float(d["mean"]), float(d["mean_sq"]), float(d["debias"])
