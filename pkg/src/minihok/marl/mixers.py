"""Value-decomposition mixers: VDN, QMIX, QPLEX (mean-subtracted form), QATTEN.

All mixers take per-agent utilities of shape (B, n) and return (B,).
"""

from __future__ import annotations

import numpy as np

from .autograd import Tensor, as_tensor, linear
from .nn import MLP, Linear, Module


def vdn_mix(agent_qs) -> Tensor:
    return as_tensor(agent_qs).sum(axis=-1)


class VDNMixer(Module):
    def forward(self, agent_qs, states=None, **_) -> Tensor:
        return vdn_mix(agent_qs)


def qmix_mix(agent_qs, w1, b1, w2, b2) -> Tensor:
    """Two-layer monotone mixing with given (already non-negative) weights.

    Shapes: agent_qs (B, n), w1 (B, n, E), b1 (B, E), w2 (B, E), b2 (B,).
    """
    q = as_tensor(agent_qs)
    B, n = q.shape
    hidden = (q.reshape(B, 1, n) @ as_tensor(w1)).reshape(B, -1) + b1
    hidden = hidden.elu()
    return (hidden * w2).sum(axis=-1) + b2


class QMixer(Module):
    """State-conditioned hypernetworks emit the mixing weights; |.| keeps them ≥ 0."""

    def __init__(self, n_agents: int, state_dim: int, rng: np.random.Generator,
                 embed_dim: int = 32, hypernet_embed: int = 64):
        self.n_agents, self.state_dim, self.embed_dim = n_agents, state_dim, embed_dim
        self.hyper_w1 = MLP([state_dim, hypernet_embed, n_agents * embed_dim], rng)
        self.hyper_b1 = Linear(state_dim, embed_dim, rng)
        self.hyper_w2 = MLP([state_dim, hypernet_embed, embed_dim], rng)
        self.hyper_v = MLP([state_dim, embed_dim, 1], rng)

    def weights(self, states):
        s = as_tensor(states)
        if s.shape[-1] != self.state_dim:
            raise ValueError(f"state dim {s.shape[-1]} != {self.state_dim}")
        B = s.shape[0]
        w1 = self.hyper_w1(s).abs().reshape(B, self.n_agents, self.embed_dim)
        b1 = self.hyper_b1(s)
        w2 = self.hyper_w2(s).abs()
        b2 = self.hyper_v(s).reshape(B)
        return w1, b1, w2, b2

    def forward(self, agent_qs, states, **_) -> Tensor:
        q = as_tensor(agent_qs)
        if q.shape[-1] != self.n_agents:
            raise ValueError(f"expected {self.n_agents} agent values, got {q.shape[-1]}")
        return qmix_mix(q, *self.weights(states))


def qplex_q(v: float, advantages, action: int) -> float:
    """Single-agent dueling form: v + a[action] - mean(a)."""
    a = np.asarray(advantages, dtype=np.float64)
    if a.size == 0:
        raise ValueError("empty action set")
    return float(v + a[action] - a.mean())


class QPLEXMixer(Module):
    """Q_tot = V(s) + Σ_i λ_i(s) (Q_i(a_i) - mean_a Q_i(a)).

    λ_i(s) = Σ_k |h_k(s)|_i over ``num_kernel`` two-layer hypernetworks, so
    the advantage weights are non-negative and action independent.
    V(s) = Σ_i |w_i(s)| max_a Q_i(a) + b(s).
    """

    def __init__(self, n_agents: int, state_dim: int, rng: np.random.Generator,
                 adv_hypernet_embed: int = 64, num_kernel: int = 4, embed_dim: int = 32):
        self.n_agents, self.state_dim = n_agents, state_dim
        self.kernels = [MLP([state_dim, adv_hypernet_embed, n_agents], rng) for _ in range(num_kernel)]
        self.hyper_w_v = MLP([state_dim, embed_dim, n_agents], rng)
        self.hyper_b_v = MLP([state_dim, embed_dim, 1], rng)

    def lambdas(self, states) -> Tensor:
        s = as_tensor(states)
        if s.shape[-1] != self.state_dim:
            raise ValueError(f"state dim {s.shape[-1]} != {self.state_dim}")
        lam = self.kernels[0](s).abs()
        for k in self.kernels[1:]:
            lam = lam + k(s).abs()
        return lam

    def value(self, all_qs, states) -> Tensor:
        s = as_tensor(states)
        w = self.hyper_w_v(s).abs()
        return (w * as_tensor(all_qs).max(axis=-1)).sum(axis=-1) + self.hyper_b_v(s).reshape(-1)

    def forward(self, agent_qs, states, all_qs=None, **_) -> Tensor:
        if all_qs is None:
            raise ValueError("QPLEX needs every action value (all_qs)")
        q = as_tensor(agent_qs)
        allq = as_tensor(all_qs)
        adv = q - allq.mean(axis=-1)
        return self.value(allq, states) + (self.lambdas(states) * adv).sum(axis=-1)


class QattenMixer(Module):
    """Multi-head attention over agents.

    Per head h: λ_{h,i} = softmax_i(query_h(s) · key_h(f_i) / sqrt(d)).
    α_i = Σ_h w_h(s) λ_{h,i} with w_h = |MLP(s)|_h, and Q_tot = Σ_i α_i Q_i.
    """

    def __init__(self, n_agents: int, state_dim: int, feat_dim: int, rng: np.random.Generator,
                 n_heads: int = 4, query_embed=(64, 32), key_embed: int = 32,
                 head_hypernet: int = 64):
        if query_embed[-1] != key_embed:
            raise ValueError("query and key embeddings must have the same width")
        self.n_agents, self.state_dim, self.feat_dim = n_agents, state_dim, feat_dim
        self.n_heads, self.key_dim = n_heads, key_embed
        self.queries = [MLP([state_dim, *query_embed], rng) for _ in range(n_heads)]
        self.keys = [Linear(feat_dim, key_embed, rng, bias=False) for _ in range(n_heads)]
        self.head_w = MLP([state_dim, head_hypernet, n_heads], rng)

    def attention(self, states, agent_feats) -> tuple[list[Tensor], Tensor]:
        s = as_tensor(states)
        f = as_tensor(agent_feats)
        if s.shape[-1] != self.state_dim or f.shape[-1] != self.feat_dim:
            raise ValueError("state or agent-feature dimension mismatch")
        B, n, _ = f.shape
        scale = 1.0 / np.sqrt(self.key_dim)
        heads = []
        for qnet, knet in zip(self.queries, self.keys):
            qv = qnet(s).reshape(B, 1, self.key_dim)
            kv = linear(f, knet.w)                                # (B, n, d)
            logits = (qv @ kv.transpose(0, 2, 1)).reshape(B, n) * scale
            heads.append(logits.softmax(axis=-1))
        return heads, self.head_w(s).abs()

    def alphas(self, states, agent_feats) -> Tensor:
        heads, w = self.attention(states, agent_feats)
        alpha = heads[0] * w[:, 0:1]
        for h in range(1, self.n_heads):
            alpha = alpha + heads[h] * w[:, h:h + 1]
        return alpha

    def forward(self, agent_qs, states, agent_feats=None, **_) -> Tensor:
        if agent_feats is None:
            raise ValueError("QATTEN needs per-agent features")
        return (self.alphas(states, agent_feats) * as_tensor(agent_qs)).sum(axis=-1)


def make_mixer(method: str, n_agents: int, state_dim: int, obs_dim: int,
               rng: np.random.Generator, cfg=None) -> Module:
    embed = getattr(cfg, "mixing_embed_dim", 32)
    hyper = getattr(cfg, "hypernet_embed_dim", 64)
    if method == "vdn":
        return VDNMixer()
    if method == "qmix":
        return QMixer(n_agents, state_dim, rng, embed, hyper)
    if method == "qplex":
        return QPLEXMixer(n_agents, state_dim, rng,
                          getattr(cfg, "qplex_adv_hypernet_embed", 64),
                          getattr(cfg, "qplex_num_kernel", 4), embed)
    if method == "qatten":
        return QattenMixer(n_agents, state_dim, obs_dim, rng,
                           getattr(cfg, "qatten_heads", 4),
                           tuple(getattr(cfg, "qatten_query_embed", (64, 32))),
                           getattr(cfg, "qatten_key_embed", 32), hyper)
    raise ValueError(f"unknown value method {method!r}")
