"""Layers, recurrent agent network, Adam and gradient clipping."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .autograd import Tensor, as_tensor, gru_cell, linear, parameter


class Module:
    """Parameters are discovered from attributes, in definition order."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, val in vars(self).items():
            if isinstance(val, Tensor):
                yield prefix + name, val
            elif isinstance(val, Module):
                yield from val.named_parameters(f"{prefix}{name}.")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing, extra = set(own) - set(state), set(state) - set(own)
            raise KeyError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for k, p in own.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.shape:
                raise ValueError(f"{k}: shape {arr.shape} != {p.shape}")
            p.data = arr.copy()

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def freeze(self) -> "Module":
        for p in self.parameters():
            p.requires_grad = False
        return self

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def _uniform(rng: np.random.Generator, shape, bound: float) -> Tensor:
    return parameter(rng.uniform(-bound, bound, size=shape))


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, bias: bool = True):
        bound = 1.0 / np.sqrt(n_in)
        self.w = _uniform(rng, (n_in, n_out), bound)
        self.b = _uniform(rng, (n_out,), bound) if bias else None

    def forward(self, x) -> Tensor:
        return linear(as_tensor(x), self.w, self.b)


_ACT = {"relu": Tensor.relu, "elu": Tensor.elu, "tanh": Tensor.tanh, None: None}


class MLP(Module):
    def __init__(self, sizes, rng: np.random.Generator, activation: str = "relu",
                 out_activation: str | None = None):
        self.layers = [Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self.act = activation
        self.out_act = out_activation

    def forward(self, x) -> Tensor:
        h = as_tensor(x)
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            h = layer(h)
            fn = _ACT[self.out_act if i == last else self.act]
            if fn is not None:
                h = fn(h)
        return h


class GRUCell(Module):
    def __init__(self, n_in: int, hidden: int, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(hidden)
        self.hidden = hidden
        self.w_ih = _uniform(rng, (n_in, 3 * hidden), bound)
        self.w_hh = _uniform(rng, (hidden, 3 * hidden), bound)
        self.b_ih = _uniform(rng, (3 * hidden,), bound)
        self.b_hh = _uniform(rng, (3 * hidden,), bound)

    def forward(self, x, h) -> Tensor:
        return gru_cell(x, h, self.w_ih, self.w_hh, self.b_ih, self.b_hh)


class RNNAgent(Module):
    """fc -> ReLU -> GRU -> fc; one shared network for all agents.

    Input is the observation, optionally augmented with the previous action
    one-hot and the agent-id one-hot.
    """

    def __init__(self, input_dim: int, n_actions: int, rng: np.random.Generator, hidden: int = 64):
        self.hidden = hidden
        self.fc1 = Linear(input_dim, hidden, rng)
        self.rnn = GRUCell(hidden, hidden, rng)
        self.fc2 = Linear(hidden, n_actions, rng)

    def init_hidden(self, batch: int) -> Tensor:
        return Tensor(np.zeros((batch, self.hidden)))

    def forward(self, x, h) -> tuple[Tensor, Tensor]:
        z = self.fc1(x).relu()
        h2 = self.rnn(z, h)
        return self.fc2(h2), h2


def build_inputs(obs: np.ndarray, last_actions: np.ndarray, n_actions: int,
                 agent_ids: bool = True, last_action: bool = True) -> np.ndarray:
    """Stack per-agent inputs: ``obs`` is (..., n, obs), ``last_actions`` (..., n) ints."""
    parts = [obs]
    n = obs.shape[-2]
    if last_action:
        parts.append(np.eye(n_actions)[last_actions] * (last_actions >= 0)[..., None])
    if agent_ids:
        parts.append(np.broadcast_to(np.eye(n), obs.shape[:-1] + (n,)))
    return np.concatenate(parts, axis=-1)


def input_dim(obs_size: int, n_agents: int, n_actions: int,
              agent_ids: bool = True, last_action: bool = True) -> int:
    return obs_size + (n_actions if last_action else 0) + (n_agents if agent_ids else 0)


class Adam:
    def __init__(self, params: list[Tensor], lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p.data = p.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_dict(self) -> dict:
        return {"t": self.t, "m": [a.copy() for a in self.m], "v": [a.copy() for a in self.v]}


def clip_grad_norm(params: list[Tensor], max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is at most ``max_norm``."""
    grads = [p.grad for p in params if p.grad is not None]
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if total > max_norm and total > 0:
        scale = max_norm / (total + 1e-6)
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return total


def hard_update(target: Module, source: Module) -> None:
    target.load_state_dict(source.state_dict())
