"""Value-decomposition and clipped-policy-gradient learners plus the training loop."""

from __future__ import annotations

import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from ..env import N_ACTIONS, MiniHoKEnv
from ..scenario import ScenarioConfig, builtin_mode, scenario_from_dict
from .autograd import Tensor, no_grad, stack
from .buffer import Batch, EpisodeBuffer, EpisodeRecorder, concat_batches
from .mixers import make_mixer
from .nn import MLP, Adam, RNNAgent, build_inputs, clip_grad_norm, hard_update, input_dim
from .ppo import (categorical_entropy, happo_agent_loss, happo_update, mappo_clip_loss,
                  masked_log_softmax, value_loss)
from .returns import ValueNorm, epsilon_schedule, gae, masked_argmax, select_actions_eps_greedy, td_lambda_targets

VALUE_METHODS = ("vdn", "qmix", "qplex", "qatten")
POLICY_METHODS = ("mappo", "happo")
METHODS = VALUE_METHODS + POLICY_METHODS
CHECKPOINT_FORMAT = "minihok.checkpoint/1"


class DivergenceError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    # exploration and replay (value methods)
    eps_start: float = 1.0
    eps_finish: float = 0.05
    eps_anneal_steps: int = 100_000
    buffer_size: int = 5000
    batch_size: int = 64
    target_update_interval: int = 200
    learning_rate: float = 0.001
    td_lambda: float = 0.6
    mixing_embed_dim: int = 32
    hypernet_embed_dim: int = 64
    rnn_hidden_dim: int = 64
    agent_id: bool = True
    last_action: bool = True
    train_every: int = 1
    # shared
    gamma: float = 0.99
    grad_clip: float = 10.0
    # policy methods
    gae_lambda: float = 0.95
    clip_param: float = 0.2
    ppo_epochs: int = 5
    entropy_coef: float = 0.01
    actor_lr: float = 5e-4
    critic_lr: float = 5e-4
    adam_eps: float = 1e-5
    hidden_sizes: tuple = (128, 128)
    huber_delta: float = 10.0
    use_valuenorm: bool = True
    episodes_per_update: int = 8
    # mixer shapes
    qatten_heads: int = 4
    qatten_query_embed: tuple = (64, 32)
    qatten_key_embed: int = 32
    qplex_adv_hypernet_layers: int = 2
    qplex_adv_hypernet_embed: int = 64
    qplex_num_kernel: int = 4
    # bookkeeping
    initial_eval_episodes: int = 10

    def __post_init__(self):
        positive = ("eps_anneal_steps", "buffer_size", "batch_size", "target_update_interval",
                    "learning_rate", "mixing_embed_dim", "hypernet_embed_dim", "rnn_hidden_dim",
                    "train_every", "grad_clip", "ppo_epochs", "actor_lr", "critic_lr",
                    "episodes_per_update", "qatten_heads", "qatten_key_embed",
                    "qplex_adv_hypernet_embed", "qplex_num_kernel", "huber_delta")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.eps_finish <= self.eps_start <= 1:
            raise ValueError("need 0 <= eps_finish <= eps_start <= 1")
        if not 0 < self.clip_param < 1:
            raise ValueError("clip_param must lie in (0, 1)")
        for name in ("gamma", "td_lambda", "gae_lambda"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.qplex_adv_hypernet_layers != 2:
            raise ValueError("only two-layer advantage hypernetworks are implemented")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown TrainConfig fields: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})

    def replace(self, **changes) -> "TrainConfig":
        return replace(self, **changes)


def desk_config(**overrides) -> TrainConfig:
    """Settings sized for a few thousand episodes on one CPU core."""
    base = dict(eps_anneal_steps=20_000, buffer_size=1000, batch_size=16,
                target_update_interval=100, train_every=4, episodes_per_update=8)
    base.update(overrides)
    return TrainConfig(**base)


# ---------------------------------------------------------------------------
# value-decomposition learner
# ---------------------------------------------------------------------------

class ValueLearner:
    """Shared recurrent utility network + mixer, trained on λ-returns."""

    def __init__(self, method: str, n_agents: int, obs_dim: int, state_dim: int,
                 cfg: TrainConfig, rng: np.random.Generator):
        if method not in VALUE_METHODS:
            raise ValueError(f"unknown value method {method!r}")
        self.method, self.cfg = method, cfg
        self.n_agents, self.obs_dim, self.state_dim = n_agents, obs_dim, state_dim
        d_in = input_dim(obs_dim, n_agents, N_ACTIONS, cfg.agent_id, cfg.last_action)
        self.agent = RNNAgent(d_in, N_ACTIONS, rng, cfg.rnn_hidden_dim)
        self.mixer = make_mixer(method, n_agents, state_dim, obs_dim, rng, cfg)
        self.target_agent = RNNAgent(d_in, N_ACTIONS, rng, cfg.rnn_hidden_dim).freeze()
        self.target_mixer = make_mixer(method, n_agents, state_dim, obs_dim, rng, cfg).freeze()
        self.sync_targets()
        self.params = self.agent.parameters() + self.mixer.parameters()
        self.opt = Adam(self.params, lr=cfg.learning_rate)
        self.updates = 0

    def sync_targets(self) -> None:
        hard_update(self.target_agent, self.agent)
        hard_update(self.target_mixer, self.mixer)

    # -- acting ----------------------------------------------------------------

    def init_hidden(self) -> np.ndarray:
        return np.zeros((self.n_agents, self.cfg.rnn_hidden_dim))

    def agent_inputs(self, obs: np.ndarray, last_actions: np.ndarray) -> np.ndarray:
        return build_inputs(obs, last_actions, N_ACTIONS, self.cfg.agent_id, self.cfg.last_action)

    def q_values(self, obs, last_actions, hidden) -> tuple[np.ndarray, np.ndarray]:
        with no_grad():
            q, h = self.agent(self.agent_inputs(np.asarray(obs), np.asarray(last_actions)),
                              Tensor(hidden))
        return q.data, h.data

    # -- training ----------------------------------------------------------------

    def _unroll(self, net: RNNAgent, x: np.ndarray) -> Tensor:
        B, T1, n, D = x.shape
        h = net.init_hidden(B * n)
        outs = []
        for t in range(T1):
            q, h = net(x[:, t].reshape(B * n, D), h)
            outs.append(q)
        return stack(outs, axis=1).reshape(B, n, T1, N_ACTIONS).transpose(0, 2, 1, 3)

    def _mix(self, mixer, chosen: Tensor, all_q: Tensor, states: np.ndarray, obs: np.ndarray) -> Tensor:
        B, T, n = chosen.shape
        return mixer(chosen.reshape(B * T, n), states.reshape(B * T, -1),
                     all_qs=all_q.reshape(B * T, n, N_ACTIONS),
                     agent_feats=obs.reshape(B * T, n, -1)).reshape(B, T)

    def loss(self, batch: Batch) -> Tensor:
        cfg = self.cfg
        B, T = batch.rewards.shape
        last = np.concatenate([np.full((B, 1, self.n_agents), -1), batch.actions], axis=1)
        x = self.agent_inputs(batch.obs, last)
        q = self._unroll(self.agent, x)                          # (B, T+1, n, A)
        q_now = q[:, :T]
        chosen = q_now.take(batch.actions[..., None], axis=-1)   # (B, T, n)
        with no_grad():
            tq = self._unroll(self.target_agent, x).data[:, 1:]
            avail = batch.avail[:, 1:].astype(bool)
            avail = np.where(avail.any(axis=-1, keepdims=True), avail, True)
            best = masked_argmax(q.data[:, 1:], avail)           # double-Q action choice
            t_chosen = np.take_along_axis(tq, best[..., None], axis=-1)[..., 0]
            t_tot = self._mix(self.target_mixer, Tensor(t_chosen), Tensor(tq),
                              batch.state[:, 1:], batch.obs[:, 1:]).data
        targets = td_lambda_targets(batch.rewards, t_tot, batch.terminated, cfg.gamma,
                                    cfg.td_lambda, mask=batch.filled)
        q_tot = self._mix(self.mixer, chosen, q_now, batch.state[:, :T], batch.obs[:, :T])
        err = (q_tot - targets) * batch.filled
        return (err * err).sum() * (1.0 / batch.filled.sum())

    def update(self, batch: Batch) -> float:
        self.opt.zero_grad()
        loss = self.loss(batch)
        if not math.isfinite(loss.item()):
            raise DivergenceError(f"{self.method}: non-finite loss after {self.updates} updates")
        loss.backward()
        clip_grad_norm(self.params, self.cfg.grad_clip)
        self.opt.step()
        self.updates += 1
        if self.updates % self.cfg.target_update_interval == 0:
            self.sync_targets()
        return loss.item()

    def state_dict(self) -> dict:
        out = {f"agent.{k}": v for k, v in self.agent.state_dict().items()}
        out.update({f"mixer.{k}": v for k, v in self.mixer.state_dict().items()})
        return out

    def load_state_dict(self, state: dict) -> None:
        self.agent.load_state_dict({k[6:]: v for k, v in state.items() if k.startswith("agent.")})
        self.mixer.load_state_dict({k[6:]: v for k, v in state.items() if k.startswith("mixer.")})
        self.sync_targets()


# ---------------------------------------------------------------------------
# clipped policy-gradient learner (MAPPO shares one actor, HAPPO has one per agent)
# ---------------------------------------------------------------------------

class PolicyLearner:
    def __init__(self, method: str, n_agents: int, obs_dim: int, state_dim: int,
                 cfg: TrainConfig, rng: np.random.Generator):
        if method not in POLICY_METHODS:
            raise ValueError(f"unknown policy method {method!r}")
        self.method, self.cfg = method, cfg
        self.n_agents, self.obs_dim, self.state_dim = n_agents, obs_dim, state_dim
        hs = list(cfg.hidden_sizes)
        if method == "mappo":
            self.actors = [MLP([obs_dim + n_agents, *hs, N_ACTIONS], rng)]
        else:
            self.actors = [MLP([obs_dim, *hs, N_ACTIONS], rng) for _ in range(n_agents)]
        self.critic = MLP([state_dim, *hs, 1], rng)
        self.actor_opts = [Adam(a.parameters(), lr=cfg.actor_lr, eps=cfg.adam_eps) for a in self.actors]
        self.critic_opt = Adam(self.critic.parameters(), lr=cfg.critic_lr, eps=cfg.adam_eps)
        self.value_norm = ValueNorm() if cfg.use_valuenorm else None
        self.updates = 0

    def _actor_input(self, obs: np.ndarray) -> np.ndarray:
        if self.method == "mappo":
            ids = np.broadcast_to(np.eye(self.n_agents), obs.shape[:-1] + (self.n_agents,))
            return np.concatenate([obs, ids], axis=-1)
        return obs

    def log_probs(self, agent: int | None, obs: np.ndarray, avail: np.ndarray) -> Tensor:
        """Masked log-probabilities; ``agent`` None means every agent (last-but-one axis)."""
        x = self._actor_input(obs)
        if self.method == "mappo":
            return masked_log_softmax(self.actors[0](x), avail)
        if agent is None:
            outs = [masked_log_softmax(self.actors[i](x[..., i, :]), avail[..., i, :])
                    for i in range(self.n_agents)]
            return stack(outs, axis=-2)
        return masked_log_softmax(self.actors[agent](x[..., agent, :]), avail[..., agent, :])

    def act(self, obs, avail, rng: np.random.Generator, greedy: bool = False):
        with no_grad():
            logp = self.log_probs(None, np.asarray(obs), np.asarray(avail)).data
        if greedy:
            return masked_argmax(logp, avail), logp
        p = np.exp(logp)
        cdf = np.cumsum(p, axis=-1)
        u = rng.random(self.n_agents)[:, None] * cdf[:, -1:]
        acts = (cdf <= u).sum(axis=-1)
        acts = np.minimum(acts, N_ACTIONS - 1)
        # guard against landing on a zero-probability entry through rounding
        bad = np.asarray(avail)[np.arange(self.n_agents), acts] == 0
        if bad.any():
            acts[bad] = masked_argmax(logp[bad], np.asarray(avail)[bad])
        return acts, logp

    def values(self, states: np.ndarray) -> np.ndarray:
        with no_grad():
            v = self.critic(states).data[..., 0]
        return self.value_norm.denormalize(v) if self.value_norm else v

    def update(self, batch: Batch, rng: np.random.Generator) -> float:
        cfg = self.cfg
        B, T = batch.rewards.shape
        mask = batch.filled
        v = self.values(batch.state)                                   # (B, T+1)
        adv = gae(batch.rewards, v, batch.terminated, cfg.gamma, cfg.gae_lambda, mask=mask)
        returns = adv + v[:, :T]
        live = mask > 0
        a_mean, a_std = adv[live].mean(), adv[live].std()
        adv_n = (adv - a_mean) / (a_std + 1e-5) * mask
        if self.value_norm is not None:
            self.value_norm.update(returns[live])
            ret_t = self.value_norm.normalize(returns)
        else:
            ret_t = returns
        obs, avail = batch.obs[:, :T], batch.avail[:, :T]
        acts = batch.actions[..., None]
        with no_grad():
            old_logp = np.take_along_axis(self.log_probs(None, obs, avail).data, acts, axis=-1)[..., 0]
        agent_mask = np.broadcast_to(mask[..., None], acts.shape[:-1])
        total = 0.0
        if self.method == "mappo":
            adv_agents = np.broadcast_to(adv_n[..., None], agent_mask.shape)
            for _ in range(cfg.ppo_epochs):
                logp_all = self.log_probs(None, obs, avail)
                logp = logp_all.take(acts, axis=-1)
                ratio = (logp - old_logp).exp()
                loss = mappo_clip_loss(ratio, adv_agents, cfg.clip_param, agent_mask,
                                       categorical_entropy(logp_all), cfg.entropy_coef)
                self._step(self.actors[0], self.actor_opts[0], loss)
                total += loss.item()
        else:
            order = rng.permutation(self.n_agents)

            def update_agent(i: int, factor: np.ndarray) -> np.ndarray:
                nonlocal total
                for _ in range(cfg.ppo_epochs):
                    logp_all = self.log_probs(i, obs, avail)
                    logp = logp_all.take(acts[..., i, :], axis=-1)
                    ratio = (logp - old_logp[..., i]).exp()
                    loss = happo_agent_loss(ratio, adv_n, factor, cfg.clip_param, mask,
                                            categorical_entropy(logp_all), cfg.entropy_coef)
                    self._step(self.actors[i], self.actor_opts[i], loss)
                    total += loss.item()
                with no_grad():
                    new = self.log_probs(i, obs, avail).take(acts[..., i, :], axis=-1).data
                return np.where(live, np.exp(new - old_logp[..., i]), 1.0)

            happo_update(order, update_agent, np.ones((B, T)))
        for _ in range(cfg.ppo_epochs):
            pred = self.critic(batch.state[:, :T]).reshape(B, T)
            closs = value_loss(pred, ret_t, mask, cfg.huber_delta)
            self._step(self.critic, self.critic_opt, closs)
            total += closs.item()
        self.updates += 1
        return total

    def _step(self, net, opt: Adam, loss: Tensor) -> None:
        if not math.isfinite(loss.item()):
            raise DivergenceError(f"{self.method}: non-finite loss after {self.updates} updates")
        opt.zero_grad()
        loss.backward()
        clip_grad_norm(opt.params, self.cfg.grad_clip)
        opt.step()

    def state_dict(self) -> dict:
        out = {}
        for i, a in enumerate(self.actors):
            out.update({f"actor{i}.{k}": v for k, v in a.state_dict().items()})
        out.update({f"critic.{k}": v for k, v in self.critic.state_dict().items()})
        if self.value_norm is not None:
            out.update({f"valuenorm.{k}": np.array(v) for k, v in self.value_norm.state_dict().items()})
        return out

    def load_state_dict(self, state: dict) -> None:
        for i, a in enumerate(self.actors):
            p = f"actor{i}."
            a.load_state_dict({k[len(p):]: v for k, v in state.items() if k.startswith(p)})
        self.critic.load_state_dict({k[7:]: v for k, v in state.items() if k.startswith("critic.")})
        if self.value_norm is not None:
            self.value_norm.load_state_dict(
                {k[10:]: float(v) for k, v in state.items() if k.startswith("valuenorm.")})


def make_learner(method: str, env: MiniHoKEnv, cfg: TrainConfig, rng: np.random.Generator):
    info = env.get_env_info()
    args = (method, info["n_agents"], info["obs_shape"], info["state_shape"], cfg, rng)
    if method in VALUE_METHODS:
        return ValueLearner(*args)
    if method in POLICY_METHODS:
        return PolicyLearner(*args)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


# ---------------------------------------------------------------------------
# rollouts and the training loop
# ---------------------------------------------------------------------------

def rollout(env: MiniHoKEnv, learner, rng: np.random.Generator, seed: int,
            epsilon: float = 0.0, greedy: bool = False) -> tuple[Batch, dict]:
    """Play one episode; value learners act ε-greedily, policy learners sample."""
    obs, state = env.reset(seed=seed)
    rec = EpisodeRecorder()
    n = env.n_agents
    value = isinstance(learner, ValueLearner)
    hidden = learner.init_hidden() if value else None
    last = np.full(n, -1)
    reward_sum = 0.0
    while True:
        avail = env.get_avail_actions()
        obs_arr = np.asarray(obs)
        rec.add_frame(obs_arr, state, avail)
        if value:
            q, hidden = learner.q_values(obs_arr, last, hidden)
            acts = select_actions_eps_greedy(q, avail, epsilon, rng)
        else:
            acts, _ = learner.act(obs_arr, avail, rng, greedy=greedy)
        res = env.step(acts.tolist())
        rec.add_step(acts, res.reward, res.terminated)
        reward_sum += res.reward
        last = acts
        obs, state = env.get_obs(), env.get_state()
        if res.done:
            break
    rec.add_frame(np.asarray(obs), state, env.get_avail_actions())
    return rec.finish(), {"damage": int(env.world.cumulative_dragon_damage),
                          "steps": env.world.step_index, "reward": reward_sum}


@dataclass
class TrainResult:
    method: str
    seed: int
    config: TrainConfig
    scenario: ScenarioConfig
    learner: object
    curve: list[dict] = field(default_factory=list)
    initial_mean_damage: float = 0.0
    wall_seconds: float = 0.0

    def final_mean_damage(self, last: int = 100) -> float:
        if not self.curve:
            return self.initial_mean_damage
        return float(np.mean([r["damage"] for r in self.curve[-last:]]))


def train(scenario: ScenarioConfig | str, method: str, cfg: TrainConfig | None = None,
          n_episodes: int = 2000, seed: int = 0,
          callback: Callable[[dict], None] | None = None) -> TrainResult:
    """Train ``method`` for ``n_episodes`` episodes on one seed.

    Episode k runs on env seed ``seed * 1_000_003 + k``; network init and
    exploration draw from generators derived from ``seed`` only, so two calls
    with the same arguments produce identical curves.
    """
    if isinstance(scenario, str):
        scenario = builtin_mode(scenario)
    cfg = cfg or TrainConfig()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    env = MiniHoKEnv(scenario)
    init_rng = np.random.default_rng([seed, 0])
    act_rng = np.random.default_rng([seed, 1])
    learner = make_learner(method, env, cfg, init_rng)
    result = TrainResult(method, seed, cfg, scenario, learner)
    t0 = time.perf_counter()

    eval_rng = np.random.default_rng([seed, 2])
    init_dmg = []
    for k in range(cfg.initial_eval_episodes):
        _, stats = rollout(env, learner, eval_rng, seed=10**9 + k, epsilon=cfg.eps_start)
        init_dmg.append(stats["damage"])
    result.initial_mean_damage = float(np.mean(init_dmg)) if init_dmg else 0.0

    env_steps = 0
    pending: list[Batch] = []
    buffer = None
    if method in VALUE_METHODS:
        info = env.get_env_info()
        buffer = EpisodeBuffer(cfg.buffer_size, scenario.episode_limit, info["n_agents"],
                               info["obs_shape"], info["state_shape"], N_ACTIONS)
    loss = float("nan")
    for ep in range(n_episodes):
        eps = epsilon_schedule(env_steps, cfg.eps_start, cfg.eps_finish, cfg.eps_anneal_steps)
        batch, stats = rollout(env, learner, act_rng, seed=seed * 1_000_003 + ep, epsilon=eps)
        env_steps += stats["steps"]
        if buffer is not None:
            buffer.insert(batch)
            if (ep + 1) % cfg.train_every == 0 and buffer.can_sample(cfg.batch_size):
                loss = learner.update(buffer.sample(cfg.batch_size, act_rng))
        else:
            pending.append(batch)
            if len(pending) == cfg.episodes_per_update:
                loss = learner.update(concat_batches(pending), act_rng)
                pending = []
        row = {"episode": ep + 1, "env_steps": env_steps, "damage": stats["damage"],
               "reward": stats["reward"], "loss": loss, "epsilon": eps if buffer is not None else None}
        result.curve.append(row)
        if callback is not None:
            callback(row)
    result.wall_seconds = time.perf_counter() - t0
    return result


# ---------------------------------------------------------------------------
# checkpoints: one .npz with the arrays plus a JSON metadata entry
# ---------------------------------------------------------------------------

def save_checkpoint(path: str | Path, learner, scenario: ScenarioConfig, cfg: TrainConfig,
                    extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"format": CHECKPOINT_FORMAT, "method": learner.method,
            "n_agents": learner.n_agents, "obs_dim": learner.obs_dim,
            "state_dim": learner.state_dim, "config": cfg.to_dict(),
            "scenario": scenario.to_dict(), "updates": learner.updates}
    meta.update(extra or {})
    arrays = learner.state_dict()
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
             **arrays)
    path.write_bytes(buf.getvalue())
    return path


def load_checkpoint(path: str | Path):
    """Returns (learner, scenario, metadata)."""
    with np.load(Path(path), allow_pickle=False) as data:
        if "__meta__" not in data:
            raise ValueError(f"{path}: not a checkpoint (no metadata)")
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: unsupported checkpoint format {meta.get('format')!r}")
        arrays = {k: data[k] for k in data.files if k != "__meta__"}
    cfg = TrainConfig.from_dict(meta["config"])
    scenario = scenario_from_dict(meta["scenario"])
    env = MiniHoKEnv(scenario)
    learner = make_learner(meta["method"], env, cfg, np.random.default_rng(0))
    learner.load_state_dict(arrays)
    learner.updates = meta.get("updates", 0)
    return learner, scenario, meta


def checkpoint_policy(learner, rng: np.random.Generator | None = None):
    """Greedy joint policy ``(obs, avail) -> actions`` from a trained learner.

    Value learners keep their recurrent state between calls; call
    ``policy.reset()`` at each episode start.
    """
    rng = rng or np.random.default_rng(0)
    state = {"hidden": None, "last": None}

    def reset():
        if isinstance(learner, ValueLearner):
            state["hidden"] = learner.init_hidden()
            state["last"] = np.full(learner.n_agents, -1)

    def policy(obs, avail):
        avail = np.asarray(avail)
        if isinstance(learner, ValueLearner):
            if state["hidden"] is None:
                reset()
            q, state["hidden"] = learner.q_values(np.asarray(obs), state["last"], state["hidden"])
            acts = masked_argmax(q, avail)
            state["last"] = acts
            return acts.tolist()
        acts, _ = learner.act(np.asarray(obs), avail, rng, greedy=True)
        return acts.tolist()

    policy.reset = reset
    return policy
