"""Scripted baselines and per-agent contribution analytics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .engine import DIRECTIONS, POS_DELTA
from .env import ATTACK, MOVE_ACTIONS, N_ACTIONS, SKILL1, SUMMONER, MiniHoKEnv
from .scenario import MAP_HALF_EXTENT

_MOVE_OFFSETS = [(a, DIRECTIONS[name]) for a, name in
                 zip(MOVE_ACTIONS, ("up", "down", "left", "right",
                                    "left_up", "right_up", "right_down", "left_down"))]


def _approach_action(obs_row: np.ndarray, step: float) -> int:
    dx = obs_row[3] - obs_row[0]
    dz = obs_row[4] - obs_row[1]
    best_a, best_d = MOVE_ACTIONS[0], None
    for a, (mx, mz) in sorted(_MOVE_OFFSETS):
        d = max(abs(dx - mx * step), abs(dz - mz * step))
        if best_d is None or d < best_d - 1e-12:
            best_a, best_d = a, d
    return best_a


def rule_policy(obs: Sequence[np.ndarray], avail: np.ndarray, normalized: bool = True) -> list[int]:
    """Approach-then-focus-fire baseline.

    Out of range: the move that most reduces Chebyshev distance to the dragon.
    In range: highest ready skill, then summoner, then normal attack.
    """
    step = POS_DELTA / MAP_HALF_EXTENT if normalized else float(POS_DELTA)
    actions = []
    for row, mask in zip(obs, avail):
        if mask[ATTACK]:
            for a in (SKILL1 + 2, SKILL1 + 1, SKILL1, SUMMONER):
                if mask[a]:
                    actions.append(a)
                    break
            else:
                actions.append(ATTACK)
        elif row[2] <= 0 or row[5] <= 0:
            actions.append(int(np.flatnonzero(mask)[0]))
        else:
            actions.append(_approach_action(np.asarray(row), step))
    return actions


def random_policy(mask: np.ndarray, rng: np.random.Generator) -> int:
    """Uniform choice over the set bits of one agent's mask."""
    legal = np.flatnonzero(mask)
    if legal.size == 0:
        raise ValueError("all-zero availability mask")
    return int(legal[rng.integers(legal.size)])


def random_joint_policy(avail: np.ndarray, rng: np.random.Generator) -> list[int]:
    return [random_policy(m, rng) for m in avail]


def run_episode(env: MiniHoKEnv, policy: str = "rule", seed: int | None = None,
                rng: np.random.Generator | None = None, recorder=None) -> dict:
    """Roll one episode with a scripted policy; returns a summary dict."""
    obs, _ = env.reset(seed=seed)
    if recorder is not None:
        recorder.begin(env)
    if rng is None:
        rng = np.random.default_rng([env.seed, 1])
    normalized = env.scenario.normalize_obs
    total_reward = 0.0
    per_agent = np.zeros(env.n_agents, dtype=np.int64)
    res = None
    while True:
        avail = env.get_avail_actions()
        if policy == "rule":
            actions = rule_policy(obs, avail, normalized)
        elif policy == "random":
            actions = random_joint_policy(avail, rng)
        elif callable(policy):
            actions = policy(obs, avail)
        else:
            raise ValueError(f"unknown policy {policy!r}")
        res = env.step(actions)
        if recorder is not None:
            recorder.record(actions, res)
        total_reward += res.reward
        per_agent += res.info["agent_damage"]
        obs = env.get_obs()
        if res.done:
            break
    if recorder is not None:
        recorder.end()
    return {
        "seed": env.seed,
        "steps": env.world.step_index,
        "total_damage": int(env.world.cumulative_dragon_damage),
        "reward_sum": total_reward,
        "dragon_hp": int(env.world.dragon.hp),
        "agent_damage": per_agent.tolist(),
        "outcome": ("dragon_dead" if res.info["dragon_dead"] else
                    "team_wiped" if res.info["team_wiped"] else "time_limit"),
    }


# ---------------------------------------------------------------------------
# contribution analytics
# ---------------------------------------------------------------------------

@dataclass
class AgentContribution:
    agent: int
    unit_id: int
    damage: int
    share: float
    idle_steps: int
    steps: int
    lazy: bool


def damage_breakdown(replay) -> list[AgentContribution]:
    """Per-agent damage totals, shares and idle-step counts from a replay.

    A step is idle for an agent when it dealt no damage and did not move
    closer to the dragon. An agent that dealt no damage at all is flagged lazy.
    """
    header = replay.header
    hero_ids = header["scenario"]["heroes"]
    n = len(hero_ids)
    damage = np.zeros(n, dtype=np.int64)
    idle = np.zeros(n, dtype=np.int64)
    prev = header["initial"]
    for rec in replay.records:
        step_dmg = np.zeros(n, dtype=np.int64)
        for ev in rec["events"]:
            if ev["target"] == rec["dragon"]["id"] and ev["agent"] is not None:
                step_dmg[ev["agent"]] += ev["amount"]
        damage += step_dmg
        for i in range(n):
            if step_dmg[i] > 0:
                continue
            before = _dist(prev["heroes"][i]["pos"], prev["dragon"]["pos"])
            after = _dist(rec["heroes"][i]["pos"], rec["dragon"]["pos"])
            moved_closer = rec["heroes"][i]["pos"] != prev["heroes"][i]["pos"] and after < before
            if not moved_closer:
                idle[i] += 1
        prev = rec
    total = int(damage.sum())
    steps = len(replay.records)
    return [
        AgentContribution(
            agent=i, unit_id=int(hero_ids[i]["unit_id"]), damage=int(damage[i]),
            share=(float(damage[i]) / total) if total else (1.0 / n if n == 1 else 0.0),
            idle_steps=int(idle[i]), steps=steps, lazy=bool(damage[i] == 0))
        for i in range(n)
    ]


def _dist(a: Iterable[int], b: Iterable[int]) -> float:
    a, b = list(a), list(b)
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))
