"""MARL-facing environment: reset/step lifecycle, observations, masks, reward."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .engine import (
    Command,
    DamageEvent,
    WorldState,
    bearing_degrees,
    in_attack_range,
    new_world,
    resolve_step,
    skill_ready,
)
from .scenario import MAP_HALF_EXTENT, ScenarioConfig, validate_scenario

N_ACTIONS = 13
OBS_SIZE = 6
REWARD_SCALE = 0.01

ACTION_NAMES = ("up", "down", "left", "right", "attack", "skill1", "skill2", "skill3",
                "summoner", "left_up", "right_up", "right_down", "left_down")
MOVE_ACTIONS = (0, 1, 2, 3, 9, 10, 11, 12)
ATTACK, SKILL1, SKILL2, SKILL3, SUMMONER = 4, 5, 6, 7, 8
MOVE_DIRECTION = {a: ACTION_NAMES[a] for a in MOVE_ACTIONS}


class EnvError(RuntimeError):
    pass


class IllegalActionError(EnvError, ValueError):
    pass


class EpisodeOverError(EnvError):
    pass


class NotResetError(EnvError):
    pass


@dataclass
class StepResult:
    reward: float
    terminated: bool
    truncated: bool
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


def availability_mask(world: WorldState) -> np.ndarray:
    """n x 13 binary mask of legal actions in ``world``.

    Movement is always legal (a no-op for dead heroes), so no row is ever
    all zero.
    """
    n = world.n_agents
    mask = np.zeros((n, N_ACTIONS), dtype=np.int8)
    mask[:, MOVE_ACTIONS] = 1
    dragon_alive = world.dragon.alive
    for i, h in enumerate(world.heroes):
        if not h.alive:
            continue
        if dragon_alive:
            if in_attack_range(world, i):
                mask[i, ATTACK] = 1
            for k in range(3):
                if skill_ready(world, i, k):
                    mask[i, SKILL1 + k] = 1
            if h.summoner_cooldown == 0:
                mask[i, SUMMONER] = 1
    return mask


def command_for(world: WorldState, agent: int, action: int) -> Command:
    if action in MOVE_DIRECTION:
        return Command("move", agent, direction=MOVE_DIRECTION[action])
    dragon = world.dragon
    if action == ATTACK:
        return Command("attack", agent, target=dragon.unit_id)
    if action == SUMMONER:
        return Command("summoner", agent)
    if SKILL1 <= action <= SKILL3:
        k = action - SKILL1
        stype = world.arena.heroes[agent].spec.skills[k].type
        pos = world.heroes[agent].pos
        if stype == "dir_skill":
            return Command("skill", agent, skill_index=k + 1, skill_type=stype,
                           angle=bearing_degrees(pos, dragon.pos))
        if stype == "pos_skill":
            return Command("skill", agent, skill_index=k + 1, skill_type=stype,
                           target_pos=tuple(dragon.pos))
        return Command("skill", agent, skill_index=k + 1, skill_type=stype, target=dragon.unit_id)
    raise IllegalActionError(f"action id {action} outside 0..{N_ACTIONS - 1}")


class MiniHoKEnv:
    """Heroes-vs-dragon environment with a pymarl-style interface.

    >>> env = MiniHoKEnv(builtin_mode("A"))
    >>> obs, state = env.reset(seed=7)
    >>> len(obs[0]), len(state)
    (6, 30)
    """

    n_actions = N_ACTIONS
    obs_size = OBS_SIZE

    def __init__(self, scenario: ScenarioConfig, seed: int = 0):
        validate_scenario(scenario)
        self.scenario = scenario
        self.n_agents = scenario.n_agents
        self.episode_limit = scenario.episode_limit
        self.base_seed = int(seed)
        self.world: WorldState | None = None
        self.seed: int | None = None
        self._episodes = 0
        self._over = False
        self._mask: np.ndarray | None = None

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed: int | None = None) -> tuple[list[np.ndarray], np.ndarray]:
        if seed is None:
            seed = self.base_seed
            if self.scenario.seed_policy == "per-episode":
                seed += self._episodes
        self.seed = int(seed)
        self.world = new_world(self.scenario, self.seed)
        self._episodes += 1
        self._over = False
        self._mask = None
        return self.get_obs(), self.get_state()

    def step(self, actions: Sequence[int]) -> StepResult:
        world = self._require_world()
        if self._over:
            raise EpisodeOverError("episode is over; call reset()")
        if len(actions) != self.n_agents:
            raise IllegalActionError(f"expected {self.n_agents} actions, got {len(actions)}")
        mask = self.get_avail_actions()
        commands = []
        for i, a in enumerate(actions):
            a = int(a)
            if not 0 <= a < N_ACTIONS:
                raise IllegalActionError(f"agent {i}: action id {a} outside 0..{N_ACTIONS - 1}")
            if not mask[i, a]:
                raise IllegalActionError(f"agent {i}: action {a} ({ACTION_NAMES[a]}) is masked out")
            commands.append(command_for(world, i, a))
        hp_before = world.dragon.hp
        _, events = resolve_step(world, commands)
        self._mask = None
        delta = hp_before - world.dragon.hp
        reward = REWARD_SCALE * delta
        dragon_dead = not world.dragon.alive
        team_wiped = not any(h.alive for h in world.heroes)
        terminated = dragon_dead or team_wiped
        truncated = not terminated and world.step_index >= self.episode_limit
        self._over = terminated or truncated
        per_agent = [0] * self.n_agents
        for ev in events:
            if ev.target == world.dragon.unit_id and ev.agent is not None:
                per_agent[ev.agent] += ev.amount
        info = {
            "step": world.step_index,
            "dragon_hp": world.dragon.hp,
            "damage": delta,
            "agent_damage": per_agent,
            "cumulative_damage": world.cumulative_dragon_damage,
            "dragon_dead": dragon_dead,
            "team_wiped": team_wiped,
            "episode_limit": truncated,
            "events": events,
        }
        return StepResult(reward, terminated, truncated, info)

    def close(self) -> None:
        self.world = None

    # -- views -------------------------------------------------------------

    def _require_world(self) -> WorldState:
        if self.world is None:
            raise NotResetError("call reset() first")
        return self.world

    def _obs_matrix(self) -> np.ndarray:
        world = self._require_world()
        d = world.dragon
        out = np.empty((self.n_agents, OBS_SIZE), dtype=np.float64)
        if self.scenario.normalize_obs:
            s = float(MAP_HALF_EXTENT)
            dview = (d.pos[0] / s, d.pos[1] / s, d.hp / d.max_hp)
            for i, h in enumerate(world.heroes):
                out[i] = (h.pos[0] / s, h.pos[1] / s, h.hp / h.max_hp) + dview
        else:
            dview = (d.pos[0], d.pos[1], d.hp)
            for i, h in enumerate(world.heroes):
                out[i] = (h.pos[0], h.pos[1], h.hp) + dview
        return out

    def get_obs(self) -> list[np.ndarray]:
        return list(self._obs_matrix())

    def get_obs_agent(self, agent: int) -> np.ndarray:
        return self._obs_matrix()[agent]

    def get_state(self) -> np.ndarray:
        return self._obs_matrix().reshape(-1)

    def get_avail_actions(self) -> np.ndarray:
        if self._mask is None:
            self._mask = availability_mask(self._require_world())
        return self._mask.copy()

    def get_avail_agent_actions(self, agent: int) -> np.ndarray:
        return self.get_avail_actions()[agent]

    def action_to_command(self, agent: int, action: int) -> Command:
        return command_for(self._require_world(), agent, int(action))

    def invalidate(self) -> None:
        """Drop cached views after editing ``self.world`` directly."""
        self._mask = None
        self._over = False

    @property
    def done(self) -> bool:
        return self._over

    def get_env_info(self) -> dict:
        return {"state_shape": OBS_SIZE * self.n_agents, "obs_shape": OBS_SIZE,
                "n_actions": N_ACTIONS, "n_agents": self.n_agents,
                "episode_limit": self.episode_limit}

    def get_obs_size(self) -> int:
        return OBS_SIZE

    def get_state_size(self) -> int:
        return OBS_SIZE * self.n_agents

    def get_total_actions(self) -> int:
        return N_ACTIONS


def events_to_dicts(events: Sequence[DamageEvent]) -> list[dict]:
    return [e.to_dict() for e in events]
