"""Deterministic tick-level combat: movement, damage, cooldowns, buffs, dragon AI.

One call to :func:`resolve_step` advances the world by one environment step
(one second of game time). All randomness is drawn from ``world.rng``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .scenario import (
    DRAGON_SPAWN,
    MAP_HALF_EXTENT,
    DragonSkillSpec,
    HeroSpec,
    ScenarioConfig,
    SkillSpec,
    SummonerSkillSpec,
    UnitStats,
    dragon_spec,
    spawn_positions,
    summoner_table,
)

POS_DELTA = 1500
MITIGATION_CONSTANT = 600
DRAGON_BASE_SPEED = 3500

DIRECTIONS = {
    "up": (0, 1),
    "down": (0, -1),
    "left": (-1, 0),
    "right": (1, 0),
    "left_up": (-1, 1),
    "right_up": (1, 1),
    "right_down": (1, -1),
    "left_down": (-1, -1),
}


class EngineError(RuntimeError):
    pass


class OutOfRangeError(EngineError):
    pass


class SkillNotLearnedError(EngineError):
    pass


class CooldownError(EngineError):
    pass


class DeadUnitError(EngineError):
    pass


def _round(x: float) -> int:
    return int(math.floor(x + 0.5))


def clamp_pos(x: float, z: float) -> tuple[int, int]:
    lim = MAP_HALF_EXTENT
    return (min(lim, max(-lim, int(x))), min(lim, max(-lim, int(z))))


def apply_move(pos: tuple[int, int], direction: str, delta: int = POS_DELTA) -> tuple[int, int]:
    """Offset ``pos`` one step in ``direction``; diagonals move ``delta`` on both axes."""
    try:
        dx, dz = DIRECTIONS[direction]
    except KeyError:
        raise ValueError(f"unknown direction {direction!r}") from None
    return clamp_pos(pos[0] + dx * delta, pos[1] + dz * delta)


def distance(a: tuple[int, int], b: tuple[int, int]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def bearing_degrees(src: tuple[int, int], dst: tuple[int, int]) -> float:
    """Angle of ``dst`` seen from ``src``: degrees counter-clockwise from +x, in [0, 360)."""
    ang = math.degrees(math.atan2(dst[1] - src[1], dst[0] - src[0]))
    return ang % 360.0


@dataclass
class DamageEvent:
    source: int
    target: int
    amount: int
    kind: str  # normal | skill1 | skill2 | skill3 | summoner | dragon_skill
    crit: bool = False
    agent: int | None = None  # hero index involved (source or target)
    heal: int = 0
    overkill: int = 0

    def to_dict(self) -> dict:
        return {"source": self.source, "target": self.target, "amount": self.amount,
                "kind": self.kind, "crit": self.crit, "agent": self.agent,
                "heal": self.heal, "overkill": self.overkill}

    @classmethod
    def from_dict(cls, d) -> "DamageEvent":
        return cls(**d)


def _mitigate(raw: float, defense: int, pierce: int) -> float:
    return raw * MITIGATION_CONSTANT / (MITIGATION_CONSTANT + max(0, defense - pierce))


def _finish_damage(mitigated: float, crit_rate: int, crit_effect: int, rng: np.random.Generator,
                   damage_mult: float) -> tuple[int, bool]:
    crit = rng.random() < crit_rate / 10000.0
    if crit:
        mitigated *= 1.0 + crit_effect / 10000.0
    return max(1, _round(mitigated * damage_mult)), crit


def compute_basic_damage(attacker: UnitStats, defender: UnitStats, rng: np.random.Generator, *,
                         source: int = 0, target: int = 0, distance: float | None = None,
                         damage_mult: float = 1.0, vamp_bonus: int = 0,
                         agent: int | None = None) -> DamageEvent:
    """Normal attack: physical damage with crit and physical vamp.

    Exactly one uniform draw is consumed from ``rng`` (the crit roll).
    """
    if distance is not None and distance > attacker.attack_range:
        raise OutOfRangeError(f"target at {distance:.0f} beyond attack range {attacker.attack_range}")
    mitigated = _mitigate(attacker.phys_attack, defender.phys_defense, attacker.phys_pierce)
    amount, crit = _finish_damage(mitigated, attacker.crit_rate, attacker.crit_effect, rng, damage_mult)
    heal = amount * (attacker.phys_vamp + vamp_bonus) // 10000
    return DamageEvent(source, target, amount, "normal", crit, agent, heal)


def skill_raw_damage(attacker: UnitStats, skill: SkillSpec, level: int) -> float:
    atk = attacker.phys_attack if skill.damage_type == "phys" else attacker.magic_attack
    return skill.base_damage[level - 1] + skill.attack_ratio * atk


def compute_skill_damage(attacker: UnitStats, skill: SkillSpec, skill_level: int,
                         defender: UnitStats, rng: np.random.Generator, *, skill_index: int = 1,
                         cooldown_remaining: int = 0, source: int = 0, target: int = 0,
                         damage_mult: float = 1.0, vamp_bonus: int = 0,
                         agent: int | None = None) -> tuple[DamageEvent, int]:
    """Skill hit. Returns the event and the cooldown (in steps) to set."""
    if skill_level < 1:
        raise SkillNotLearnedError(f"skill{skill_index} is not learned")
    if skill_level > skill.max_level:
        raise ValueError(f"skill{skill_index} level {skill_level} > max {skill.max_level}")
    if cooldown_remaining > 0:
        raise CooldownError(f"skill{skill_index} cooling down ({cooldown_remaining} steps)")
    raw = skill_raw_damage(attacker, skill, skill_level)
    if skill.damage_type == "phys":
        mitigated = _mitigate(raw, defender.phys_defense, attacker.phys_pierce)
        vamp = attacker.phys_vamp
    else:
        mitigated = _mitigate(raw, defender.magic_defense, attacker.magic_pierce)
        vamp = attacker.magic_vamp
    amount, crit = _finish_damage(mitigated, attacker.crit_rate, attacker.crit_effect, rng, damage_mult)
    heal = amount * (vamp + vamp_bonus) // 10000
    ev = DamageEvent(source, target, amount, f"skill{skill_index}", crit, agent, heal)
    return ev, skill.cooldown_steps(skill_level, attacker.cooldown_reduction)


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------

@dataclass
class Buff:
    name: str
    remaining: int
    damage_mult: float = 1.0
    vamp_bonus: int = 0
    move_mult: float = 1.0
    fresh: bool = True  # applied this step; not ticked until the next one


@dataclass
class UnitState:
    unit_id: int
    pos: tuple[int, int]
    hp: int
    max_hp: int
    energy: int = 0
    max_energy: int = 0
    skill_cooldowns: list[int] = field(default_factory=lambda: [0, 0, 0])
    summoner_cooldown: int = 0
    buffs: list[Buff] = field(default_factory=list)
    alive: bool = True

    def damage_mult(self) -> float:
        m = 1.0
        for b in self.buffs:
            m *= b.damage_mult
        return m

    def vamp_bonus(self) -> int:
        return sum(b.vamp_bonus for b in self.buffs)

    def move_mult(self) -> float:
        m = 1.0
        for b in self.buffs:
            m *= b.move_mult
        return m

    def snapshot(self) -> dict:
        return {"id": self.unit_id, "pos": list(self.pos), "hp": self.hp, "energy": self.energy,
                "cooldowns": list(self.skill_cooldowns), "summoner_cd": self.summoner_cooldown,
                "buffs": [[b.name, b.remaining] for b in self.buffs], "alive": self.alive}


@dataclass(frozen=True)
class HeroLoadout:
    """Static per-episode data for one hero slot."""

    spec: HeroSpec
    level: int
    skill_levels: tuple[int, int, int]
    stats: UnitStats
    summoner: SummonerSkillSpec


@dataclass(frozen=True)
class Arena:
    """Everything about a match that does not change while it runs."""

    heroes: tuple[HeroLoadout, ...]
    dragon_stats: UnitStats
    dragon_skills: tuple[DragonSkillSpec, ...]
    dragon_unit_id: int
    stationary: bool
    skill_prob: float
    energy_costs: bool
    episode_limit: int

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig) -> "Arena":
        summ = summoner_table()
        heroes = tuple(
            HeroLoadout(h.spec, h.level, tuple(h.skill_levels), h.stats, summ[h.summoner_skill])
            for h in cfg.heroes)
        return cls(heroes=heroes, dragon_stats=cfg.dragon.stats,
                   dragon_skills=dragon_spec().skills, dragon_unit_id=cfg.dragon.unit_id,
                   stationary=cfg.dragon.stationary, skill_prob=cfg.dragon.skill_prob,
                   energy_costs=cfg.energy_costs, episode_limit=cfg.episode_limit)


@dataclass
class WorldState:
    arena: Arena
    heroes: list[UnitState]
    dragon: UnitState
    rng: np.random.Generator
    step_index: int = 0
    cumulative_dragon_damage: int = 0

    @property
    def n_agents(self) -> int:
        return len(self.heroes)

    def snapshot(self) -> dict:
        return {"step_index": self.step_index,
                "heroes": [h.snapshot() for h in self.heroes],
                "dragon": self.dragon.snapshot(),
                "cumulative_dragon_damage": self.cumulative_dragon_damage}


def new_world(cfg: ScenarioConfig, seed: int) -> WorldState:
    rng = np.random.default_rng(seed)
    arena = Arena.from_scenario(cfg)
    positions = spawn_positions(cfg, rng)
    heroes = [
        UnitState(unit_id=lo.spec.unit_id, pos=pos, hp=lo.stats.max_hp, max_hp=lo.stats.max_hp,
                  energy=lo.stats.max_energy, max_energy=lo.stats.max_energy)
        for lo, pos in zip(arena.heroes, positions)
    ]
    ds = arena.dragon_stats
    dragon = UnitState(unit_id=arena.dragon_unit_id, pos=DRAGON_SPAWN, hp=ds.max_hp,
                       max_hp=ds.max_hp, skill_cooldowns=[0] * len(arena.dragon_skills))
    return WorldState(arena=arena, heroes=heroes, dragon=dragon, rng=rng)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Command:
    """Engine-level order for one hero."""

    kind: str  # move | attack | skill | summoner
    agent: int
    direction: str | None = None
    skill_index: int | None = None
    skill_type: str | None = None
    target: int | None = None
    angle: float | None = None
    target_pos: tuple[int, int] | None = None


@dataclass(frozen=True)
class DragonAction:
    kind: str  # noop | attack | skill | move
    target: int | None = None  # hero index
    skill_index: int | None = None


def in_attack_range(world: WorldState, i: int) -> bool:
    h = world.heroes[i]
    return distance(h.pos, world.dragon.pos) <= world.arena.heroes[i].stats.attack_range


def skill_ready(world: WorldState, i: int, k: int) -> bool:
    """k is 0-based."""
    lo = world.arena.heroes[i]
    lvl = lo.skill_levels[k]
    h = world.heroes[i]
    if lvl < 1 or h.skill_cooldowns[k] > 0:
        return False
    if world.arena.energy_costs and h.energy < lo.spec.skills[k].energy_cost[lvl - 1]:
        return False
    return True


# ---------------------------------------------------------------------------
# dragon
# ---------------------------------------------------------------------------

def _nearest_hero(world: WorldState, candidates: Sequence[int]) -> int:
    dp = world.dragon.pos
    best, best_d = -1, None
    for i in candidates:
        p = world.heroes[i].pos
        d2 = (p[0] - dp[0]) ** 2 + (p[1] - dp[1]) ** 2
        if best_d is None or d2 < best_d:
            best, best_d = i, d2
    return best


def dragon_policy(world: WorldState, rng: np.random.Generator) -> DragonAction:
    """Pick the dragon's action for this step (does not mutate ``world``)."""
    dragon = world.dragon
    arena = world.arena
    if arena.stationary or not dragon.alive:
        return DragonAction("noop")
    living = [i for i, h in enumerate(world.heroes) if h.alive]
    if not living:
        return DragonAction("noop")
    reach = arena.dragon_stats.attack_range
    in_range = [i for i in living if distance(world.heroes[i].pos, dragon.pos) <= reach]
    ready = [k for k, cd in enumerate(dragon.skill_cooldowns) if cd == 0]
    if in_range and ready and rng.random() < arena.skill_prob:
        k = ready[int(rng.integers(len(ready)))]
        t = in_range[int(rng.integers(len(in_range)))]
        return DragonAction("skill", target=t, skill_index=k)
    if in_range:
        return DragonAction("attack", target=_nearest_hero(world, in_range))
    return DragonAction("move", target=_nearest_hero(world, living))


def _dragon_skill_events(world: WorldState, k: int, t: int) -> list[tuple[int, int, bool]]:
    """(hero index, amount, crit) hits for dragon skill k aimed at hero t; applies slows."""
    arena = world.arena
    skill = arena.dragon_skills[k]
    ds = arena.dragon_stats
    atk = ds.phys_attack if skill.damage_type == "phys" else ds.magic_attack
    raw = skill.base_damage + skill.attack_ratio * atk
    if skill.effect == "aoe":
        targets = [i for i, h in enumerate(world.heroes)
                   if h.alive and distance(h.pos, world.dragon.pos) <= skill.radius]
    else:
        targets = [t]
    hits = []
    for i in targets:
        hs = arena.heroes[i].stats
        if skill.damage_type == "phys":
            mitigated = _mitigate(raw, hs.phys_defense, ds.phys_pierce)
        else:
            mitigated = _mitigate(raw, hs.magic_defense, ds.magic_pierce)
        amount, crit = _finish_damage(mitigated, ds.crit_rate, ds.crit_effect, world.rng, 1.0)
        hits.append((i, amount, crit))
        if skill.slow_steps > 0:
            world.heroes[i].buffs.append(Buff("slow", skill.slow_steps, move_mult=0.5))
    return hits


def _damage_hero(world: WorldState, i: int, amount: int) -> tuple[int, int]:
    h = world.heroes[i]
    dealt = min(amount, h.hp)
    h.hp -= dealt
    if h.hp == 0:
        h.alive = False
        h.buffs.clear()
    return dealt, amount - dealt


def _dragon_act(world: WorldState, action: DragonAction, fresh: set) -> list[DamageEvent]:
    dragon = world.dragon
    arena = world.arena
    events: list[DamageEvent] = []
    if action.kind == "attack":
        i = action.target
        ev = compute_basic_damage(arena.dragon_stats, arena.heroes[i].stats, world.rng,
                                  source=dragon.unit_id, target=world.heroes[i].unit_id, agent=i)
        ev.amount, ev.overkill = _damage_hero(world, i, ev.amount)
        events.append(ev)
    elif action.kind == "skill":
        k = action.skill_index
        for i, amount, crit in _dragon_skill_events(world, k, action.target):
            if not world.heroes[i].alive:
                continue
            dealt, over = _damage_hero(world, i, amount)
            events.append(DamageEvent(dragon.unit_id, world.heroes[i].unit_id, dealt,
                                      "dragon_skill", crit, i, 0, over))
        dragon.skill_cooldowns[k] = arena.dragon_skills[k].cooldown
        fresh.add(("dragon", k))
    elif action.kind == "move":
        tgt = world.heroes[action.target].pos
        d = distance(dragon.pos, tgt)
        step = POS_DELTA * arena.dragon_stats.move_speed / DRAGON_BASE_SPEED
        if d > 0:
            f = min(step, d) / d
            dragon.pos = clamp_pos(_round(dragon.pos[0] + (tgt[0] - dragon.pos[0]) * f),
                                   _round(dragon.pos[1] + (tgt[1] - dragon.pos[1]) * f))
    return events


# ---------------------------------------------------------------------------
# step
# ---------------------------------------------------------------------------

def resolve_step(world: WorldState, commands: Sequence[Command]) -> tuple[WorldState, list[DamageEvent]]:
    """Advance ``world`` by one step in place; returns it with this step's events.

    Phases: hero moves, hero attacks (agent order, against the pre-phase
    dragon HP), dragon action, cooldown/buff/regen upkeep, step counter.
    """
    arena = world.arena
    n = world.n_agents
    if len(commands) != n:
        raise EngineError(f"expected {n} commands, got {len(commands)}")
    # cooldowns set during this step are not decremented at its end
    fresh: set = set()
    dragon = world.dragon

    for c in commands:
        h = world.heroes[c.agent]
        if c.kind != "move" and not h.alive:
            raise DeadUnitError(f"hero {c.agent} is dead and cannot {c.kind}")
        if c.kind != "move" and not dragon.alive:
            raise EngineError(f"hero {c.agent}: no target for {c.kind}")

    # (1) movement
    for c in commands:
        if c.kind == "move":
            h = world.heroes[c.agent]
            if h.alive:
                h.pos = apply_move(h.pos, c.direction, _round(POS_DELTA * h.move_mult()))

    # (2) hero attacks
    events: list[DamageEvent] = []
    hp_budget = dragon.hp
    for c in commands:
        if c.kind == "move":
            continue
        i = c.agent
        h = world.heroes[i]
        lo = arena.heroes[i]
        if c.kind == "attack":
            ev = compute_basic_damage(lo.stats, arena.dragon_stats, world.rng,
                                      source=h.unit_id, target=dragon.unit_id,
                                      distance=distance(h.pos, dragon.pos),
                                      damage_mult=h.damage_mult(), vamp_bonus=h.vamp_bonus(), agent=i)
        elif c.kind == "skill":
            k = c.skill_index - 1
            skill = lo.spec.skills[k]
            lvl = lo.skill_levels[k]
            if arena.energy_costs:
                cost = skill.energy_cost[lvl - 1] if lvl >= 1 else 0
                if h.energy < cost:
                    raise EngineError(f"hero {i}: not enough energy for skill{k + 1}")
            ev, cd = compute_skill_damage(lo.stats, skill, lvl, arena.dragon_stats, world.rng,
                                          skill_index=k + 1, cooldown_remaining=h.skill_cooldowns[k],
                                          source=h.unit_id, target=dragon.unit_id,
                                          damage_mult=h.damage_mult(), vamp_bonus=h.vamp_bonus(),
                                          agent=i)
            h.skill_cooldowns[k] = cd
            fresh.add((i, k))
            if arena.energy_costs:
                h.energy -= skill.energy_cost[lvl - 1]
            if distance(h.pos, dragon.pos) > skill.range:
                continue  # cast whiffs: cooldown spent, no hit
        elif c.kind == "summoner":
            if h.summoner_cooldown > 0:
                raise CooldownError(f"hero {i}: summoner skill cooling down")
            eff = lo.summoner.effect
            if "duration" in eff:
                h.buffs.append(Buff(lo.summoner.name, int(eff["duration"]),
                                    damage_mult=float(eff.get("damage_mult", 1.0)),
                                    vamp_bonus=int(eff.get("vamp_bonus", 0)),
                                    move_mult=float(eff.get("move_mult", 1.0))))
            h.summoner_cooldown = lo.summoner.cooldown_steps
            fresh.add((i, "summoner"))
            continue
        else:
            raise EngineError(f"unknown command kind {c.kind!r}")
        dealt = min(ev.amount, hp_budget)
        ev.overkill = ev.amount - dealt
        ev.amount = dealt
        ev.heal = min(ev.heal, dealt)
        hp_budget -= dealt
        events.append(ev)
    total = dragon.hp - hp_budget
    if total:
        dragon.hp = hp_budget
        world.cumulative_dragon_damage += total
        if dragon.hp == 0:
            dragon.alive = False
    for ev in events:
        if ev.heal:
            h = world.heroes[ev.agent]
            h.hp = min(h.max_hp, h.hp + ev.heal)

    # (3) dragon
    if dragon.alive:
        events.extend(_dragon_act(world, dragon_policy(world, world.rng), fresh))

    # (4) upkeep
    for i, h in enumerate(world.heroes):
        if not h.alive:
            continue
        for k in range(3):
            if h.skill_cooldowns[k] > 0 and (i, k) not in fresh:
                h.skill_cooldowns[k] -= 1
        if h.summoner_cooldown > 0 and (i, "summoner") not in fresh:
            h.summoner_cooldown -= 1
        _tick_buffs(h)
        stats = arena.heroes[i].stats
        h.hp = min(h.max_hp, h.hp + stats.hp_regen)
        h.energy = min(h.max_energy, h.energy + stats.energy_regen)
    if dragon.alive:
        for k in range(len(dragon.skill_cooldowns)):
            if dragon.skill_cooldowns[k] > 0 and ("dragon", k) not in fresh:
                dragon.skill_cooldowns[k] -= 1
        _tick_buffs(dragon)
        dragon.hp = min(dragon.max_hp, dragon.hp + arena.dragon_stats.hp_regen)

    # (5)
    world.step_index += 1
    return world, events


def _tick_buffs(u: UnitState) -> None:
    kept = []
    for b in u.buffs:
        if b.fresh:
            b.fresh = False
            kept.append(b)
            continue
        b.remaining -= 1
        if b.remaining > 0:
            kept.append(b)
    u.buffs = kept
