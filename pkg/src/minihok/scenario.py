"""Scenario configuration: hero/dragon data, level scaling, presets and spawns.

Everything in here is immutable data plus pure functions. Built-in hero,
dragon, summoner and equipment tables live in ``minihok/data/*.json``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

CONFIG_FORMAT_VERSION = 1

MAP_HALF_EXTENT = 30000
SPAWN_RING_RADIUS = 8000
N_SPAWN_POINTS = 20

SKILL_TYPES = ("obj_skill", "dir_skill", "pos_skill", "talent_skill")
MAX_SKILL_LEVELS = (6, 6, 3)
MIN_LEVEL, MAX_LEVEL = 1, 15
HERO_CAMP, DRAGON_CAMP = 1, 2
DRAGON_UNIT_ID = 12202
BERSERK_ID = 80110

BASIC_COMPOSITION = (11301, 13301, 14101, 16701, 12801)
HOMO_COMPOSITION = (16701,) * 5


class ScenarioError(ValueError):
    """Base class for scenario problems."""


class ConfigParseError(ScenarioError):
    pass


class ConfigValidationError(ScenarioError):
    pass


@dataclass(frozen=True)
class UnitStats:
    max_hp: int
    phys_attack: int
    phys_defense: int
    magic_attack: int
    magic_defense: int
    move_speed: int
    attack_speed_bonus: int
    max_energy: int
    hp_regen: int
    energy_regen: int
    phys_pierce: int
    magic_pierce: int
    crit_rate: int
    crit_effect: int
    phys_vamp: int
    magic_vamp: int
    cooldown_reduction: int
    attack_range: int

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigValidationError(f"stat {f.name} must be >= 0")
        if self.crit_rate > 10000:
            raise ConfigValidationError("crit_rate must be <= 10000")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "UnitStats":
        missing = [f.name for f in dataclasses.fields(cls) if f.name not in d]
        if missing:
            raise ConfigValidationError(f"missing stats: {missing}")
        return cls(**{f.name: int(d[f.name]) for f in dataclasses.fields(cls)})

    def to_dict(self) -> dict[str, int]:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "UnitStats":
        return dataclasses.replace(self, **changes)


STAT_NAMES = tuple(f.name for f in dataclasses.fields(UnitStats))


@dataclass(frozen=True)
class SkillSpec:
    """Per-level skill table. Lists are indexed by ``level - 1``."""

    name: str
    type: str
    damage_type: str
    base_damage: tuple[int, ...]
    attack_ratio: float
    cooldown: tuple[float, ...]
    energy_cost: tuple[int, ...]
    range: int

    @property
    def max_level(self) -> int:
        return len(self.base_damage)

    def cooldown_steps(self, level: int, cooldown_reduction: int = 0) -> int:
        # one environment step is one second
        secs = self.cooldown[level - 1] * (1.0 - cooldown_reduction / 10000.0)
        return max(1, math.ceil(secs - 1e-9))


@dataclass(frozen=True)
class SummonerSkillSpec:
    name: str
    skill_id: int
    cooldown_seconds: float
    effect: Mapping[str, Any]

    def __post_init__(self):
        if self.cooldown_seconds <= 0:
            raise ConfigValidationError("summoner cooldown must be > 0")

    @property
    def cooldown_steps(self) -> int:
        return max(1, math.ceil(self.cooldown_seconds))


@dataclass(frozen=True)
class EquipmentModifier:
    name: str
    items: tuple[str, ...]
    stat_multipliers: Mapping[str, float]
    stat_additions: Mapping[str, int]

    def __post_init__(self):
        for k, v in self.stat_multipliers.items():
            if k not in STAT_NAMES:
                raise ConfigValidationError(f"unknown stat {k!r} in equipment {self.name}")
            if v <= 0:
                raise ConfigValidationError("equipment multipliers must be > 0")
        for k in self.stat_additions:
            if k not in STAT_NAMES:
                raise ConfigValidationError(f"unknown stat {k!r} in equipment {self.name}")

    def apply(self, stats: UnitStats) -> UnitStats:
        d = stats.to_dict()
        for k, m in self.stat_multipliers.items():
            d[k] = d[k] * m
        for k, a in self.stat_additions.items():
            d[k] = d[k] + a
        d = {k: _round(v) for k, v in d.items()}
        d["crit_rate"] = min(d["crit_rate"], 10000)
        return UnitStats(**d)


@dataclass(frozen=True)
class HeroSpec:
    name: str
    unit_id: int
    camp: int
    level3_stats: UnitStats
    level15_stats: UnitStats
    skills: tuple[SkillSpec, SkillSpec, SkillSpec]
    summoner_skill: int
    equipment: EquipmentModifier | None = None

    def __post_init__(self):
        if len(self.skills) != 3:
            raise ConfigValidationError("a hero has exactly 3 skills")
        for s in self.skills:
            if s.type not in SKILL_TYPES:
                raise ConfigValidationError(f"unknown skill type {s.type!r}")
        if self.level3_stats.attack_range <= 0 or self.level15_stats.attack_range <= 0:
            raise ConfigValidationError("attack_range must be > 0")

    @property
    def skill_types(self) -> tuple[str, str, str]:
        return tuple(s.type for s in self.skills)


@dataclass(frozen=True)
class DragonSkillSpec:
    name: str
    effect: str  # aoe | single | slow
    damage_type: str
    base_damage: int
    attack_ratio: float
    radius: int
    cooldown: int
    slow_steps: int


@dataclass(frozen=True)
class DragonSpec:
    name: str
    unit_id: int
    camp: int
    stats: UnitStats
    skills: tuple[DragonSkillSpec, ...]
    default_max_hp: int


def _round(x: float) -> int:
    return int(math.floor(x + 0.5))


# ---------------------------------------------------------------------------
# built-in data
# ---------------------------------------------------------------------------

def _read_data(name: str) -> dict:
    return json.loads(resources.files("minihok").joinpath("data", name).read_text())


def _skill_from_dict(d) -> SkillSpec:
    return SkillSpec(
        name=d["name"], type=d["type"], damage_type=d["damage_type"],
        base_damage=tuple(int(x) for x in d["base_damage"]),
        attack_ratio=float(d["attack_ratio"]),
        cooldown=tuple(float(x) for x in d["cooldown"]),
        energy_cost=tuple(int(x) for x in d["energy_cost"]),
        range=int(d["range"]),
    )


@lru_cache(maxsize=None)
def equipment_table() -> dict[str, EquipmentModifier]:
    out = {}
    for d in _read_data("equipment.json")["equipment"]:
        out[d["name"]] = EquipmentModifier(
            name=d["name"], items=tuple(d["items"]),
            stat_multipliers=dict(d["stat_multipliers"]),
            stat_additions=dict(d["stat_additions"]))
    return out


@lru_cache(maxsize=None)
def summoner_table() -> dict[int, SummonerSkillSpec]:
    return {d["skill_id"]: SummonerSkillSpec(d["name"], d["skill_id"], d["cooldown_seconds"], d["effect"])
            for d in _read_data("summoners.json")["summoner_skills"]}


@lru_cache(maxsize=None)
def hero_table() -> dict[int, HeroSpec]:
    eq = equipment_table()
    out = {}
    for d in _read_data("heroes.json")["heroes"]:
        out[d["unit_id"]] = HeroSpec(
            name=d["name"], unit_id=d["unit_id"], camp=d["camp"],
            level3_stats=UnitStats.from_dict(d["level3_stats"]),
            level15_stats=UnitStats.from_dict(d["level15_stats"]),
            skills=tuple(_skill_from_dict(s) for s in d["skills"]),
            summoner_skill=d["summoner_skill"],
            equipment=eq.get(d["equipment"]),
        )
    return out


@lru_cache(maxsize=None)
def dragon_spec() -> DragonSpec:
    d = _read_data("dragon.json")["dragon"]
    return DragonSpec(
        name=d["name"], unit_id=d["unit_id"], camp=d["camp"],
        stats=UnitStats.from_dict(d["stats"]),
        skills=tuple(DragonSkillSpec(**s) for s in d["skills"]),
        default_max_hp=d["default_max_hp"],
    )


def get_hero(unit_id: int) -> HeroSpec:
    try:
        return hero_table()[unit_id]
    except KeyError:
        raise ConfigValidationError(f"unknown hero unit_id {unit_id}") from None


def stats_at_level(hero: HeroSpec, level: int, equipped: bool = False) -> UnitStats:
    """Stats of ``hero`` at ``level``.

    Linear in level through the level-3 and level-15 anchors (extrapolated
    below level 3), clamped at zero and rounded to whole points. Equipment
    multipliers are applied before additions.
    """
    if not MIN_LEVEL <= level <= MAX_LEVEL:
        raise ConfigValidationError(f"level {level} outside {MIN_LEVEL}..{MAX_LEVEL}")
    lo, hi = hero.level3_stats.to_dict(), hero.level15_stats.to_dict()
    t = (level - 3) / 12.0
    vals = {k: max(0, _round(lo[k] + (hi[k] - lo[k]) * t)) for k in STAT_NAMES}
    vals["crit_rate"] = min(vals["crit_rate"], 10000)
    stats = UnitStats(**vals)
    if equipped and hero.equipment is not None:
        stats = hero.equipment.apply(stats)
    return stats


# ---------------------------------------------------------------------------
# scenario config
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeroSlot:
    unit_id: int
    level: int = 15
    skill_levels: tuple[int, int, int] = (0, 0, 0)
    equipped: bool = False
    spawn_point: int = 1
    summoner_skill: int = BERSERK_ID

    @property
    def spec(self) -> HeroSpec:
        return get_hero(self.unit_id)

    @property
    def stats(self) -> UnitStats:
        return stats_at_level(self.spec, self.level, self.equipped)


@dataclass(frozen=True)
class DragonConfig:
    unit_id: int = DRAGON_UNIT_ID
    max_hp: int = 40000
    stationary: bool = False
    skill_prob: float = 0.3
    stat_overrides: Mapping[str, int] = field(default_factory=dict)

    @property
    def stats(self) -> UnitStats:
        base = dragon_spec().stats.to_dict()
        base.update(self.stat_overrides)
        base["max_hp"] = self.max_hp
        return UnitStats(**base)


@dataclass(frozen=True)
class ScenarioConfig:
    heroes: tuple[HeroSlot, ...]
    dragon: DragonConfig = DragonConfig()
    map_name: str = "dragon_pit"
    episode_limit: int = 150
    seed_policy: str = "per-episode"
    randomize_spawns: bool = False
    mode_id: str | None = None
    normalize_obs: bool = True
    energy_costs: bool = False

    def __post_init__(self):
        validate_scenario(self)

    @property
    def n_agents(self) -> int:
        return len(self.heroes)

    @property
    def hero_ids(self) -> list[int]:
        return [h.unit_id for h in self.heroes]

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = {
            "format_version": CONFIG_FORMAT_VERSION,
            "kind": "scenario",
            "map_name": self.map_name,
            "n_agents": self.n_agents,
            "episode_limit": self.episode_limit,
            "mode_id": self.mode_id,
            "seed_policy": self.seed_policy,
            "randomize_spawns": self.randomize_spawns,
            "normalize_obs": self.normalize_obs,
            "energy_costs": self.energy_costs,
            "heroes": [
                {"unit_id": h.unit_id, "level": h.level, "skill_levels": list(h.skill_levels),
                 "equipped": h.equipped, "spawn_point": h.spawn_point,
                 "summoner_skill": h.summoner_skill}
                for h in self.heroes
            ],
            "dragon": {
                "unit_id": self.dragon.unit_id, "max_hp": self.dragon.max_hp,
                "stationary": self.dragon.stationary, "skill_prob": self.dragon.skill_prob,
                "stats": dict(self.dragon.stat_overrides),
            },
        }
        return d

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def validate_scenario(cfg: ScenarioConfig) -> None:
    n = len(cfg.heroes)
    if not 1 <= n <= N_SPAWN_POINTS:
        raise ConfigValidationError(f"n_agents must be in 1..{N_SPAWN_POINTS}, got {n}")
    if cfg.episode_limit < 1:
        raise ConfigValidationError("episode_limit must be >= 1")
    if cfg.seed_policy not in ("fixed", "per-episode"):
        raise ConfigValidationError(f"seed_policy must be 'fixed' or 'per-episode'")
    if cfg.mode_id is not None and cfg.mode_id not in MODE_TABLE:
        raise ConfigValidationError(f"unknown mode_id {cfg.mode_id!r}")
    points = [h.spawn_point for h in cfg.heroes]
    if len(set(points)) != len(points):
        raise ConfigValidationError("spawn points must be distinct")
    for i, h in enumerate(cfg.heroes):
        get_hero(h.unit_id)
        if h.unit_id == cfg.dragon.unit_id:
            raise ConfigValidationError("hero unit_id collides with the dragon")
        if not 1 <= h.spawn_point <= N_SPAWN_POINTS:
            raise ConfigValidationError(f"hero {i}: spawn_point must be in 1..{N_SPAWN_POINTS}")
        if not MIN_LEVEL <= h.level <= MAX_LEVEL:
            raise ConfigValidationError(f"hero {i}: level must be in {MIN_LEVEL}..{MAX_LEVEL}")
        if len(h.skill_levels) != 3:
            raise ConfigValidationError(f"hero {i}: exactly 3 skill levels required")
        for k, (lv, cap) in enumerate(zip(h.skill_levels, MAX_SKILL_LEVELS)):
            if not 0 <= lv <= cap:
                raise ConfigValidationError(f"hero {i}: skill{k + 1} level {lv} outside 0..{cap}")
        s3 = h.skill_levels[2]
        if s3 > 0 and h.level < 4:
            raise ConfigValidationError(
                f"hero {i}: skill3 requires hero level >= 4 (level {h.level}, skill3 {s3})")
        if s3 > h.level // 4:
            raise ConfigValidationError(
                f"hero {i}: skill3 level {s3} exceeds one upgrade per 4 hero levels")
        if h.summoner_skill not in summoner_table():
            raise ConfigValidationError(f"hero {i}: unknown summoner skill {h.summoner_skill}")
    d = cfg.dragon
    if d.unit_id != DRAGON_UNIT_ID:
        raise ConfigValidationError(f"unknown dragon unit_id {d.unit_id}")
    if d.max_hp < 1:
        raise ConfigValidationError("dragon max_hp must be >= 1")
    if not 0.0 <= d.skill_prob <= 1.0:
        raise ConfigValidationError("dragon skill_prob must be in [0, 1]")
    for k in d.stat_overrides:
        if k not in STAT_NAMES:
            raise ConfigValidationError(f"unknown dragon stat {k!r}")
    d.stats  # validates override values


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------

def _parse_document(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"malformed config document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigParseError("config document must be a mapping")
    version = doc.get("format_version")
    if version != CONFIG_FORMAT_VERSION:
        raise ConfigParseError(f"unsupported format_version {version!r}")
    return doc


def scenario_from_dict(doc: Mapping[str, Any]) -> ScenarioConfig:
    try:
        heroes_doc = doc.get("heroes") or []
        heroes = tuple(
            HeroSlot(
                unit_id=int(h["unit_id"]),
                level=int(h.get("level", 15)),
                skill_levels=tuple(int(x) for x in h.get("skill_levels", (0, 0, 0))),
                equipped=bool(h.get("equipped", False)),
                spawn_point=int(h.get("spawn_point", i + 1)),
                summoner_skill=int(h.get("summoner_skill", BERSERK_ID)),
            )
            for i, h in enumerate(heroes_doc)
        )
        dd = doc.get("dragon") or {}
        dragon = DragonConfig(
            unit_id=int(dd.get("unit_id", DRAGON_UNIT_ID)),
            max_hp=int(dd.get("max_hp", 40000)),
            stationary=bool(dd.get("stationary", False)),
            skill_prob=float(dd.get("skill_prob", 0.3)),
            stat_overrides={k: int(v) for k, v in (dd.get("stats") or {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ConfigValidationError(f"bad field: {exc}") from exc
    if "n_agents" in doc and int(doc["n_agents"]) != len(heroes):
        raise ConfigValidationError(
            f"n_agents={doc['n_agents']} but {len(heroes)} heroes listed")
    return ScenarioConfig(
        heroes=heroes,
        dragon=dragon,
        map_name=str(doc.get("map_name", "dragon_pit")),
        episode_limit=int(doc.get("episode_limit", 150)),
        seed_policy=str(doc.get("seed_policy", "per-episode")),
        randomize_spawns=bool(doc.get("randomize_spawns", False)),
        mode_id=doc.get("mode_id"),
        normalize_obs=bool(doc.get("normalize_obs", True)),
        energy_costs=bool(doc.get("energy_costs", False)),
    )


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document (YAML or JSON text)."""
    doc = _parse_document(text)
    if doc.get("kind", "scenario") != "scenario":
        raise ConfigParseError(f"expected kind 'scenario', got {doc.get('kind')!r}")
    return scenario_from_dict(doc)


def dump_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


@dataclass(frozen=True)
class ServerConfig:
    scenario: ScenarioConfig
    endpoint: str = "127.0.0.1:5555"
    replay_dir: str | None = "replays"


@dataclass(frozen=True)
class ClientConfig:
    hero_ids: tuple[int, ...]
    endpoint: str = "127.0.0.1:5555"


def load_server_config(text: str) -> ServerConfig:
    doc = _parse_document(text)
    if doc.get("kind") != "server":
        raise ConfigParseError(f"expected kind 'server', got {doc.get('kind')!r}")
    if "scenario" not in doc:
        raise ConfigValidationError("server config needs a 'scenario' section")
    server = doc.get("server") or {}
    return ServerConfig(
        scenario=scenario_from_dict(doc["scenario"]),
        endpoint=str(server.get("endpoint", "127.0.0.1:5555")),
        replay_dir=server.get("replay_dir", "replays"),
    )


def dump_server_config(cfg: ServerConfig) -> str:
    scen = cfg.scenario.to_dict()
    scen.pop("format_version")
    scen.pop("kind")
    return yaml.safe_dump({
        "format_version": CONFIG_FORMAT_VERSION, "kind": "server",
        "server": {"endpoint": cfg.endpoint, "replay_dir": cfg.replay_dir},
        "scenario": scen,
    }, sort_keys=False)


def load_client_config(text: str) -> ClientConfig:
    doc = _parse_document(text)
    if doc.get("kind") != "client":
        raise ConfigParseError(f"expected kind 'client', got {doc.get('kind')!r}")
    ids = doc.get("hero_ids")
    if not ids:
        raise ConfigValidationError("client config needs a non-empty 'hero_ids' list")
    return ClientConfig(hero_ids=tuple(int(i) for i in ids),
                        endpoint=str(doc.get("endpoint", "127.0.0.1:5555")))


def dump_client_config(cfg: ClientConfig) -> str:
    return yaml.safe_dump({"format_version": CONFIG_FORMAT_VERSION, "kind": "client",
                           "endpoint": cfg.endpoint, "hero_ids": list(cfg.hero_ids)},
                          sort_keys=False)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

# mode -> (hero level, skill levels, equipped, composition, dragon max hp)
MODE_TABLE: dict[str, tuple[int, tuple[int, int, int], bool, tuple[int, ...], int]] = {
    "A": (1, (0, 0, 0), False, BASIC_COMPOSITION, 40000),
    "B": (4, (0, 0, 0), False, BASIC_COMPOSITION, 40000),
    "C": (15, (0, 0, 0), False, BASIC_COMPOSITION, 40000),
    "D": (15, (6, 6, 3), False, BASIC_COMPOSITION, 40000),
    "E": (15, (6, 6, 3), False, HOMO_COMPOSITION, 40000),
    "F": (4, (2, 1, 1), False, BASIC_COMPOSITION, 40000),
    "G": (4, (2, 1, 1), True, BASIC_COMPOSITION, 500000),
}


def builtin_mode(mode: str, **overrides) -> ScenarioConfig:
    """Preset scenario for experiment mode ``mode`` (A..G)."""
    try:
        level, skills, equipped, comp, hp = MODE_TABLE[mode]
    except KeyError:
        raise ConfigValidationError(f"unknown mode {mode!r}; expected one of A..G") from None
    heroes = tuple(HeroSlot(unit_id=u, level=level, skill_levels=skills, equipped=equipped,
                            spawn_point=i + 1) for i, u in enumerate(comp))
    cfg = ScenarioConfig(heroes=heroes, dragon=DragonConfig(max_hp=hp), mode_id=mode)
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg


def with_dragon(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    return cfg.replace(dragon=dataclasses.replace(cfg.dragon, **changes))


# ---------------------------------------------------------------------------
# spawns
# ---------------------------------------------------------------------------

def spawn_point_coordinates() -> list[tuple[int, int]]:
    """The 20 ring points around the dragon, point 1 due north, clockwise."""
    pts = []
    for k in range(N_SPAWN_POINTS):
        theta = math.pi / 2 - 2 * math.pi * k / N_SPAWN_POINTS
        pts.append((_round(SPAWN_RING_RADIUS * math.cos(theta)),
                    _round(SPAWN_RING_RADIUS * math.sin(theta))))
    return pts


SPAWN_POINTS = tuple(spawn_point_coordinates())
DRAGON_SPAWN = (0, 0)


def spawn_assignment(cfg: ScenarioConfig, rng: np.random.Generator) -> list[int]:
    """1-based spawn point index per hero."""
    if cfg.randomize_spawns:
        perm = rng.permutation(N_SPAWN_POINTS)[: cfg.n_agents]
        return [int(p) + 1 for p in perm]
    return [h.spawn_point for h in cfg.heroes]


def spawn_positions(cfg: ScenarioConfig, rng: np.random.Generator) -> list[tuple[int, int]]:
    return [SPAWN_POINTS[p - 1] for p in spawn_assignment(cfg, rng)]
