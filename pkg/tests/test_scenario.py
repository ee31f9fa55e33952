import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minihok.scenario import (
    BASIC_COMPOSITION,
    SPAWN_POINTS,
    ConfigParseError,
    ConfigValidationError,
    ClientConfig,
    DragonConfig,
    HeroSlot,
    ScenarioConfig,
    ServerConfig,
    UnitStats,
    builtin_mode,
    dragon_spec,
    dump_client_config,
    dump_scenario,
    dump_server_config,
    equipment_table,
    get_hero,
    hero_table,
    load_client_config,
    load_scenario,
    load_server_config,
    spawn_assignment,
    spawn_positions,
    stats_at_level,
    summoner_table,
)

from oracles import DRAGON_ANCHOR, FIELDS, HERO_IDS, hero_anchor


# -- stat tables ---------------------------------------------------------------

@pytest.mark.parametrize("unit_id", HERO_IDS)
@pytest.mark.parametrize("level", [3, 15])
def test_anchor_levels_reproduce_table(unit_id, level):
    got = stats_at_level(get_hero(unit_id), level).to_dict()
    assert got == hero_anchor(unit_id, level)


def test_dragon_stats_match_table():
    assert dragon_spec().stats.to_dict() == DRAGON_ANCHOR


def test_di_renjie_midpoint_is_mean_of_anchors():
    s = stats_at_level(get_hero(13301), 9)
    assert (s.max_hp, s.phys_attack) == (4650, 365)


def test_level_out_of_range():
    with pytest.raises(ValueError):
        stats_at_level(get_hero(13301), 0)
    with pytest.raises(ValueError):
        stats_at_level(get_hero(13301), 16)


@given(st.sampled_from(HERO_IDS), st.integers(1, 14))
def test_stats_monotone_in_level(unit_id, level):
    hero = get_hero(unit_id)
    lo, hi = stats_at_level(hero, level).to_dict(), stats_at_level(hero, level + 1).to_dict()
    a3, a15 = hero_anchor(unit_id, 3), hero_anchor(unit_id, 15)
    for f in FIELDS:
        if a15[f] >= a3[f]:
            assert hi[f] >= lo[f], f
        assert lo[f] >= 0


def test_low_level_extrapolation_clamped():
    for uid in HERO_IDS:
        s = stats_at_level(get_hero(uid), 1)
        assert all(v >= 0 for v in s.to_dict().values())


def test_equipment_applies_multipliers_then_additions():
    hero = get_hero(13301)
    mod = hero.equipment
    assert equipment_table()[mod.name] == mod
    base = stats_at_level(hero, 4)
    eq = stats_at_level(hero, 4, equipped=True)
    for f in FIELDS:
        expect = getattr(base, f) * mod.stat_multipliers.get(f, 1.0) + mod.stat_additions.get(f, 0)
        if f == "crit_rate":
            expect = min(expect, 10000)
        assert getattr(eq, f) == int(np.floor(expect + 0.5)), f
    assert eq.max_hp > base.max_hp and eq.phys_attack > base.phys_attack


def test_unit_stats_validation():
    d = DRAGON_ANCHOR.copy()
    d["crit_rate"] = 10001
    with pytest.raises(ValueError):
        UnitStats(**d)
    d = DRAGON_ANCHOR.copy()
    d["phys_attack"] = -1
    with pytest.raises(ValueError):
        UnitStats(**d)


def test_hero_data_shape():
    table = hero_table()
    assert sorted(table) == sorted(HERO_IDS)
    for h in table.values():
        assert len(h.skill_types) == 3
        assert h.camp == 1
        assert [s.max_level for s in h.skills] == [6, 6, 3]
    assert get_hero(13301).skill_types == ("dir_skill",) * 3


def test_berserk_data():
    b = summoner_table()[80110]
    assert b.name == "Berserk"
    assert b.cooldown_seconds == 60
    assert b.effect["damage_mult"] == pytest.approx(1.1)
    assert len(summoner_table()) == 8
    assert all(s.cooldown_seconds > 0 for s in summoner_table().values())


# -- modes -----------------------------------------------------------------------

def test_mode_e_is_homogeneous():
    cfg = builtin_mode("E")
    assert cfg.hero_ids == [16701] * 5
    assert all(h.level == 15 and h.skill_levels == (6, 6, 3) and not h.equipped for h in cfg.heroes)


def test_mode_a_row():
    cfg = builtin_mode("A")
    assert tuple(cfg.hero_ids) == BASIC_COMPOSITION
    assert all(h.level == 1 and h.skill_levels == (0, 0, 0) and not h.equipped for h in cfg.heroes)
    assert cfg.dragon.max_hp == 40000


def test_mode_g_row():
    cfg = builtin_mode("G")
    assert tuple(cfg.hero_ids) == BASIC_COMPOSITION
    assert all(h.level == 4 and h.skill_levels == (2, 1, 1) and h.equipped for h in cfg.heroes)
    assert cfg.dragon.max_hp == 500000


def test_unknown_mode():
    with pytest.raises(ConfigValidationError):
        builtin_mode("H")


@pytest.mark.parametrize("mode", list("ABCDEFG"))
def test_mode_round_trips_through_document(mode):
    cfg = builtin_mode(mode)
    again = load_scenario(dump_scenario(cfg))
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


# -- documents ---------------------------------------------------------------------

MODE_D_DOC = """
format_version: 1
kind: scenario
map_name: dragon_pit
n_agents: 5
episode_limit: 150
heroes:
  - {unit_id: 11301, level: 15, skill_levels: [6, 6, 3], equipped: false, spawn_point: 1}
  - {unit_id: 13301, level: 15, skill_levels: [6, 6, 3], equipped: false, spawn_point: 2}
  - {unit_id: 14101, level: 15, skill_levels: [6, 6, 3], equipped: false, spawn_point: 3}
  - {unit_id: 16701, level: 15, skill_levels: [6, 6, 3], equipped: false, spawn_point: 4}
  - {unit_id: 12801, level: 15, skill_levels: [6, 6, 3], equipped: false, spawn_point: 5}
dragon: {max_hp: 40000}
"""


def test_mode_d_document_loads():
    cfg = load_scenario(MODE_D_DOC)
    assert cfg.n_agents == 5
    assert cfg.heroes == builtin_mode("D").heroes


def test_zero_heroes_rejected():
    with pytest.raises(ConfigValidationError):
        load_scenario("format_version: 1\nkind: scenario\nheroes: []\n")


def test_skill3_before_level4_rejected():
    doc = "format_version: 1\nkind: scenario\nheroes:\n  - {unit_id: 13301, level: 3, skill_levels: [1, 1, 1]}\n"
    with pytest.raises(ConfigValidationError, match="skill"):
        load_scenario(doc)


def test_malformed_document():
    with pytest.raises(ConfigParseError):
        load_scenario("heroes: [unclosed")
    with pytest.raises(ConfigParseError):
        load_scenario("- just\n- a list\n")


def test_validation_rules():
    hero = HeroSlot(13301)
    with pytest.raises(ConfigValidationError):
        ScenarioConfig(heroes=(hero, dataclasses.replace(hero, unit_id=14101)))  # same spawn
    with pytest.raises(ConfigValidationError):
        ScenarioConfig(heroes=(HeroSlot(13301, skill_levels=(7, 0, 0)),))
    with pytest.raises(ConfigValidationError):
        ScenarioConfig(heroes=(HeroSlot(13301, spawn_point=21),))
    with pytest.raises(ConfigValidationError):
        ScenarioConfig(heroes=tuple(HeroSlot(13301, spawn_point=i + 1) for i in range(21)))
    with pytest.raises(ConfigValidationError):
        ScenarioConfig(heroes=(HeroSlot(13301),), episode_limit=0)


def test_n_agents_mismatch_rejected():
    doc = MODE_D_DOC.replace("n_agents: 5", "n_agents: 4")
    with pytest.raises(ConfigValidationError):
        load_scenario(doc)


def test_server_and_client_documents_round_trip():
    srv = ServerConfig(builtin_mode("B"), endpoint="127.0.0.1:7000", replay_dir="rp")
    assert load_server_config(dump_server_config(srv)) == srv
    cli = ClientConfig(hero_ids=tuple(BASIC_COMPOSITION), endpoint="127.0.0.1:7000")
    assert load_client_config(dump_client_config(cli)) == cli
    with pytest.raises(ConfigParseError):
        load_client_config(dump_server_config(srv))


def test_dragon_overrides():
    cfg = ScenarioConfig(heroes=(HeroSlot(13301),),
                         dragon=DragonConfig(max_hp=1234, stat_overrides={"phys_defense": 0}))
    assert cfg.dragon.stats.max_hp == 1234
    assert cfg.dragon.stats.phys_defense == 0


# -- spawns ------------------------------------------------------------------------

def test_spawn_ring_geometry():
    assert len(SPAWN_POINTS) == 20
    assert SPAWN_POINTS[0] == (0, 8000)
    for p in SPAWN_POINTS:
        assert abs(np.hypot(*p) - 8000) <= 1
    # clockwise seen from above (x right, z up): point 2 lies east of north
    assert SPAWN_POINTS[1][0] > 0


def test_default_spawns_are_points_1_to_5():
    cfg = builtin_mode("A")
    assert spawn_positions(cfg, np.random.default_rng(0)) == list(SPAWN_POINTS[:5])


def test_randomized_spawns_deterministic():
    cfg = builtin_mode("A", randomize_spawns=True)
    a = spawn_assignment(cfg, np.random.default_rng(11))
    b = spawn_assignment(cfg, np.random.default_rng(11))
    assert a == b


def test_twenty_agents_cover_every_point():
    heroes = tuple(HeroSlot(HERO_IDS[i % 5], spawn_point=i + 1) for i in range(20))
    cfg = ScenarioConfig(heroes=heroes, randomize_spawns=True)
    pts = spawn_positions(cfg, np.random.default_rng(3))
    assert sorted(pts) == sorted(SPAWN_POINTS)


@settings(max_examples=50)
@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_spawn_assignment_injective(n, seed):
    heroes = tuple(HeroSlot(HERO_IDS[i % 5], spawn_point=i + 1) for i in range(n))
    cfg = ScenarioConfig(heroes=heroes, randomize_spawns=True)
    pts = spawn_positions(cfg, np.random.default_rng(seed))
    assert len(set(pts)) == n
    assert set(pts) <= set(SPAWN_POINTS)
