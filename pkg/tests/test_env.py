import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minihok.engine import new_world
from minihok.env import (
    ACTION_NAMES,
    N_ACTIONS,
    EpisodeOverError,
    IllegalActionError,
    MiniHoKEnv,
    NotResetError,
    availability_mask,
)
from minihok.scenario import MAP_HALF_EXTENT, HeroSlot, ScenarioConfig, builtin_mode, with_dragon

from oracles import mask_oracle


def test_dimensions():
    env = MiniHoKEnv(builtin_mode("A"))
    obs, state = env.reset(seed=0)
    assert len(obs) == 5 and all(o.shape == (6,) for o in obs)
    assert state.shape == (30,)
    info = env.get_env_info()
    assert info == {"state_shape": 30, "obs_shape": 6, "n_actions": 13, "n_agents": 5,
                    "episode_limit": 150}
    assert env.get_avail_actions().shape == (5, 13)


def test_action_id_table():
    assert ACTION_NAMES == ("up", "down", "left", "right", "attack", "skill1", "skill2", "skill3",
                            "summoner", "left_up", "right_up", "right_down", "left_down")
    assert N_ACTIONS == 13


def test_state_is_concatenated_obs():
    env = MiniHoKEnv(builtin_mode("C"))
    obs, state = env.reset(seed=4)
    np.testing.assert_array_equal(state, np.concatenate(obs))


def test_raw_observation_values():
    env = MiniHoKEnv(builtin_mode("A", normalize_obs=False))
    obs, _ = env.reset(seed=0)
    h = env.world.heroes[0]
    assert list(obs[0]) == [h.pos[0], h.pos[1], h.hp, 0, 0, 40000]


def test_normalized_observation_range():
    env = MiniHoKEnv(builtin_mode("A"))
    obs, _ = env.reset(seed=0)
    assert obs[0][1] == pytest.approx(8000 / MAP_HALF_EXTENT)
    assert obs[0][5] == 1.0


def test_initial_mask_out_of_range_without_skills():
    env = MiniHoKEnv(builtin_mode("A"))
    env.reset(seed=0)
    expected = [1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1, 1]
    m = env.get_avail_actions().tolist()
    w = env.world
    out = [i for i, h in enumerate(w.heroes)
           if np.hypot(*h.pos) > w.arena.heroes[i].stats.attack_range]
    # the 8000-range marksman already reaches the dragon from the spawn ring
    assert out == [0, 2, 3, 4]
    for i in out:
        assert m[i] == expected
    assert m[1] == [1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1]


def test_skill_bit_cleared_for_exactly_the_cooldown():
    env = MiniHoKEnv(with_dragon(builtin_mode("D"), stationary=True))
    env.reset(seed=0)
    w = env.world
    for h in w.heroes:
        h.pos = (0, 0)
    env.invalidate()
    assert env.get_avail_actions()[0, 5] == 1
    lo = w.arena.heroes[0]
    cd = lo.spec.skills[0].cooldown_steps(lo.skill_levels[0], lo.stats.cooldown_reduction)
    env.step([5, 0, 0, 0, 0])
    blocked = 0
    while env.get_avail_actions()[0, 5] == 0:
        blocked += 1
        env.step([0] * 5)
    assert blocked == cd


def test_dead_dragon_clears_attack_bits():
    env = MiniHoKEnv(builtin_mode("D"))
    env.reset(seed=0)
    for h in env.world.heroes:
        h.pos = (0, 0)
    env.world.dragon.hp = 0
    env.world.dragon.alive = False
    env.invalidate()
    m = env.get_avail_actions()
    assert m[:, 4:9].sum() == 0
    assert (m.sum(axis=1) > 0).all()


def test_reward_example():
    env = MiniHoKEnv(with_dragon(builtin_mode("A"), stationary=True))
    env.reset(seed=0)
    w = env.world
    w.dragon.hp = 39800 + 200
    hp0 = w.dragon.hp
    for h in w.heroes:
        h.pos = (0, 0)
    env.invalidate()
    res = env.step([4] * 5)
    assert res.reward == pytest.approx(0.01 * (hp0 - w.dragon.hp))
    assert res.info["damage"] == hp0 - w.dragon.hp


def test_reward_scale_exact_200_hp():
    from minihok.env import REWARD_SCALE
    assert REWARD_SCALE * (40000 - 39800) == pytest.approx(2.0)


def test_illegal_actions_rejected():
    env = MiniHoKEnv(builtin_mode("A"))
    env.reset(seed=0)
    with pytest.raises(IllegalActionError):
        env.step([4, 0, 0, 0, 0])  # attack out of range
    with pytest.raises(IllegalActionError):
        env.step([13, 0, 0, 0, 0])
    with pytest.raises(IllegalActionError):
        env.step([0, 0, 0])
    # a rejected step leaves the world untouched
    assert env.world.step_index == 0


def test_step_before_reset():
    with pytest.raises(NotResetError):
        MiniHoKEnv(builtin_mode("A")).step([0] * 5)


def test_step_after_done():
    env = MiniHoKEnv(builtin_mode("A", episode_limit=2))
    env.reset(seed=0)
    env.step([0] * 5)
    res = env.step([0] * 5)
    assert res.truncated and not res.terminated
    assert res.info["episode_limit"]
    with pytest.raises(EpisodeOverError):
        env.step([0] * 5)


def test_dragon_kill_terminates():
    env = MiniHoKEnv(with_dragon(builtin_mode("D"), stationary=True, max_hp=100))
    env.reset(seed=0)
    for h in env.world.heroes:
        h.pos = (0, 0)
    env.invalidate()
    res = env.step([4] * 5)
    assert res.terminated and res.info["dragon_dead"]
    assert env.world.dragon.hp == 0
    assert res.reward == pytest.approx(1.0)


def test_single_agent_scenario():
    env = MiniHoKEnv(ScenarioConfig(heroes=(HeroSlot(13301),)))
    obs, state = env.reset(seed=0)
    assert len(obs) == 1 and state.shape == (6,)


def test_seed_policy_per_episode():
    env = MiniHoKEnv(builtin_mode("A", seed_policy="per-episode", randomize_spawns=True), seed=10)
    env.reset()
    first = env.seed
    env.reset()
    assert env.seed == first + 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(list("ABCDEFG")))
def test_mask_matches_oracle_along_random_play(seed, mode):
    env = MiniHoKEnv(builtin_mode(mode))
    env.reset(seed=seed)
    rng = np.random.default_rng(seed)
    while True:
        m = env.get_avail_actions()
        np.testing.assert_array_equal(m, mask_oracle(env.world))
        res = env.step([int(rng.choice(np.flatnonzero(r))) for r in m])
        if res.done:
            break


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_mask_matches_oracle_on_random_states(seed):
    rng = np.random.default_rng(seed)
    w = new_world(builtin_mode("ABCDEFG"[seed % 7]), seed)
    for h in w.heroes:
        h.pos = tuple(int(v) for v in rng.integers(-4000, 4001, 2))
        h.skill_cooldowns = [int(v) for v in rng.integers(0, 3, 3)]
        h.summoner_cooldown = int(rng.integers(0, 2))
        h.alive = bool(rng.random() < 0.8)
    w.dragon.alive = bool(rng.random() < 0.9)
    np.testing.assert_array_equal(availability_mask(w), mask_oracle(w))


def test_terminated_implies_cause():
    for seed in range(20):
        env = MiniHoKEnv(builtin_mode("A"))
        env.reset(seed=seed)
        rng = np.random.default_rng(seed)
        while True:
            res = env.step([int(rng.choice(np.flatnonzero(r))) for r in env.get_avail_actions()])
            if res.done:
                break
        if res.terminated:
            assert res.info["dragon_dead"] or res.info["team_wiped"]
        else:
            assert env.world.step_index == 150
