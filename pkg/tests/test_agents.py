import numpy as np
import pytest

from minihok.agents import damage_breakdown, random_joint_policy, random_policy, rule_policy, run_episode
from minihok.env import MiniHoKEnv
from minihok.replay import ReplayRecorder
from minihok.scenario import HeroSlot, ScenarioConfig, builtin_mode, with_dragon


def test_random_policy_uniform_over_legal():
    mask = np.array([1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1])
    rng = np.random.default_rng(0)
    draws = np.array([random_policy(mask, rng) for _ in range(40000)])
    assert set(draws) == {0, 2, 8, 12}
    freq = np.bincount(draws, minlength=13)[[0, 2, 8, 12]] / len(draws)
    assert np.all(np.abs(freq - 0.25) < 0.02)


def test_random_policy_all_zero_mask():
    with pytest.raises(ValueError):
        random_policy(np.zeros(13), np.random.default_rng(0))


def test_rule_policy_legal_everywhere():
    env = MiniHoKEnv(builtin_mode("D"))
    obs, _ = env.reset(seed=1)
    while True:
        avail = env.get_avail_actions()
        acts = rule_policy(obs, avail)
        assert all(avail[i, a] for i, a in enumerate(acts))
        res = env.step(acts)
        obs = env.get_obs()
        if res.done:
            break


def test_rule_policy_prefers_skill_in_range():
    env = MiniHoKEnv(with_dragon(builtin_mode("D"), stationary=True))
    obs, _ = env.reset(seed=0)
    for h in env.world.heroes:
        h.pos = (0, 0)
    env.invalidate()
    acts = rule_policy(env.get_obs(), env.get_avail_actions())
    assert acts == [7] * 5


def test_rule_policy_approaches():
    env = MiniHoKEnv(with_dragon(builtin_mode("A"), stationary=True))
    env.reset(seed=0)
    d0 = [np.hypot(*h.pos) for h in env.world.heroes]
    for _ in range(3):
        env.step(rule_policy(env.get_obs(), env.get_avail_actions()))
    d1 = [np.hypot(*h.pos) for h in env.world.heroes]
    # everyone who started out of range got closer
    for i in (0, 2, 3, 4):
        assert d1[i] < d0[i]


def test_rule_policy_raw_observations():
    env = MiniHoKEnv(with_dragon(builtin_mode("A", normalize_obs=False), stationary=True))
    s = run_episode(env, "rule", seed=0)
    assert s["total_damage"] > 0


def test_run_episode_summary_consistent():
    env = MiniHoKEnv(builtin_mode("B"))
    s = run_episode(env, "random", seed=3)
    assert s["reward_sum"] == pytest.approx(0.01 * s["total_damage"])
    assert sum(s["agent_damage"]) == s["total_damage"]
    assert s["dragon_hp"] == 40000 - s["total_damage"]
    assert s["outcome"] in {"dragon_dead", "team_wiped", "time_limit"}


def test_run_episode_deterministic():
    env = MiniHoKEnv(builtin_mode("C"))
    assert run_episode(env, "random", seed=8) == run_episode(env, "random", seed=8)


def test_unknown_policy():
    with pytest.raises(ValueError):
        run_episode(MiniHoKEnv(builtin_mode("A")), "greedy", seed=0)


def test_joint_policy_shape():
    avail = np.ones((5, 13), dtype=np.int8)
    assert len(random_joint_policy(avail, np.random.default_rng(0))) == 5


def _record(cfg, policy, seed=0):
    env = MiniHoKEnv(cfg)
    rec = ReplayRecorder()
    summary = run_episode(env, policy, seed=seed, recorder=rec)
    return rec.replay, summary


def test_breakdown_single_agent_share_is_one():
    cfg = with_dragon(ScenarioConfig(heroes=(HeroSlot(13301),)), stationary=True)
    rp, _ = _record(cfg, "rule")
    (c,) = damage_breakdown(rp)
    assert c.damage > 0 and c.share == 1.0 and not c.lazy


def test_breakdown_sums_to_total():
    rp, summary = _record(builtin_mode("C"), "rule", seed=2)
    parts = damage_breakdown(rp)
    assert sum(c.damage for c in parts) == summary["total_damage"]
    assert [c.damage for c in parts] == summary["agent_damage"]
    assert sum(c.share for c in parts) == pytest.approx(1.0)


def test_breakdown_flags_idle_agent():
    cfg = with_dragon(builtin_mode("D"), stationary=True)

    def policy(obs, avail):
        acts = rule_policy(obs, avail)
        acts[3] = 10  # right_up: away from the dragon from spawn point 4
        return acts

    rp, _ = _record(cfg, policy)
    parts = damage_breakdown(rp)
    assert parts[3].lazy and parts[3].idle_steps == parts[3].steps
    assert not any(p.lazy for i, p in enumerate(parts) if i != 3)
