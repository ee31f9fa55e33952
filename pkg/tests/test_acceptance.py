"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` to see the lines; the learning
check is marked ``slow`` and takes roughly a quarter of an hour on one core.
"""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from minihok.agents import run_episode
from minihok.cli import bench
from minihok.engine import compute_basic_damage, new_world
from minihok.env import MiniHoKEnv, availability_mask
from minihok.marl.autograd import parameter
from minihok.marl.gradcheck import grad_check
from minihok.marl.learners import desk_config, train
from minihok.marl.mixers import QattenMixer, QMixer, QPLEXMixer, VDNMixer
from minihok.marl.nn import RNNAgent
from minihok.marl.ppo import (
    categorical_entropy,
    happo_agent_loss,
    mappo_clip_loss,
    masked_log_softmax,
    policy_ratio,
)
from minihok.protocol import (
    InProcessTransport,
    ProtocolError,
    TCPServer,
    client_session,
    random_client_policy,
)
from minihok.replay import ReplayRecorder, read_replay, resimulate
from minihok.scenario import builtin_mode, dragon_spec, get_hero, stats_at_level

from oracles import DRAGON_ANCHOR, HERO_IDS, hero_anchor, mask_oracle

MODES = "ABCDEFG"


@contextmanager
def criterion(capsys, number, title):
    """Print one PASS/FAIL line for the enclosed check, whatever happens."""
    detail = []
    status = "FAIL"
    try:
        yield detail
        status = "PASS"
    finally:
        with capsys.disabled():
            extra = f" ({'; '.join(detail)})" if detail else ""
            print(f"\n[acceptance] {number:>2} {title}: {status}{extra}")


# 1 ---------------------------------------------------------------------------

def test_01_dimensional_contract(capsys):
    with criterion(capsys, 1, "obs/state/action dimensions") as d:
        env = MiniHoKEnv(builtin_mode("A"))
        obs, state = env.reset(seed=0)
        obs, state = np.asarray(obs), np.asarray(state)
        info = env.get_env_info()
        d.append(f"obs {obs.shape[1]}, state {state.shape[0]}, actions {info['n_actions']}")
        assert obs.shape == (5, 6)
        assert state.shape == (30,)
        assert info["obs_shape"] == 6 and info["state_shape"] == 30 and info["n_actions"] == 13
        assert env.get_avail_actions().shape == (5, 13)


# 2 ---------------------------------------------------------------------------

def test_02_reward_identity(capsys):
    with criterion(capsys, 2, "reward identity over 100 random episodes per mode") as d:
        rng = np.random.default_rng(0)
        bad = 0
        episodes = 0
        for mode in MODES:
            env = MiniHoKEnv(builtin_mode(mode))
            for seed in range(100):
                env.reset(seed=seed)
                start_hp = env.world.dragon.hp
                reward_sum, damage = 0.0, 0
                while True:
                    before = env.world.dragon.hp
                    acts = [int(rng.choice(np.flatnonzero(r))) for r in env.get_avail_actions()]
                    res = env.step(acts)
                    step_dmg = before - env.world.dragon.hp
                    bad += res.reward != 0.01 * step_dmg
                    bad += step_dmg != int(np.sum(res.info["agent_damage"]))
                    reward_sum += res.reward
                    damage += step_dmg
                    if res.done:
                        break
                episodes += 1
                bad += damage != start_hp - env.world.dragon.hp
                bad += damage != env.world.cumulative_dragon_damage
                bad += round(reward_sum * 100) != damage
                bad += not math.isclose(reward_sum, 0.01 * damage, rel_tol=0, abs_tol=1e-9)
        d.append(f"{episodes} episodes, {bad} mismatches")
        assert bad == 0


# 3 ---------------------------------------------------------------------------

def test_03_determinism(tmp_path, capsys):
    with criterion(capsys, 3, "bitwise-identical replays and re-simulation") as d:
        pairs = [(seed, MODES[k % 7]) for k, seed in enumerate(range(100, 120))]
        identical = resim_ok = 0
        for seed, mode in pairs:
            paths = []
            for rep in range(2):
                p = tmp_path / f"{mode}-{seed}-{rep}.jsonl"
                run_episode(MiniHoKEnv(builtin_mode(mode)), "random", seed=seed,
                            rng=np.random.default_rng(seed), recorder=ReplayRecorder(p))
                paths.append(p)
            identical += paths[0].read_bytes() == paths[1].read_bytes()
            resim_ok += resimulate(read_replay(paths[0])) is None
        d.append(f"{identical}/20 identical, {resim_ok}/20 re-simulated")
        assert identical == 20 and resim_ok == 20


# 4 ---------------------------------------------------------------------------

def test_04_stat_table_fidelity(capsys):
    with criterion(capsys, 4, "stat anchors at levels 3 and 15") as d:
        cells = wrong = 0
        for uid in HERO_IDS:
            for level in (3, 15):
                got = stats_at_level(get_hero(uid), level).to_dict()
                want = hero_anchor(uid, level)
                cells += len(want)
                wrong += sum(got[k] != v for k, v in want.items())
        got = dragon_spec().stats.to_dict()
        cells += len(DRAGON_ANCHOR)
        wrong += sum(got[k] != v for k, v in DRAGON_ANCHOR.items())
        d.append(f"{cells} cells, {wrong} wrong")
        assert wrong == 0


# 5 ---------------------------------------------------------------------------

def test_05_mask_soundness(capsys):
    with criterion(capsys, 5, "availability mask vs brute force on 10^4 states") as d:
        rng = np.random.default_rng(5)
        worlds = {m: new_world(builtin_mode(m), 0) for m in MODES}
        mismatches = 0
        for k in range(10_000):
            w = worlds[MODES[k % 7]]
            for h in w.heroes:
                h.pos = tuple(int(v) for v in rng.integers(-12000, 12001, 2))
                h.skill_cooldowns = [int(v) for v in rng.integers(0, 4, 3)]
                h.summoner_cooldown = int(rng.integers(0, 3))
                h.alive = bool(rng.random() < 0.85)
            w.dragon.pos = tuple(int(v) for v in rng.integers(-3000, 3001, 2))
            w.dragon.alive = bool(rng.random() < 0.9)
            mismatches += int((availability_mask(w) != mask_oracle(w)).any())
        d.append(f"{mismatches} mismatching states")
        assert mismatches == 0


# 6 ---------------------------------------------------------------------------

def test_06_crit_statistics(capsys):
    with criterion(capsys, 6, "crit fraction for crit_rate 2008") as d:
        wukong = stats_at_level(get_hero(16701), 15)
        assert wukong.crit_rate == 2008
        target = dragon_spec().stats
        rng = np.random.default_rng(2008)
        n = 100_000
        crits = sum(compute_basic_damage(wukong, target, rng).crit for _ in range(n))
        frac = crits / n
        d.append(f"fraction {frac:.4f} over {n} attacks")
        assert abs(frac - 0.2008) <= 0.004


# 7 ---------------------------------------------------------------------------

N, S, F = 3, 8, 4


def test_07_mixer_properties(capsys):
    with criterion(capsys, 7, "mixer monotonicity, identities and IGM") as d:
        rng = np.random.default_rng(7)
        h = 1e-5

        # QMIX: every partial derivative in Q_i is non-negative
        worst = np.inf
        for _ in range(1000):
            m = QMixer(N, S, np.random.default_rng(int(rng.integers(2**31))))
            q, s = rng.normal(size=(1, N)) * 5, rng.normal(size=(1, S))
            for i in range(N):
                dq = np.zeros((1, N))
                dq[0, i] = h
                fd = (m(q + dq, s).data[0] - m(q - dq, s).data[0]) / (2 * h)
                worst = min(worst, fd)
        d.append(f"qmix min dQ/dq {worst:.2e}")
        assert worst >= -1e-8

        # VDN is the plain sum
        q = rng.normal(size=(500, N)) * 10
        vdn_err = float(np.abs(VDNMixer()(q, None).data - q.sum(axis=1)).max())
        d.append(f"vdn err {vdn_err:.1e}")
        assert vdn_err <= 1e-10

        # QPLEX: averaging agent i's action under the advantage stream leaves V
        qplex_err = 0.0
        A = 5
        for _ in range(200):
            m = QPLEXMixer(N, S, np.random.default_rng(int(rng.integers(2**31))))
            allq, s = rng.normal(size=(1, N, A)), rng.normal(size=(1, S))
            base = allq.mean(axis=-1)
            v = m.value(allq, s).data
            for i in range(N):
                vals = []
                for a in range(A):
                    qq = base.copy()
                    qq[:, i] = allq[:, i, a]
                    vals.append(m(qq, s, all_qs=allq).data)
                qplex_err = max(qplex_err, float(np.abs(np.mean(vals, axis=0) - v).max()))
        d.append(f"qplex err {qplex_err:.1e}")
        assert qplex_err <= 1e-10

        # QATTEN: each head's attention sums to one over agents
        qatten_err = 0.0
        for _ in range(200):
            m = QattenMixer(N, S, F, np.random.default_rng(int(rng.integers(2**31))))
            heads, _ = m.attention(rng.normal(size=(4, S)), rng.normal(size=(4, N, F)))
            for hd in heads:
                qatten_err = max(qatten_err, float(np.abs(hd.data.sum(axis=-1) - 1).max()))
        d.append(f"qatten err {qatten_err:.1e}")
        assert qatten_err <= 1e-8

        # IGM by enumerating all 9 joint actions
        igm_fail = 0
        for k in range(200):
            seed = int(rng.integers(2**31))
            mixer = [VDNMixer(), QMixer(2, S, np.random.default_rng(seed)),
                     QPLEXMixer(2, S, np.random.default_rng(seed)),
                     QattenMixer(2, S, F, np.random.default_rng(seed))]
            allq = rng.normal(size=(1, 2, 3))
            s, f = rng.normal(size=(1, S)), rng.normal(size=(1, 2, F))
            greedy = tuple(allq[0].argmax(axis=-1))
            for mx in mixer:
                joint = {(a, b): float(mx(np.array([[allq[0, 0, a], allq[0, 1, b]]]), s,
                                          all_qs=allq, agent_feats=f).data[0])
                         for a, b in itertools.product(range(3), range(3))}
                igm_fail += max(joint, key=joint.get) != greedy
        d.append(f"igm failures {igm_fail}/800")
        assert igm_fail == 0


# 8 ---------------------------------------------------------------------------

def _policy_problem(rng, B=8, A=6):
    logits = parameter(rng.normal(size=(B, A)))
    avail = (rng.random((B, A)) < 0.7).astype(np.int8)
    avail[:, 0] = 1
    actions = np.array([np.flatnonzero(r)[rng.integers(r.sum())] for r in avail])
    old = masked_log_softmax(parameter(rng.normal(size=(B, A))), avail).data[np.arange(B), actions]
    return logits, avail, actions, old, rng.normal(size=B), np.ones(B)


def test_08_gradient_checks(capsys):
    with criterion(capsys, 8, "analytic vs finite-difference gradients") as d:
        rng = np.random.default_rng(8)
        reports = {}

        q = parameter(rng.normal(size=(3, N)))
        allq, s, f = rng.normal(size=(3, N, 5)), rng.normal(size=(3, S)), rng.normal(size=(3, N, F))
        qmix = QMixer(N, S, rng)
        reports["qmix"] = grad_check(lambda: (qmix(q, s) ** 2).sum(), [q] + qmix.parameters(),
                                     max_entries=40, rng=rng)
        qatten = QattenMixer(N, S, F, rng)
        reports["qatten"] = grad_check(lambda: (qatten(q, s, agent_feats=f) ** 2).sum(),
                                       [q] + qatten.parameters(), max_entries=40, rng=rng)
        qplex = QPLEXMixer(N, S, rng)
        allq_p = parameter(allq)
        reports["qplex value"] = grad_check(lambda: (qplex.value(allq_p, s) ** 2).sum(),
                                            [allq_p] + qplex.parameters(), max_entries=40, rng=rng)
        reports["qplex q_tot"] = grad_check(lambda: (qplex(q, s, all_qs=allq_p) ** 2).sum(),
                                            [q, allq_p] + qplex.parameters(), max_entries=40, rng=rng)

        logits, avail, actions, old, adv, mask = _policy_problem(rng)

        def mappo():
            lp = masked_log_softmax(logits, avail)
            r = policy_ratio(lp.take(actions[:, None], axis=-1), old)
            return mappo_clip_loss(r, adv, 0.2, mask, categorical_entropy(lp), 0.01)

        reports["mappo"] = grad_check(mappo, [logits], rng=rng)
        factor = rng.uniform(0.7, 1.3, size=len(adv))

        def happo():
            lp = masked_log_softmax(logits, avail)
            r = policy_ratio(lp.take(actions[:, None], axis=-1), old)
            return happo_agent_loss(r, adv, factor, 0.2, mask, categorical_entropy(lp), 0.01)

        reports["happo"] = grad_check(happo, [logits], rng=rng)

        agent = RNNAgent(10, 13, rng, hidden=8)
        xs = rng.normal(size=(4, 6, 10))

        def unrolled():
            hid = agent.init_hidden(6)
            total = None
            for t in range(4):
                out, hid = agent(xs[t], hid)
                term = (out ** 2).sum()
                total = term if total is None else total + term
            return total

        reports["rnn agent"] = grad_check(unrolled, agent.parameters(), max_entries=60, rng=rng)
        d.append(", ".join(f"{k} {r.max_rel_error:.1e}" for k, r in reports.items()))
        for k, r in reports.items():
            assert r.max_rel_error < 1e-4, f"{k}: {r}"


# 9 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_09_learning_sanity(capsys):
    with criterion(capsys, 9, "VDN/QMIX >= 1.5x and MAPPO >= 1.2x random on mode A") as d:
        t0 = time.process_time()
        env = MiniHoKEnv(builtin_mode("A"))
        rng = np.random.default_rng(99)
        baseline = float(np.mean([run_episode(env, "random", seed=10_000 + k, rng=rng)["total_damage"]
                                  for k in range(200)]))
        d.append(f"random {baseline:.0f}")
        cfg = desk_config()
        passed = {}
        for method, factor in (("vdn", 1.5), ("qmix", 1.5), ("mappo", 1.2)):
            finals = [train("A", method, cfg, n_episodes=2000, seed=s).final_mean_damage()
                      for s in range(5)]
            ratios = [f / baseline for f in finals]
            passed[method] = sum(r >= factor for r in ratios)
            d.append(f"{method} " + "/".join(f"{r:.1f}x" for r in ratios))
        cpu = time.process_time() - t0
        d.append(f"cpu {cpu / 60:.1f} min")
        assert all(n >= 3 for n in passed.values()), passed
        assert cpu <= 30 * 60


# 10 --------------------------------------------------------------------------

def test_10_mode_ordering(capsys):
    with criterion(capsys, 10, "rule-policy damage A<B<C<D and G >= 10x F") as d:
        mean = {}
        for mode in "ABCDFG":
            env = MiniHoKEnv(builtin_mode(mode))
            mean[mode] = float(np.mean([run_episode(env, "rule", seed=s)["total_damage"]
                                        for s in range(50)]))
        d.append(", ".join(f"{m} {v:.0f}" for m, v in mean.items()))
        assert mean["A"] < mean["B"] < mean["C"] < mean["D"]
        assert mean["G"] >= 10 * mean["F"]


# 11 --------------------------------------------------------------------------

def test_11_throughput(capsys):
    with criterion(capsys, 11, "single-thread agent-steps/hour >= 0.5e6") as d:
        rep = bench(builtin_mode("A"), 300)
        d.append(f"{rep['agent_steps_per_hour']:,.0f} agent-steps/hour "
                 f"({rep['episodes_per_sec']:.0f} episodes/s)")
        assert rep["agent_steps_per_hour"] >= 0.5e6


# 12 --------------------------------------------------------------------------

def test_12_protocol_equivalence(capsys):
    with criterion(capsys, 12, "socket == in-process; mismatched config rejected") as d:
        mode = builtin_mode("C")
        ids = list(mode.hero_ids)
        same = 0
        for seed in range(5):
            server = TCPServer("127.0.0.1:0", mode)
            server.serve_in_thread(max_sessions=1)
            try:
                tcp = client_session(server.endpoint, random_client_policy(seed), ids, seed=seed)
            finally:
                server.close()
            local = client_session(InProcessTransport(mode), random_client_policy(seed), ids, seed=seed)
            same += tcp.lines == local.lines and len(tcp.lines) > 2
        d.append(f"{same}/5 trajectories identical")
        assert same == 5

        rejected = 0
        server = TCPServer("127.0.0.1:0", mode)
        server.serve_in_thread(max_sessions=2)
        try:
            for kwargs in ({"hero_ids": ids[::-1]},
                           {"hero_ids": ids, "scenario_ref": builtin_mode("G").config_hash()}):
                try:
                    client_session(server.endpoint, random_client_policy(0), seed=0, **kwargs)
                except ProtocolError as exc:
                    rejected += exc.code == "config_mismatch"
        finally:
            server.close()
        d.append(f"{rejected}/2 mismatches rejected")
        assert rejected == 2
