"""``minihok`` command line: run, train, bench, replay, serve, client, modes.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .agents import damage_breakdown, random_joint_policy, run_episode
from .env import MiniHoKEnv
from .replay import ReplayError, ReplayRecorder, read_replay
from .scenario import MODE_TABLE, ScenarioConfig, ScenarioError, builtin_mode, load_scenario, with_dragon

RUN_SCHEMA = "minihok.run/1"
CURVE_SCHEMA = "minihok.curve/1"
AGGREGATE_SCHEMA = "minihok.curve-aggregate/1"
BENCH_SCHEMA = "minihok.bench/1"
OUT_ENV = "MINIHOK_OUT"
DEFAULT_OUT = "minihok_out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args) -> ScenarioConfig:
    if getattr(args, "scenario", None):
        cfg = load_scenario(Path(args.scenario).read_text(encoding="utf-8"))
    else:
        cfg = builtin_mode(args.mode)
    if getattr(args, "stationary_dragon", False):
        cfg = with_dragon(cfg, stationary=True)
    if getattr(args, "randomize_spawns", False):
        cfg = cfg.replace(randomize_spawns=True)
    return cfg


def _write_csv(path: Path, schema: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema: {schema}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def read_csv(path: str | Path) -> tuple[str, list[dict]]:
    """Read one of the CSVs written here; returns (schema, rows)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# schema: "):
            raise ValueError(f"{path}: missing schema line")
        return first[len("# schema: "):].strip(), list(csv.DictReader(fh))


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if x != x else repr(round(x, 10))
    return str(x)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _resolve_policy(spec: str):
    if spec in ("rule", "random"):
        return spec
    if spec.startswith("checkpoint:"):
        from .marl.learners import checkpoint_policy, load_checkpoint

        path = spec.split(":", 1)[1]
        try:
            learner, _, _ = load_checkpoint(path)
        except (OSError, ValueError, KeyError) as exc:
            raise RuntimeError(f"cannot load checkpoint {path}: {exc}") from exc
        return checkpoint_policy(learner)
    raise UsageError(f"unknown policy {spec!r}; use rule, random or checkpoint:PATH")


def cmd_run(args) -> int:
    policy = _resolve_policy(args.policy)
    cfg = _scenario(args)
    out = _out_dir(args)
    env = MiniHoKEnv(cfg)
    tag = cfg.mode_id or "custom"
    pname = args.policy.split(":", 1)[0]
    rows = []
    for k in range(args.episodes):
        seed = args.seed + k
        rec = None
        if not args.no_replays:
            rec = ReplayRecorder(out / "replays" / f"{tag}-{pname}-{seed}.replay.jsonl",
                                 episode_id=f"{tag}-{pname}-{seed}")
        if hasattr(policy, "reset"):
            policy.reset()
        r = run_episode(env, policy, seed=seed, recorder=rec)
        rows.append([k, seed, r["steps"], r["total_damage"], _fmt(r["reward_sum"]),
                     r["dragon_hp"], r["outcome"], *r["agent_damage"]])
    header = ["episode", "seed", "steps", "total_damage", "reward_sum", "dragon_hp", "outcome",
              *[f"damage_agent{i}" for i in range(cfg.n_agents)]]
    path = out / f"run_{tag}_{pname}.csv"
    _write_csv(path, RUN_SCHEMA, header, rows)
    dmg = [r[3] for r in rows]
    mean = float(np.mean(dmg)) if dmg else 0.0
    print(f"mode {tag} policy {args.policy}: {len(rows)} episodes, mean damage {mean:.1f}")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    from .marl.learners import METHODS, TrainConfig, desk_config, save_checkpoint, train

    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    cfg = _scenario(args)
    out = _out_dir(args)
    tcfg = desk_config() if args.desk else TrainConfig()
    tag = f"{args.method}_{cfg.mode_id or 'custom'}"
    curves = []
    for seed in args.seeds:
        res = train(cfg, args.method, tcfg, n_episodes=args.episodes, seed=seed)
        dmg = np.array([r["damage"] for r in res.curve], dtype=np.float64)
        window = np.array([dmg[max(0, i - 99):i + 1].mean() for i in range(len(dmg))])
        curves.append(window)
        rows = [[r["episode"], r["env_steps"], r["damage"], _fmt(float(window[i])), _fmt(r["loss"])]
                for i, r in enumerate(res.curve)]
        _write_csv(out / f"curve_{tag}_seed{seed}.csv", CURVE_SCHEMA,
                   ["episode", "env_steps", "damage", "mean_damage", "loss"], rows)
        save_checkpoint(out / f"ckpt_{tag}_seed{seed}.npz", res.learner, cfg, tcfg,
                        {"seed": seed, "episodes": args.episodes})
        print(f"{args.method} seed {seed}: final mean damage {res.final_mean_damage():.1f} "
              f"(initial {res.initial_mean_damage:.1f}, {res.wall_seconds:.1f}s)")
    stacked = np.array(curves) if args.episodes else np.zeros((len(args.seeds), 0))
    n = stacked.shape[0]
    mean = stacked.mean(axis=0) if n else np.zeros(0)
    stderr = stacked.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    _write_csv(out / f"curve_{tag}_aggregate.csv", AGGREGATE_SCHEMA,
               ["episode", "mean_damage", "stderr", "n_seeds"],
               [[i + 1, _fmt(float(m)), _fmt(float(s)), n] for i, (m, s) in enumerate(zip(mean, stderr))])
    print(f"wrote curves and checkpoints to {out}")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def bench(cfg: ScenarioConfig, episodes: int, seed: int = 0) -> dict:
    """Single-threaded random-policy throughput, no learning."""
    env = MiniHoKEnv(cfg)
    rng = np.random.default_rng(seed)
    steps = 0
    t0 = time.perf_counter()
    for k in range(episodes):
        env.reset(seed=seed + k)
        while True:
            res = env.step(random_joint_policy(env.get_avail_actions(), rng))
            steps += 1
            if res.done:
                break
    secs = time.perf_counter() - t0
    agent_steps = steps * cfg.n_agents
    return {"episodes": episodes, "steps": steps, "agent_steps": agent_steps, "seconds": secs,
            "episodes_per_sec": episodes / secs if episodes and secs > 0 else 0.0,
            "agent_steps_per_hour": agent_steps / secs * 3600 if steps and secs > 0 else 0.0}


def cmd_bench(args) -> int:
    rep = bench(_scenario(args), args.episodes, args.seed)
    if args.json:
        print(json.dumps({"schema": BENCH_SCHEMA, **rep}, sort_keys=True))
    else:
        print(f"episodes {rep['episodes']}  steps {rep['steps']}  agent-steps {rep['agent_steps']}  "
              f"seconds {rep['seconds']:.3f}")
        print(f"episodes/sec {rep['episodes_per_sec']:.1f}  "
              f"agent-steps/hour {rep['agent_steps_per_hour']:,.0f}")
    return 0


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

def cmd_replay(args) -> int:
    rp = read_replay(args.path)
    views = [v for v in ("summary", "per_agent", "lazy", "timeline") if getattr(args, v)] or ["summary"]
    contrib = damage_breakdown(rp)
    for view in views:
        if view == "summary":
            status = "partial" if rp.partial else "complete"
            print(f"episode {rp.header['episode_id']}  seed {rp.header['seed']}  {status}")
            print(f"steps {len(rp.records)}  total_damage {rp.total_damage}  "
                  f"total_reward {rp.total_reward:.2f}")
        elif view == "per_agent":
            print("agent,unit_id,damage,share,idle_steps,steps,lazy")
            for c in contrib:
                print(f"{c.agent},{c.unit_id},{c.damage},{c.share:.4f},{c.idle_steps},{c.steps},{int(c.lazy)}")
        elif view == "lazy":
            lazy = [c for c in contrib if c.lazy]
            if not lazy:
                print("no lazy agents")
            for c in lazy:
                print(f"LAZY agent {c.agent} (unit {c.unit_id}): 0 damage, "
                      f"idle {c.idle_steps}/{c.steps} steps")
        else:
            print("step,dragon_hp,reward,actions")
            for rec in rp.records:
                print(f"{rec['step_index']},{rec['dragon']['hp']},{rec['reward']:.2f},"
                      f"{' '.join(map(str, rec['actions']))}")
    return 0


# ---------------------------------------------------------------------------
# serve / client / modes
# ---------------------------------------------------------------------------

def cmd_serve(args) -> int:
    from .protocol import TCPServer

    cfg = _scenario(args)
    replay_dir = _out_dir(args) / "replays"
    try:
        server = TCPServer(args.endpoint, cfg, replay_dir)
    except OSError as exc:
        raise RuntimeError(f"cannot bind {args.endpoint}: {exc}") from exc
    print(f"serving mode {cfg.mode_id or 'custom'} on {server.endpoint}; replays in {replay_dir}",
          flush=True)
    try:
        server.serve(args.max_sessions)
    except KeyboardInterrupt:
        print("interrupted; open episode flagged partial", file=sys.stderr)
    finally:
        server.close()
    return 0


def cmd_client(args) -> int:
    from .protocol import client_session, random_client_policy, rule_client_policy

    cfg = _scenario(args)
    if args.policy == "random":
        policy = random_client_policy(args.seed)
    elif args.policy == "rule":
        policy = rule_client_policy(cfg.normalize_obs)
    else:
        raise UsageError("client policy must be rule or random")
    s = client_session(args.endpoint, policy, cfg.hero_ids, seed=args.seed,
                       scenario_ref=cfg.config_hash())
    print(f"episode {s.episode_id}: {s.steps} steps, damage {s.total_damage}, reward {s.total_reward:.2f}")
    return 0


def cmd_modes(args) -> int:
    print("mode  level  skills  equipped  composition  dragon_hp")
    for m, (level, skills, eq, comp, hp) in MODE_TABLE.items():
        kind = "homo" if len(set(comp)) == 1 else "basic"
        print(f"{m:<5} {level:<6} {'/'.join(map(str, skills)):<7} {str(eq).lower():<9} {kind:<12} {hp}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="minihok", description="Heroes-vs-dragon MARL environment tools.")
    p.add_argument("--version", action="version", version=f"minihok {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def scen(sp):
        sp.add_argument("--mode", choices=sorted(MODE_TABLE), default="A")
        sp.add_argument("--scenario", help="scenario YAML file (overrides --mode)")
        sp.add_argument("--stationary-dragon", action="store_true")
        sp.add_argument("--randomize-spawns", action="store_true")

    sp = sub.add_parser("run", help="roll out a baseline or checkpoint policy")
    scen(sp)
    sp.add_argument("--policy", default="rule", help="rule | random | checkpoint:PATH")
    sp.add_argument("--episodes", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--no-replays", action="store_true")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("train", help="train a MARL method")
    scen(sp)
    sp.add_argument("--method", required=True)
    sp.add_argument("--episodes", type=int, default=100)
    sp.add_argument("--seeds", type=int, nargs="+", default=[0])
    sp.add_argument("--desk", action="store_true", help="single-CPU budget settings")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("bench", help="environment throughput")
    scen(sp)
    sp.add_argument("--episodes", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("replay", help="inspect a replay file")
    sp.add_argument("path")
    sp.add_argument("--summary", action="store_true")
    sp.add_argument("--per-agent", dest="per_agent", action="store_true")
    sp.add_argument("--lazy", action="store_true")
    sp.add_argument("--timeline", action="store_true")
    sp.set_defaults(fn=cmd_replay)

    sp = sub.add_parser("serve", help="host episodes over TCP")
    scen(sp)
    sp.add_argument("--endpoint", default="127.0.0.1:5555")
    sp.add_argument("--max-sessions", type=int)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_serve)

    sp = sub.add_parser("client", help="play one episode against a server")
    scen(sp)
    sp.add_argument("--endpoint", default="127.0.0.1:5555")
    sp.add_argument("--policy", default="random")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_client)

    sp = sub.add_parser("modes", help="list the preset scenarios")
    sp.set_defaults(fn=cmd_modes)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_help(sys.stderr)
        return 1
    for name in ("episodes", "max_sessions"):
        v = getattr(args, name, None)
        if v is not None and v < 0:
            print(f"minihok: error: --{name.replace('_', '-')} must be non-negative", file=sys.stderr)
            return 1
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"minihok: error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError, ReplayError, ScenarioError, ValueError) as exc:
        print(f"minihok: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
