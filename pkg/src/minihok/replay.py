"""JSON-lines episode replays: record, read back, re-simulate.

File layout (``*.replay.jsonl``), one JSON object per line::

    {"type": "header", "replay_version": 1, "protocol_version": 1, "seed": ...,
     "config_hash": ..., "scenario": {...}, "initial": {...}, "episode_id": ...}
    {"type": "step", "step_index": 1, "actions": [...], "heroes": [...],
     "dragon": {...}, "events": [...], "reward": ..., "terminated": ..., "truncated": ...}
    ...
    {"type": "end", "complete": true, "reason": null, "steps": N,
     "total_reward": ..., "total_damage": ...}

A missing or ``complete: false`` end line marks a partial replay.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any

from .env import MiniHoKEnv, StepResult
from .scenario import scenario_from_dict

REPLAY_VERSION = 1
PROTOCOL_VERSION = 1


class ReplayError(ValueError):
    pass


class ReplayVersionError(ReplayError):
    pass


class ReplayIntegrityError(ReplayError):
    pass


def dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True)


@dataclass
class Replay:
    header: dict
    records: list[dict] = field(default_factory=list)
    footer: dict | None = None

    @property
    def partial(self) -> bool:
        return self.footer is None or not self.footer.get("complete", False)

    @property
    def total_reward(self) -> float:
        return sum(r["reward"] for r in self.records)

    @property
    def total_damage(self) -> int:
        init = self.header["initial"]["dragon"]["hp"]
        last = self.records[-1]["dragon"]["hp"] if self.records else init
        return init - last

    def lines(self) -> list[str]:
        out = [dumps(self.header)] + [dumps(r) for r in self.records]
        if self.footer is not None:
            out.append(dumps(self.footer))
        return out


class ReplayRecorder:
    """Streams an episode to ``path`` (if given) and keeps it in memory."""

    def __init__(self, path: str | os.PathLike | None = None, episode_id: str | None = None):
        self.path = Path(path) if path is not None else None
        self.episode_id = episode_id
        self.replay: Replay | None = None
        self._fh: IO[str] | None = None
        self._env: MiniHoKEnv | None = None

    def begin(self, env: MiniHoKEnv) -> None:
        world = env.world
        header = {
            "type": "header",
            "replay_version": REPLAY_VERSION,
            "protocol_version": PROTOCOL_VERSION,
            "episode_id": self.episode_id or f"{env.scenario.mode_id or 'custom'}-{env.seed}",
            "seed": env.seed,
            "config_hash": env.scenario.config_hash(),
            "scenario": env.scenario.to_dict(),
            "initial": world.snapshot(),
        }
        self._env = env
        self.replay = Replay(header)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", encoding="utf-8")
            self._write(header)

    def _write(self, obj: dict) -> None:
        if self._fh is not None:
            self._fh.write(dumps(obj) + "\n")
            self._fh.flush()

    def record(self, actions, result: StepResult) -> None:
        world = self._env.world
        rec = {
            "type": "step",
            "step_index": world.step_index,
            "actions": [int(a) for a in actions],
            "heroes": [h.snapshot() for h in world.heroes],
            "dragon": world.dragon.snapshot(),
            "events": [e.to_dict() for e in result.info["events"]],
            "reward": result.reward,
            "terminated": result.terminated,
            "truncated": result.truncated,
        }
        self.replay.records.append(rec)
        self._write(rec)

    def end(self, complete: bool = True, reason: str | None = None) -> Replay:
        if self.replay is None:
            raise ReplayError("recorder was never started")
        if self.replay.footer is None:
            footer = {"type": "end", "complete": complete, "reason": reason,
                      "steps": len(self.replay.records),
                      "total_reward": self.replay.total_reward,
                      "total_damage": self.replay.total_damage}
            self.replay.footer = footer
            self._write(footer)
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        return self.replay


def write_replay(path: str | os.PathLike, replay: Replay) -> None:
    Path(path).write_text("\n".join(replay.lines()) + "\n", encoding="utf-8")


def read_replay(path: str | os.PathLike) -> Replay:
    """Load and integrity-check a replay file."""
    text = Path(path).read_text(encoding="utf-8")
    raw = text.split("\n")
    objs = []
    for n, line in enumerate(raw):
        if not line.strip():
            continue
        try:
            objs.append(json.loads(line))
        except json.JSONDecodeError:
            if all(not rest.strip() for rest in raw[n + 1:]):
                break  # torn final line: treat as a partial file
            raise ReplayError(f"{path}: corrupt line {n + 1}") from None
    if not objs or objs[0].get("type") != "header":
        raise ReplayError(f"{path}: missing header")
    header = objs[0]
    if header.get("replay_version") != REPLAY_VERSION:
        raise ReplayVersionError(f"replay_version {header.get('replay_version')} != {REPLAY_VERSION}")
    if header.get("protocol_version") != PROTOCOL_VERSION:
        raise ReplayVersionError(
            f"protocol_version {header.get('protocol_version')} != {PROTOCOL_VERSION}")
    try:
        scenario = scenario_from_dict(header["scenario"])
    except (KeyError, ValueError) as exc:
        raise ReplayError(f"{path}: bad scenario in header: {exc}") from exc
    if scenario.config_hash() != header.get("config_hash"):
        raise ReplayIntegrityError(f"{path}: config hash does not match the embedded scenario")
    replay = Replay(header)
    last = header["initial"]["step_index"]
    for obj in objs[1:]:
        kind = obj.get("type")
        if kind == "step":
            if replay.footer is not None:
                raise ReplayError(f"{path}: step record after end marker")
            if obj["step_index"] <= last:
                raise ReplayError(f"{path}: step_index not increasing at {obj['step_index']}")
            last = obj["step_index"]
            replay.records.append(obj)
        elif kind == "end":
            replay.footer = obj
        else:
            raise ReplayError(f"{path}: unknown record type {kind!r}")
    return replay


def resimulate(replay: Replay) -> int | None:
    """Re-run the recorded actions from the header seed.

    Returns the first step index whose state differs from the record, or
    ``None`` when every record is reproduced.
    """
    scenario = scenario_from_dict(replay.header["scenario"])
    env = MiniHoKEnv(scenario)
    env.reset(seed=replay.header["seed"])
    if env.world.snapshot() != replay.header["initial"]:
        return 0
    for rec in replay.records:
        res = env.step(rec["actions"])
        world = env.world
        if ([h.snapshot() for h in world.heroes] != rec["heroes"]
                or world.dragon.snapshot() != rec["dragon"]
                or [e.to_dict() for e in res.info["events"]] != rec["events"]
                or res.reward != rec["reward"]):
            return rec["step_index"]
    return None
