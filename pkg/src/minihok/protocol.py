"""Line-delimited JSON client/server protocol.

Every message is one JSON object on one line carrying ``type``,
``protocol_version`` and ``episode_id``. A session serves exactly one episode
in lockstep::

    client                         server
    hello {hero_ids}          ->
                              <-   welcome {env_info, config_hash} | error
    reset {seed, scenario}    ->
                              <-   frame {step_index, obs, state, avail, ...}
    actions {step_index, actions} ->
                              <-   step_ack {reward, terminated, truncated, info, frame} | error
    ...                                 (repeat until done)
                              <-   episode_end {summary}

Each ``actions`` message gets exactly one ``step_ack`` or ``error``. Errors
other than handshake failures leave the episode state unchanged.
"""

from __future__ import annotations

import json
import os
import socket
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .env import IllegalActionError, MiniHoKEnv
from .replay import PROTOCOL_VERSION, ReplayRecorder, dumps
from .scenario import ScenarioConfig

DEFAULT_ENDPOINT = "127.0.0.1:5555"
ERROR_CODES = ("version_mismatch", "config_mismatch", "malformed", "bad_state",
               "step_mismatch", "illegal_action", "episode_over")


class ProtocolError(RuntimeError):
    """An ``error`` message, or a transport failure, surfaced to the caller."""

    def __init__(self, code: str, message: str):
        super().__init__(f"[{code}] {message}")
        self.code = code
        self.message = message


def make_message(kind: str, episode_id: str | None, **fields) -> dict:
    msg = {"type": kind, "protocol_version": PROTOCOL_VERSION, "episode_id": episode_id}
    msg.update(fields)
    return msg


def encode(msg: dict) -> str:
    return dumps(msg) + "\n"


def decode(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError("malformed", f"invalid JSON: {exc.msg}") from None
    if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
        raise ProtocolError("malformed", "message must be an object with a string 'type'")
    return msg


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
    return host or "127.0.0.1", int(port)


# ---------------------------------------------------------------------------
# server side
# ---------------------------------------------------------------------------

class ServerSession:
    """Protocol state machine for one client and one episode.

    ``handle`` maps one incoming line to the list of outgoing messages. It does
    no I/O, so any transport can drive it.
    """

    def __init__(self, scenario: ScenarioConfig, replay_dir: str | os.PathLike | None = None):
        self.scenario = scenario
        self.replay_dir = Path(replay_dir) if replay_dir is not None else None
        self.env = MiniHoKEnv(scenario)
        self.config_hash = scenario.config_hash()
        self.episode_id: str | None = None
        self.state = "handshake"  # -> ready -> running -> finished | closed
        self.recorder: ReplayRecorder | None = None
        self.replay_path: Path | None = None
        self.total_reward = 0.0

    def _error(self, code: str, message: str) -> dict:
        return make_message("error", self.episode_id, code=code, message=message)

    def handle(self, line: str) -> list[dict]:
        try:
            msg = decode(line)
        except ProtocolError as exc:
            return [self._error(exc.code, exc.message)]
        if msg.get("protocol_version") != PROTOCOL_VERSION:
            if self.state == "handshake":
                self.state = "closed"
            return [self._error("version_mismatch",
                                f"server speaks protocol {PROTOCOL_VERSION}, "
                                f"got {msg.get('protocol_version')!r}")]
        handler = getattr(self, f"_on_{msg['type']}", None)
        if handler is None:
            return [self._error("malformed", f"unknown message type {msg['type']!r}")]
        return handler(msg)

    def _on_hello(self, msg: dict) -> list[dict]:
        if self.state != "handshake":
            return [self._error("bad_state", "handshake already done")]
        ids = msg.get("hero_ids")
        if list(ids or []) != list(self.scenario.hero_ids):
            self.state = "closed"
            return [self._error("config_mismatch",
                                f"client hero ids {ids} do not match server {list(self.scenario.hero_ids)}")]
        self.state = "ready"
        return [make_message("welcome", None, config_hash=self.config_hash,
                             env_info=self.env.get_env_info(), mode=self.scenario.mode_id)]

    def _on_reset(self, msg: dict) -> list[dict]:
        if self.state != "ready":
            return [self._error("bad_state", f"reset not allowed in state {self.state}")]
        ref = msg.get("scenario")
        if ref is not None and ref not in (self.config_hash, self.scenario.mode_id):
            return [self._error("config_mismatch", f"server does not host scenario {ref!r}")]
        seed = msg.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            return [self._error("malformed", "seed must be a non-negative integer")]
        self.env.reset(seed=seed)
        self.episode_id = f"{self.config_hash[:12]}-{seed}"
        if self.replay_dir is not None:
            # never clobber an earlier session that replayed the same seed
            self.replay_path = self.replay_dir / f"{self.episode_id}.replay.jsonl"
            k = 1
            while self.replay_path.exists():
                self.replay_path = self.replay_dir / f"{self.episode_id}.{k}.replay.jsonl"
                k += 1
        self.recorder = ReplayRecorder(self.replay_path, episode_id=self.episode_id)
        self.recorder.begin(self.env)
        self.state = "running"
        return [self._frame(False, False)]

    def _frame(self, terminated: bool, truncated: bool) -> dict:
        env = self.env
        return make_message(
            "frame", self.episode_id,
            step_index=env.world.step_index,
            obs=[row.tolist() for row in env.get_obs()],
            state=env.get_state().tolist(),
            avail=env.get_avail_actions().tolist(),
            terminated=terminated, truncated=truncated)

    def _on_actions(self, msg: dict) -> list[dict]:
        if self.state == "finished":
            return [self._error("episode_over", "episode already ended")]
        if self.state != "running":
            return [self._error("bad_state", f"actions not allowed in state {self.state}")]
        step_index = msg.get("step_index")
        current = self.env.world.step_index
        if step_index != current:
            return [self._error("step_mismatch", f"expected step_index {current}, got {step_index!r}")]
        actions = msg.get("actions")
        if (not isinstance(actions, list)
                or not all(isinstance(a, int) and not isinstance(a, bool) for a in actions)):
            return [self._error("malformed", "actions must be a list of integers")]
        try:
            res = self.env.step(actions)
        except IllegalActionError as exc:
            return [self._error("illegal_action", str(exc))]
        self.recorder.record(actions, res)
        self.total_reward += res.reward
        info = {k: v for k, v in res.info.items() if k != "events"}
        info["events"] = [e.to_dict() for e in res.info["events"]]
        out = [make_message("step_ack", self.episode_id, step_index=self.env.world.step_index,
                            reward=res.reward, terminated=res.terminated,
                            truncated=res.truncated, info=info,
                            frame=self._frame(res.terminated, res.truncated))]
        if res.done:
            out.append(self._finish(True, None))
        return out

    def _finish(self, complete: bool, reason: str | None) -> dict:
        replay = self.recorder.end(complete=complete, reason=reason)
        self.state = "finished"
        summary = {"steps": len(replay.records), "total_reward": replay.total_reward,
                   "total_damage": replay.total_damage, "complete": complete,
                   "replay": str(self.replay_path) if self.replay_path else None}
        return make_message("episode_end", self.episode_id, summary=summary)

    def disconnect(self) -> None:
        """Client went away; flag any open episode's replay as partial."""
        if self.state == "running":
            self.recorder.end(complete=False, reason="client_disconnect")
        self.state = "closed"

    @property
    def closed(self) -> bool:
        return self.state in ("closed", "finished")


def serve_connection(rfile, wfile, scenario: ScenarioConfig,
                     replay_dir: str | os.PathLike | None = None) -> ServerSession:
    """Run one session over a pair of text streams."""
    session = ServerSession(scenario, replay_dir)
    try:
        for line in rfile:
            if not line.strip():
                continue
            for out in session.handle(line):
                wfile.write(encode(out))
            wfile.flush()
            if session.closed:
                break
    except (ConnectionError, OSError):
        pass
    finally:
        if not session.closed:
            session.disconnect()
    return session


class TCPServer:
    """Accepts clients sequentially, one episode per connection."""

    def __init__(self, endpoint: str, scenario: ScenarioConfig,
                 replay_dir: str | os.PathLike | None = None):
        host, port = parse_endpoint(endpoint)
        self.scenario = scenario
        self.replay_dir = replay_dir
        self.sock = socket.create_server((host, port))
        self.sessions: list[ServerSession] = []
        self._stop = threading.Event()

    @property
    def endpoint(self) -> str:
        host, port = self.sock.getsockname()[:2]
        return f"{host}:{port}"

    def serve(self, max_sessions: int | None = None) -> None:
        served = 0
        self.sock.settimeout(0.2)
        while not self._stop.is_set() and (max_sessions is None or served < max_sessions):
            try:
                conn, _ = self.sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            conn.settimeout(None)
            with conn, conn.makefile("r", encoding="utf-8") as rf, \
                    conn.makefile("w", encoding="utf-8") as wf:
                self.sessions.append(serve_connection(rf, wf, self.scenario, self.replay_dir))
            served += 1

    def serve_in_thread(self, max_sessions: int | None = None) -> threading.Thread:
        t = threading.Thread(target=self.serve, args=(max_sessions,), daemon=True)
        t.start()
        return t

    def close(self) -> None:
        self._stop.set()
        self.sock.close()


def serve(endpoint: str, scenario: ScenarioConfig, replay_dir: str | os.PathLike | None = None,
          max_sessions: int | None = None) -> TCPServer:
    """Bind ``endpoint`` and serve sessions until ``max_sessions`` are done."""
    server = TCPServer(endpoint, scenario, replay_dir)
    try:
        server.serve(max_sessions)
    finally:
        server.close()
    return server


# ---------------------------------------------------------------------------
# transports and client
# ---------------------------------------------------------------------------

class InProcessTransport:
    """Drives a ``ServerSession`` directly, no sockets involved."""

    def __init__(self, scenario: ScenarioConfig, replay_dir: str | os.PathLike | None = None):
        self.session = ServerSession(scenario, replay_dir)
        self._pending: list[str] = []

    def send(self, line: str) -> None:
        self._pending.extend(encode(m) for m in self.session.handle(line))

    def recv(self) -> str:
        if not self._pending:
            raise ProtocolError("disconnected", "no reply from in-process server")
        return self._pending.pop(0)

    def close(self) -> None:
        if not self.session.closed:
            self.session.disconnect()


class SocketTransport:
    def __init__(self, endpoint: str, timeout: float = 30.0):
        host, port = parse_endpoint(endpoint)
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ProtocolError("connection", f"cannot reach {endpoint}: {exc}") from exc
        self.rfile = self.sock.makefile("r", encoding="utf-8")
        self.wfile = self.sock.makefile("w", encoding="utf-8")

    def send(self, line: str) -> None:
        self.wfile.write(line if line.endswith("\n") else line + "\n")
        self.wfile.flush()

    def recv(self) -> str:
        line = self.rfile.readline()
        if not line:
            raise ProtocolError("disconnected", "server closed the connection")
        return line

    def close(self) -> None:
        for f in (self.rfile, self.wfile):
            try:
                f.close()
            except OSError:
                pass
        self.sock.close()


Policy = Callable[[list[np.ndarray], np.ndarray, dict], Sequence[int]]


@dataclass
class EpisodeSummary:
    episode_id: str
    steps: int
    total_reward: float
    total_damage: int
    server_summary: dict
    lines: list[str] = field(default_factory=list)  # every server line, verbatim


class Client:
    def __init__(self, transport):
        self.transport = transport
        self.lines: list[str] = []

    def request(self, msg: dict) -> dict:
        self.transport.send(encode(msg))
        return self.receive()

    def receive(self) -> dict:
        line = self.transport.recv()
        self.lines.append(line)
        reply = decode(line)
        if reply["type"] == "error":
            raise ProtocolError(reply.get("code", "unknown"), reply.get("message", ""))
        return reply

    def messages(self) -> Iterator[dict]:
        while True:
            yield self.receive()


def client_session(transport, policy: Policy, hero_ids: Sequence[int], seed: int = 0,
                   scenario_ref: str | None = None) -> EpisodeSummary:
    """Handshake, reset, then drive one episode with ``policy``.

    ``transport`` is an endpoint string or an object with send/recv/close.
    ``policy(obs, avail, frame)`` returns one action id per hero.
    """
    own = isinstance(transport, str)
    if own:
        transport = SocketTransport(transport)
    client = Client(transport)
    try:
        client.request(make_message("hello", None, hero_ids=list(hero_ids)))
        frame = client.request(make_message("reset", None, seed=seed, scenario=scenario_ref))
        total_reward = 0.0
        while True:
            obs = [np.asarray(o, dtype=np.float64) for o in frame["obs"]]
            avail = np.asarray(frame["avail"], dtype=np.int8)
            actions = [int(a) for a in policy(obs, avail, frame)]
            ack = client.request(make_message("actions", frame["episode_id"],
                                              step_index=frame["step_index"], actions=actions))
            total_reward += ack["reward"]
            frame = ack["frame"]
            if ack["terminated"] or ack["truncated"]:
                end = client.receive()
                if end["type"] != "episode_end":
                    raise ProtocolError("malformed", f"expected episode_end, got {end['type']}")
                s = end["summary"]
                return EpisodeSummary(end["episode_id"], s["steps"], total_reward,
                                      s["total_damage"], s, client.lines)
    finally:
        if own:
            transport.close()


def random_client_policy(seed: int) -> Policy:
    """Uniform legal actions from a dedicated RNG, for transport checks."""
    from .agents import random_joint_policy

    rng = np.random.default_rng(seed)
    return lambda obs, avail, frame: random_joint_policy(avail, rng)


def rule_client_policy(normalized: bool = True) -> Policy:
    from .agents import rule_policy

    return lambda obs, avail, frame: rule_policy(obs, avail, normalized)


__all__ = [
    "DEFAULT_ENDPOINT", "ERROR_CODES", "Client", "EpisodeSummary", "InProcessTransport",
    "ProtocolError", "ServerSession", "SocketTransport", "TCPServer", "client_session",
    "decode", "encode", "make_message", "parse_endpoint", "random_client_policy",
    "rule_client_policy", "serve", "serve_connection",
]
