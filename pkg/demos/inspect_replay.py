"""
Recording, checking and dissecting a replay
===========================================

Records one rule-policy episode to a file, re-simulates it from the seed,
and breaks the damage down per agent.
"""

import tempfile
from pathlib import Path

from minihok import MiniHoKEnv, builtin_mode, run_episode
from minihok.agents import damage_breakdown
from minihok.replay import ReplayRecorder, read_replay, resimulate

path = Path(tempfile.mkdtemp()) / "C-rule-3.replay.jsonl"
env = MiniHoKEnv(builtin_mode("C"))
run_episode(env, "rule", seed=3, recorder=ReplayRecorder(path))

rp = read_replay(path)
print(f"{path.name}: {len(rp.records)} steps, {rp.total_damage} damage")

# replaying the recorded actions from the seed must land on the same states
mismatch = resimulate(rp)
print("resimulation:", "identical" if mismatch is None else f"diverges at step {mismatch}")

print("agent  unit    damage  share  idle")
for c in damage_breakdown(rp):
    print(f"{c.agent:<6} {c.unit_id:<7} {c.damage:<7} {c.share:5.2f}  {c.idle_steps}/{c.steps}")
