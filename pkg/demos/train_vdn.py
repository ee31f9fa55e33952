"""
A short VDN run on mode A
=========================

Trains value decomposition for a few hundred episodes with the single-CPU
settings and prints a coarse learning curve next to the random baseline.
Takes about half a minute.
"""

import numpy as np

from minihok import MiniHoKEnv, builtin_mode, run_episode
from minihok.marl import desk_config, train

EPISODES = 300

env = MiniHoKEnv(builtin_mode("A"))
baseline = np.mean([run_episode(env, "random", seed=s)["total_damage"] for s in range(50)])
print(f"random baseline: {baseline:.0f} damage per episode")

res = train("A", "vdn", desk_config(), n_episodes=EPISODES, seed=0)
damage = np.array([row["damage"] for row in res.curve])

# mean damage in blocks of 50 episodes
for start in range(0, EPISODES, 50):
    block = damage[start:start + 50]
    bar = "#" * int(block.mean() / baseline * 4)
    print(f"episodes {start + 1:>4}-{start + len(block):<4} {block.mean():7.0f}  {bar}")

print(f"final 100: {damage[-100:].mean():.0f} ({damage[-100:].mean() / baseline:.1f}x random)")
