"""
Heroes against the dragon, by hand
==================================

Build an environment, look at what one agent sees, and compare the two
scripted baselines across the preset modes.
"""

import numpy as np

from minihok import MiniHoKEnv, builtin_mode, run_episode
from minihok.env import ACTION_NAMES

# mode A: five level-1 heroes, no skills, no items
env = MiniHoKEnv(builtin_mode("A"))
obs, state = env.reset(seed=0)
print("obs of agent 0 :", np.round(obs[0], 3))
print("state length   :", state.shape[0])

# which actions can agent 0 take right now?
mask = env.get_avail_actions()[0]
print("legal actions  :", [ACTION_NAMES[a] for a in np.flatnonzero(mask)])

# one step of everyone walking up
res = env.step([0] * env.n_agents)
print("reward after one step:", res.reward, "terminated:", res.terminated)

# random vs rule, ten episodes each, in every mode
print()
print("mode  random   rule")
for mode in "ABCDEFG":
    env = MiniHoKEnv(builtin_mode(mode))
    rnd = np.mean([run_episode(env, "random", seed=s)["total_damage"] for s in range(10)])
    rule = np.mean([run_episode(env, "rule", seed=s)["total_damage"] for s in range(10)])
    print(f"{mode:<5} {rnd:7.0f} {rule:7.0f}")
