"""Deterministic heroes-vs-dragon multi-agent environment and MARL kernels."""

__version__ = "0.1.0"

from .agents import damage_breakdown, random_policy, rule_policy, run_episode  # noqa: E402
from .env import N_ACTIONS, OBS_SIZE, MiniHoKEnv, StepResult, availability_mask  # noqa: E402
from .replay import ReplayRecorder, read_replay, resimulate, write_replay  # noqa: E402
from .scenario import (  # noqa: E402
    ScenarioConfig,
    builtin_mode,
    dump_scenario,
    load_scenario,
    stats_at_level,
)

__all__ = [
    "N_ACTIONS", "OBS_SIZE", "MiniHoKEnv", "ReplayRecorder", "ScenarioConfig", "StepResult",
    "availability_mask", "builtin_mode", "damage_breakdown", "dump_scenario", "load_scenario",
    "random_policy", "read_replay", "resimulate", "rule_policy", "run_episode", "stats_at_level",
    "write_replay", "__version__",
]
