"""Desk-scale MARL kernels: autograd, mixers, objectives, buffers, training."""

from .gradcheck import grad_check
from .learners import (METHODS, TrainConfig, desk_config, load_checkpoint, save_checkpoint,
                       train)
from .mixers import QattenMixer, QMixer, QPLEXMixer, qmix_mix, qplex_q, vdn_mix
from .ppo import happo_update, mappo_clip_loss
from .returns import epsilon_schedule, gae, select_actions_eps_greedy, td_lambda_targets

__all__ = [
    "METHODS", "QMixer", "QPLEXMixer", "QattenMixer", "TrainConfig", "desk_config",
    "epsilon_schedule", "gae", "grad_check", "happo_update", "load_checkpoint",
    "mappo_clip_loss", "qmix_mix", "qplex_q", "save_checkpoint", "select_actions_eps_greedy",
    "td_lambda_targets", "train", "vdn_mix",
]
