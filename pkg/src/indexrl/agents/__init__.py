from .bdqn import BdqnAgent, BdqnConfig, BdqnNet, bdqn_act, bdqn_target, bdqn_targets, bdqn_update
from .replay import ReplayBuffer, ReplayMode, Transition
from .schedule import LinearSchedule
from .spg import (
    PermutationAction,
    SpgAgent,
    SpgConfig,
    SpgNets,
    spg_act,
    spg_actor_update,
    spg_critic_update,
)

__all__ = [
    "BdqnAgent",
    "BdqnConfig",
    "BdqnNet",
    "LinearSchedule",
    "PermutationAction",
    "ReplayBuffer",
    "ReplayMode",
    "SpgAgent",
    "SpgConfig",
    "SpgNets",
    "Transition",
    "bdqn_act",
    "bdqn_target",
    "bdqn_targets",
    "bdqn_update",
    "spg_act",
    "spg_actor_update",
    "spg_critic_update",
]
