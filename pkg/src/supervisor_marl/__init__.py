"""Sequential construction of joint actions for cooperative multi-agent RL.

A supervisor meta-agent assigns one individual action per meta-step, in agent
order, turning an ``n``-agent environment with ``|A|**n`` joint actions into
a single-agent MDP with ``|A|`` actions.
"""

from .compiler import (
    CompiledEnv,
    MetaStepResult,
    decision_state_count,
    initial_meta_state,
    joint_action_space_size,
    meta_state_space_size,
    reachable_decision_states,
    step,
)
from .core import (
    AssignmentList,
    EnvStepResult,
    MetaState,
    MultiAgentEnv,
    count_unassigned,
    encode_meta_observation,
    first_unassigned,
)
from .envs import CombatEnv, SwitchEnv, TrafficJunctionEnv, make_env

__version__ = "0.1.0"

__all__ = [
    "AssignmentList", "CombatEnv", "CompiledEnv", "EnvStepResult", "MetaState", "MetaStepResult",
    "MultiAgentEnv", "SwitchEnv", "TrafficJunctionEnv", "count_unassigned",
    "decision_state_count", "encode_meta_observation", "first_unassigned", "initial_meta_state",
    "joint_action_space_size", "make_env", "meta_state_space_size", "reachable_decision_states",
    "step",
]
