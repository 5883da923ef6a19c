from .algorithm import (
    IterationStats,
    LossReport,
    PPOConfig,
    Trainer,
    TrajectoryBatch,
    actor_objective,
    collect_rollouts,
    compute_targets,
    critic_objective,
    forward_policy,
    make_networks,
    ppo_update,
    rewards_to_go,
    sample_action,
    softmax,
)
from .checkpoint import digest_of, load_checkpoint, read_checkpoint, save_checkpoint
from .network import Adam, DenseNetwork, check_gradients, gradient_check, layer_sizes

__all__ = [
    "Adam", "DenseNetwork", "IterationStats", "LossReport", "PPOConfig", "Trainer",
    "TrajectoryBatch", "actor_objective", "check_gradients", "collect_rollouts",
    "compute_targets", "critic_objective", "digest_of", "forward_policy", "gradient_check",
    "layer_sizes", "load_checkpoint", "make_networks", "ppo_update", "read_checkpoint",
    "rewards_to_go", "sample_action", "save_checkpoint", "softmax",
]
