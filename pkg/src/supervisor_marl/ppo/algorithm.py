"""Clipped-surrogate PPO over a compiled supervisor environment.

One iteration collects whole episodes until at least ``steps_per_batch``
meta-steps are stored, computes Monte-Carlo rewards-to-go and one-shot
advantages ``G_t - V(s_t)``, then takes ``updates_per_iteration`` full-batch
Adam steps on the actor and, separately, on the critic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..compiler import CompiledEnv
from ..errors import InputError, NonFiniteLossError
from .network import Adam, DenseNetwork, layer_sizes


@dataclass
class PPOConfig:
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    entropy_coef: float = 0.01
    learning_rate: float = 0.0002
    steps_per_episode: int = 1000
    steps_per_batch: int = 10000
    updates_per_iteration: int = 10
    total_steps: int = 5_000_000
    seed: int = 0
    normalize_advantages: bool = True
    precision: str = "float64"

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_epsilon < 1.0:
            raise InputError("clip_epsilon must lie in (0, 1)")
        if not 0.0 < self.gamma <= 1.0:
            raise InputError("gamma must lie in (0, 1]")
        if self.entropy_coef < 0 or self.learning_rate <= 0:
            raise InputError("entropy_coef must be >= 0 and learning_rate > 0")
        for name in ("steps_per_episode", "steps_per_batch", "updates_per_iteration", "total_steps"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be positive")
        if self.precision not in ("float64", "float32"):
            raise InputError("precision must be 'float64' or 'float32'")

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.precision)


@dataclass
class TrajectoryBatch:
    obs: np.ndarray  # (T, M) network inputs actually used
    actions: np.ndarray  # (T,)
    log_probs: np.ndarray  # (T,) behaviour log-probabilities
    rewards: np.ndarray  # (T,) meta-rewards
    dones: np.ndarray  # (T,) True on the last step of each episode segment
    env_stepped: np.ndarray  # (T,)
    episode_returns: List[float] = field(default_factory=list)
    episode_lengths: List[int] = field(default_factory=list)
    rewards_to_go: Optional[np.ndarray] = None
    advantages: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class LossReport:
    actor_loss: float
    critic_loss: float
    entropy: float
    clip_fraction: float


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def forward_policy(actor: DenseNetwork, x: np.ndarray) -> np.ndarray:
    """Action distribution ``pi(.|x)`` (softmax of the actor's output)."""
    return softmax(actor.forward(x))


def sample_action(dist: np.ndarray, rng: np.random.Generator) -> Tuple[int, float]:
    cdf = np.cumsum(dist)
    a = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    a = min(a, len(dist) - 1)
    while dist[a] <= 0.0:  # only reachable through round-off at the cdf's end
        a -= 1
    return a, float(np.log(dist[a]))


def make_networks(obs_size: int, action_count: int, rng: np.random.Generator,
                  dtype=np.float64) -> Tuple[DenseNetwork, DenseNetwork]:
    actor = DenseNetwork(layer_sizes(obs_size, action_count), rng, dtype)
    critic = DenseNetwork(layer_sizes(obs_size, 1), rng, dtype)
    return actor, critic


def collect_rollouts(compiled: CompiledEnv, actor: DenseNetwork, config: PPOConfig,
                     rng: np.random.Generator, greedy: bool = False) -> TrajectoryBatch:
    """Run whole episodes until at least ``steps_per_batch`` meta-steps are stored."""
    obs, actions, logps, rewards, dones, stepped = [], [], [], [], [], []
    returns, lengths = [], []
    while len(actions) < config.steps_per_batch:
        compiled.reset(int(rng.integers(2**31)))
        total, t = 0.0, 0
        while True:
            x = compiled.observe()
            dist = forward_policy(actor, x)
            if greedy:
                a = int(np.argmax(dist))
                lp = float(np.log(dist[a]))
            else:
                a, lp = sample_action(dist, rng)
            res = compiled.step(a)
            t += 1
            total += res.meta_reward
            obs.append(x)
            actions.append(a)
            logps.append(lp)
            rewards.append(res.meta_reward)
            stepped.append(res.env_stepped)
            end = res.terminal or t >= config.steps_per_episode
            dones.append(end)
            if end:
                break
        returns.append(total)
        lengths.append(t)
    return TrajectoryBatch(
        obs=np.asarray(obs, dtype=config.dtype), actions=np.asarray(actions, dtype=np.int64),
        log_probs=np.asarray(logps, dtype=np.float64), rewards=np.asarray(rewards),
        dones=np.asarray(dones, dtype=bool), env_stepped=np.asarray(stepped, dtype=bool),
        episode_returns=returns, episode_lengths=lengths)


def rewards_to_go(rewards: np.ndarray, dones: np.ndarray, gamma: float) -> np.ndarray:
    out = np.zeros(len(rewards))
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        if dones[t]:
            running = 0.0
        running = rewards[t] + gamma * running
        out[t] = running
    return out


def compute_targets(batch: TrajectoryBatch, gamma: float, critic: Optional[DenseNetwork] = None,
                    normalize: bool = True) -> TrajectoryBatch:
    batch.rewards_to_go = rewards_to_go(batch.rewards, batch.dones, gamma)
    values = critic.forward(batch.obs)[:, 0].astype(np.float64) if critic is not None else 0.0
    adv = batch.rewards_to_go - values
    if normalize and len(adv) > 1:
        std = adv.std()
        if std * std >= 1e-8:
            adv = (adv - adv.mean()) / (std + 1e-10)
    batch.advantages = np.asarray(adv, dtype=np.float64)
    return batch


def actor_objective(logits: np.ndarray, actions: np.ndarray, old_log_probs: np.ndarray,
                    advantages: np.ndarray, clip_epsilon: float,
                    entropy_coef: float) -> Tuple[float, np.ndarray, float, float]:
    """Clipped-surrogate loss with entropy bonus and its gradient w.r.t. the logits.

    Returns ``(loss, dloss/dlogits, mean entropy, clipped fraction)``.
    """
    B = len(actions)
    logp_all = log_softmax(logits)
    p = np.exp(logp_all)
    rows = np.arange(B)
    logp = logp_all[rows, actions]
    ratio = np.exp(logp - old_log_probs)
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    unclipped_obj = ratio * advantages
    clipped_obj = clipped * advantages
    surrogate = np.minimum(unclipped_obj, clipped_obj)
    entropy = -(p * logp_all).sum(axis=1)
    loss = -surrogate.mean() - entropy_coef * entropy.mean()

    # Gradient flows through the ratio only where the unclipped term is the minimum.
    active = unclipped_obj <= clipped_obj
    dlogp = np.where(active, -ratio * advantages / B, 0.0)
    onehot = np.zeros_like(p)
    onehot[rows, actions] = 1.0
    dlogits = dlogp[:, None] * (onehot - p)
    dlogits += (entropy_coef / B) * p * (logp_all + entropy[:, None])
    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > clip_epsilon))
    return float(loss), dlogits, float(entropy.mean()), clip_fraction


def critic_objective(values: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    diff = values - targets
    return float(np.mean(diff * diff)), (2.0 / len(diff)) * diff


def ppo_update(actor: DenseNetwork, critic: DenseNetwork, actor_opt: Adam, critic_opt: Adam,
               batch: TrajectoryBatch, config: PPOConfig) -> LossReport:
    if batch.advantages is None or batch.rewards_to_go is None:
        raise InputError("compute_targets must run before ppo_update")
    dtype = config.dtype
    targets = batch.rewards_to_go
    a_losses, c_losses, ents, clips = [], [], [], []
    for _ in range(config.updates_per_iteration):
        logits, a_cache = actor.forward_cached(batch.obs)
        a_loss, dlogits, ent, clip_frac = actor_objective(
            logits.astype(np.float64), batch.actions, batch.log_probs, batch.advantages,
            config.clip_epsilon, config.entropy_coef)
        values, c_cache = critic.forward_cached(batch.obs)
        c_loss, dvalues = critic_objective(values[:, 0].astype(np.float64), targets)
        if not (np.isfinite(a_loss) and np.isfinite(c_loss)):
            raise NonFiniteLossError(f"non-finite loss (actor {a_loss}, critic {c_loss})")
        actor_opt.step(actor.backward(a_cache, dlogits.astype(dtype)))
        critic_opt.step(critic.backward(c_cache, dvalues[:, None].astype(dtype)))
        a_losses.append(a_loss)
        c_losses.append(c_loss)
        ents.append(ent)
        clips.append(clip_frac)
    if not (actor.all_finite() and critic.all_finite()):
        raise NonFiniteLossError("network parameters became non-finite")
    return LossReport(float(np.mean(a_losses)), float(np.mean(c_losses)),
                      float(np.mean(ents)), float(np.mean(clips)))


@dataclass
class IterationStats:
    iteration: int
    meta_steps: int
    episodes: int
    mean_episode_return: float
    mean_actor_loss: float
    mean_critic_loss: float
    entropy: float


class Trainer:
    """Owns the networks, optimisers and random streams of one training run."""

    def __init__(self, compiled: CompiledEnv, config: PPOConfig):
        self.compiled = compiled
        self.config = config
        init_seq, sample_seq = np.random.SeedSequence(config.seed).spawn(2)
        self.rng = np.random.default_rng(sample_seq)
        self.actor, self.critic = make_networks(compiled.observation_size, compiled.meta_action_count,
                                                np.random.default_rng(init_seq), config.dtype)
        self.actor_opt = Adam(self.actor.params(), config.learning_rate)
        self.critic_opt = Adam(self.critic.params(), config.learning_rate)
        self.meta_steps = 0
        self.iteration = 0

    def step(self) -> IterationStats:
        cfg = self.config
        batch = collect_rollouts(self.compiled, self.actor, cfg, self.rng)
        compute_targets(batch, cfg.gamma, self.critic, cfg.normalize_advantages)
        report = ppo_update(self.actor, self.critic, self.actor_opt, self.critic_opt, batch, cfg)
        self.meta_steps += len(batch)
        self.iteration += 1
        return IterationStats(self.iteration, self.meta_steps, len(batch.episode_returns),
                              float(np.mean(batch.episode_returns)), report.actor_loss,
                              report.critic_loss, report.entropy)

    def train(self, callback: Optional[Callable[[IterationStats], None]] = None,
              max_iterations: Optional[int] = None) -> List[IterationStats]:
        history = []
        while self.meta_steps < self.config.total_steps:
            if max_iterations is not None and self.iteration >= max_iterations:
                break
            stats = self.step()
            history.append(stats)
            if callback is not None:
                callback(stats)
        return history
