"""Domain types shared by the compiler, the environments and the trainer.

Individual actions are plain ``int`` indices into the shared action set ``A``
and a joint action is a tuple of ``n`` such indices, ordered by agent.  The
one structured type is :class:`AssignmentList`, the partially filled joint
action the supervisor carries between meta-steps.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractViolation, InputError

AgentAction = int
JointAction = Tuple[int, ...]

INDIVIDUAL = "individual"
COLLECTIVE = "collective"
OBSERVATION_MODES = (INDIVIDUAL, COLLECTIVE)


@dataclass(frozen=True)
class AssignmentList:
    """Length-``n`` sequence of assigned action indices, ``None`` = unassigned.

    Assignments are made in agent order, so the assigned slots always form a
    prefix of the list.
    """

    slots: Tuple[Optional[int], ...]

    def __post_init__(self) -> None:
        seen_gap = False
        for slot in self.slots:
            if slot is None:
                seen_gap = True
            elif seen_gap:
                raise InputError(f"assignments must form a prefix: {self.slots}")

    @classmethod
    def empty(cls, n: int) -> "AssignmentList":
        return cls((None,) * n)

    @property
    def n(self) -> int:
        return len(self.slots)

    @property
    def assigned(self) -> Tuple[int, ...]:
        return tuple(s for s in self.slots if s is not None)

    def is_full(self) -> bool:
        return all(s is not None for s in self.slots)

    def assign(self, action: int) -> "AssignmentList":
        k = first_unassigned(self)
        return AssignmentList(self.slots[:k] + (action,) + self.slots[k + 1:])

    def as_joint_action(self) -> JointAction:
        if not self.is_full():
            raise ContractViolation("joint action requested from an incomplete assignment list")
        return tuple(self.slots)  # type: ignore[arg-type]

    def label(self) -> str:
        return "(" + ",".join("-" if s is None else f"a_{s}" for s in self.slots) + ")"


@dataclass(frozen=True)
class MetaState:
    """Compiled-MDP state: an environment state plus the pending assignments."""

    env_state: Any
    assignments: AssignmentList


@dataclass(frozen=True)
class EnvStepResult:
    next_state: Any
    rewards: Tuple[float, ...]
    terminal: bool


def count_unassigned(assignments: AssignmentList) -> int:
    return sum(1 for s in assignments.slots if s is None)


def first_unassigned(assignments: AssignmentList) -> int:
    """Index of the first unassigned slot; equals the number of assigned slots."""
    for k, slot in enumerate(assignments.slots):
        if slot is None:
            return k
    raise ContractViolation("assignment list is already full")


def encode_assignments(assignments: AssignmentList, action_count: int) -> np.ndarray:
    # -1 marks an empty slot; assigned indices are scaled into [0, 1].
    scale = 1.0 / (action_count - 1) if action_count > 1 else 0.0
    return np.array(
        [-1.0 if s is None else s * scale for s in assignments.slots], dtype=np.float64
    )


def encode_meta_observation(
    obs: Sequence[float], assignments: AssignmentList, action_count: int
) -> np.ndarray:
    """Concatenate an environment observation with the assignment encoding.

    The result has length ``len(obs) + n`` and is the network input of size
    ``M = |s| + n``.
    """
    return np.concatenate([np.asarray(obs, dtype=np.float64),
                           encode_assignments(assignments, action_count)])


class MultiAgentEnv(ABC):
    """Cooperative environment in which ``n`` agents act simultaneously.

    Subclasses keep their whole dynamic state in an immutable value exposed
    through :attr:`state`, so a snapshot is just a reference and
    :meth:`set_state` can rewind the environment within an episode.
    """

    n: int
    action_count: int
    name: str = "env"

    @abstractmethod
    def reset(self, seed: int) -> Any:
        """Start a new episode and return the initial state."""

    @abstractmethod
    def execute(self, joint_action: Sequence[int]) -> EnvStepResult:
        """Apply one joint action (one environment time step)."""

    @abstractmethod
    def observe(self, mode: str = INDIVIDUAL) -> np.ndarray:
        """Feature vector for the current state, components in [-1, 1]."""

    @abstractmethod
    def observation_size(self, mode: str = INDIVIDUAL) -> int:
        ...

    @abstractmethod
    def render(self) -> str:
        ...

    @property
    @abstractmethod
    def state(self) -> Any:
        ...

    @abstractmethod
    def set_state(self, state: Any) -> None:
        ...

    def reported_reward(self, summed_reward: float) -> float:
        """Episode score used in evaluation tables; defaults to the team sum."""
        return summed_reward

    def check_joint_action(self, joint_action: Sequence[int]) -> JointAction:
        ja = tuple(int(a) for a in joint_action)
        if len(ja) != self.n:
            raise InputError(f"joint action has {len(ja)} entries, expected {self.n}")
        for a in ja:
            if not 0 <= a < self.action_count:
                raise InputError(f"action index {a} outside [0, {self.action_count})")
        return ja


def check_mode(mode: str) -> str:
    if mode not in OBSERVATION_MODES:
        raise InputError(f"unknown observation mode {mode!r}; expected one of {OBSERVATION_MODES}")
    return mode
