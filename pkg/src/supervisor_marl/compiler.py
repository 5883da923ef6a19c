"""Supervisor compilation of a multi-agent environment into a single-agent MDP.

The supervisor builds each joint action one agent at a time.  A meta-action
``assign a`` writes ``a`` into the first empty slot of the assignment list;
the assignment that fills the last slot executes the completed joint action
in the wrapped environment and is rewarded with the sum of the agents'
rewards.  Every other meta-step is rewarded with 0.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    INDIVIDUAL,
    AssignmentList,
    MetaState,
    MultiAgentEnv,
    check_mode,
    count_unassigned,
    encode_meta_observation,
)
from .errors import ArithmeticRangeError, ContractViolation, InputError, SizeGuardError
from .mmdp import ExplicitMMDP, TabularEnv

INT64_MAX = 2**63 - 1
PER_META_STEP = "per_meta_step"


@dataclass(frozen=True)
class MetaStepResult:
    next: MetaState
    meta_reward: float
    env_stepped: bool
    terminal: bool


class CompiledEnv:
    """Single-agent view of ``inner`` with action set of size ``inner.action_count``.

    Discounting is applied by whoever consumes the meta-rewards; the trainer
    discounts once per meta-step (``gamma_policy == "per_meta_step"``).
    """

    gamma_policy = PER_META_STEP

    def __init__(self, inner: MultiAgentEnv, mode: str = INDIVIDUAL):
        self.inner = inner
        self.mode = check_mode(mode)
        self.n = inner.n
        self.meta_action_count = inner.action_count
        self.current: Optional[MetaState] = None
        self.terminal = False
        self.meta_steps = 0
        self.env_steps = 0
        self._env_obs: Optional[np.ndarray] = None

    def reset(self, seed: int) -> MetaState:
        state = self.inner.reset(seed)
        self.current = MetaState(state, AssignmentList.empty(self.n))
        self.terminal = False
        self.meta_steps = 0
        self.env_steps = 0
        self._env_obs = None
        return self.current

    def restore(self, meta_state: MetaState, terminal: bool = False) -> None:
        """Jump to an arbitrary meta-state (used by exhaustive enumeration)."""
        self.inner.set_state(meta_state.env_state)
        self.current = meta_state
        self.terminal = terminal
        self._env_obs = None

    @property
    def observation_size(self) -> int:
        return self.inner.observation_size(self.mode) + self.n

    def observe(self) -> np.ndarray:
        if self.current is None:
            raise ContractViolation("observe() before reset()")
        if self._env_obs is None:
            self._env_obs = self.inner.observe(self.mode)
        return encode_meta_observation(self._env_obs, self.current.assignments,
                                       self.meta_action_count)

    def step(self, meta_action: int) -> MetaStepResult:
        if self.current is None:
            raise ContractViolation("step() before reset()")
        if self.terminal:
            raise ContractViolation("step() on a finished episode")
        a = int(meta_action)
        if not 0 <= a < self.meta_action_count:
            raise InputError(f"meta-action {a} outside [0, {self.meta_action_count})")

        assignments = self.current.assignments.assign(a)
        self.meta_steps += 1
        if count_unassigned(self.current.assignments) > 1:
            self.current = MetaState(self.current.env_state, assignments)
            return MetaStepResult(self.current, 0.0, False, False)

        result = self.inner.execute(assignments.as_joint_action())
        self.env_steps += 1
        self._env_obs = None
        self.current = MetaState(result.next_state, AssignmentList.empty(self.n))
        self.terminal = bool(result.terminal)
        return MetaStepResult(self.current, float(sum(result.rewards)), True, self.terminal)


def initial_meta_state(env: MultiAgentEnv, seed: int) -> MetaState:
    return MetaState(env.reset(seed), AssignmentList.empty(env.n))


def step(compiled: CompiledEnv, meta_action: int) -> MetaStepResult:
    return compiled.step(meta_action)


def _checked(value: int) -> int:
    if value > INT64_MAX:
        raise ArithmeticRangeError(f"{value} exceeds the signed 64-bit range")
    return value


def _geometric(action_count: int, terms: int) -> int:
    """``sum(action_count**i for i in range(terms))`` with overflow detection."""
    total, power = 0, 1
    for _ in range(terms):
        total = _checked(total + power)
        power = power * action_count
    return total


def joint_action_space_size(action_count: int, n: int) -> int:
    if action_count < 1 or n < 1:
        raise InputError("action_count and n must be >= 1")
    return _checked(action_count**n)


def meta_state_space_size(state_count: int, action_count: int, n: int) -> int:
    """``|S| * sum_{i=0..n} |A|**i``: meta-states including fully assigned lists."""
    if state_count < 1 or action_count < 1 or n < 0:
        raise InputError("state_count, action_count must be >= 1 and n >= 0")
    return _checked(state_count * _geometric(action_count, n + 1))


def decision_state_count(state_count: int, action_count: int, n: int) -> int:
    """``|S| * sum_{k=0..n-1} |A|**k``: meta-states where the supervisor must act.

    Fully assigned lists are consumed by the transition at once, so they are
    never observed by the policy.
    """
    if state_count < 1 or action_count < 1 or n < 1:
        raise InputError("state_count, action_count and n must be >= 1")
    return _checked(state_count * _geometric(action_count, n))


def reachable_decision_states(explicit: ExplicitMMDP, limit: int = 10**7) -> int:
    """Breadth-first count of decision meta-states reachable from the initial one.

    Environment states are identified by their MMDP state only, so the
    horizon of ``explicit`` plays no role.
    """
    bound = explicit.state_count * _geometric(explicit.action_count, explicit.n)
    if bound > limit:
        raise SizeGuardError(f"enumeration bound {bound} exceeds {limit}")
    endless = ExplicitMMDP(explicit.state_count, explicit.n, explicit.action_count,
                           explicit.transition, explicit.reward, explicit.initial_state, 0)
    compiled = CompiledEnv(TabularEnv(endless))
    start = compiled.reset(0)
    seen = {(start.env_state[0], start.assignments.slots)}
    queue = deque([start])
    while queue:
        meta = queue.popleft()
        for a in range(compiled.meta_action_count):
            compiled.restore(meta)
            nxt = compiled.step(a).next
            key = (nxt.env_state[0], nxt.assignments.slots)
            if key not in seen:
                seen.add(key)
                queue.append(nxt)
    return len(seen)
