"""Explicit (fully tabulated) deterministic MMDPs and MDPs.

Joint actions are indexed in base ``|A|`` with agent 0 as the most
significant digit, so ``joint_index((a0, a1), 3) == 3 * a0 + a1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from .core import EnvStepResult, MultiAgentEnv, check_mode
from .errors import ContractViolation, InputError, SizeGuardError

MAGIC = "mmdp"


def joint_index(joint_action: Sequence[int], action_count: int) -> int:
    idx = 0
    for a in joint_action:
        idx = idx * action_count + int(a)
    return idx


def joint_action_of(index: int, action_count: int, n: int) -> Tuple[int, ...]:
    out = []
    for _ in range(n):
        index, a = divmod(index, action_count)
        out.append(a)
    return tuple(reversed(out))


@dataclass
class ExplicitMMDP:
    state_count: int
    n: int
    action_count: int
    transition: np.ndarray  # (state_count, action_count**n) -> next state
    reward: np.ndarray  # (state_count, action_count**n, n)
    initial_state: int = 0
    horizon: int = 1

    def __post_init__(self) -> None:
        self.transition = np.asarray(self.transition, dtype=np.int64)
        self.reward = np.asarray(self.reward, dtype=np.float64)
        joint = self.action_count ** self.n
        if self.transition.shape != (self.state_count, joint):
            raise InputError(f"transition table shape {self.transition.shape} != {(self.state_count, joint)}")
        if self.reward.shape != (self.state_count, joint, self.n):
            raise InputError(f"reward table shape {self.reward.shape} != {(self.state_count, joint, self.n)}")
        if self.transition.size and (self.transition.min() < 0 or self.transition.max() >= self.state_count):
            raise InputError("transition table refers to an unknown state")
        if not 0 <= self.initial_state < self.state_count:
            raise InputError("initial state out of range")
        if self.horizon < 0:
            raise InputError("horizon must be non-negative")

    @property
    def joint_action_count(self) -> int:
        return self.action_count ** self.n

    def copy(self) -> "ExplicitMMDP":
        return ExplicitMMDP(self.state_count, self.n, self.action_count, self.transition.copy(),
                            self.reward.copy(), self.initial_state, self.horizon)


@dataclass
class ExplicitMDP:
    state_count: int
    action_count: int
    transition: np.ndarray  # (state_count, action_count)
    reward: np.ndarray  # (state_count, action_count)
    initial_state: int = 0
    horizon: int = 1

    def __post_init__(self) -> None:
        self.transition = np.asarray(self.transition, dtype=np.int64)
        self.reward = np.asarray(self.reward, dtype=np.float64)
        shape = (self.state_count, self.action_count)
        if self.transition.shape != shape or self.reward.shape != shape:
            raise InputError(f"tables must have shape {shape}")


def random_mmdp(seed: int, state_count: int, n: int, action_count: int, horizon: int) -> ExplicitMMDP:
    """Seeded MMDP with uniform transitions and rewards uniform in [-1, 1]."""
    if min(state_count, n, action_count) < 1:
        raise InputError("state_count, n and action_count must be >= 1")
    joint = action_count ** n
    if state_count * joint > 10**6:
        raise SizeGuardError(f"random MMDP with {state_count * joint} table rows refused")
    rng = np.random.default_rng(seed)
    transition = rng.integers(0, state_count, size=(state_count, joint))
    reward = rng.uniform(-1.0, 1.0, size=(state_count, joint, n))
    return ExplicitMMDP(state_count, n, action_count, transition, reward, 0, horizon)


def dumps_mmdp(m: ExplicitMMDP) -> str:
    lines = [f"{MAGIC} {m.state_count} {m.n} {m.action_count} {m.horizon} {m.initial_state}"]
    for s in range(m.state_count):
        for j in range(m.joint_action_count):
            rewards = " ".join(repr(float(r)) for r in m.reward[s, j])
            lines.append(f"{s} {j} {int(m.transition[s, j])} {rewards}")
    return "\n".join(lines) + "\n"


def loads_mmdp(text: str) -> ExplicitMMDP:
    """Parse the line format written by :func:`dumps_mmdp`.

    ``#`` starts a comment.  The header is
    ``mmdp <states> <agents> <actions> <horizon> <initial_state>`` and every
    other line is ``<state> <joint_index> <next_state> <r_1> ... <r_n>``.
    """
    rows: List[List[str]] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows or rows[0][0] != MAGIC or len(rows[0]) != 6:
        raise InputError("missing 'mmdp <states> <agents> <actions> <horizon> <initial>' header")
    try:
        state_count, n, action_count, horizon, initial = (int(v) for v in rows[0][1:])
    except ValueError as exc:
        raise InputError(f"bad header: {exc}") from None
    joint = action_count ** n
    transition = np.full((state_count, joint), -1, dtype=np.int64)
    reward = np.zeros((state_count, joint, n))
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3 + n:
            raise InputError(f"line {lineno}: expected {3 + n} fields, got {len(row)}")
        s, j, nxt = int(row[0]), int(row[1]), int(row[2])
        if not (0 <= s < state_count and 0 <= j < joint):
            raise InputError(f"line {lineno}: state/joint index out of range")
        if transition[s, j] != -1:
            raise InputError(f"line {lineno}: duplicate entry for ({s}, {j})")
        transition[s, j] = nxt
        reward[s, j] = [float(v) for v in row[3:]]
    if (transition < 0).any():
        s, j = np.argwhere(transition < 0)[0]
        raise InputError(f"table entry ({s}, {j}) is missing")
    return ExplicitMMDP(state_count, n, action_count, transition, reward, initial, horizon)


def load_mmdp(path: Union[str, Path]) -> ExplicitMMDP:
    return loads_mmdp(Path(path).read_text())


def save_mmdp(m: ExplicitMMDP, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_mmdp(m))


class TabularEnv(MultiAgentEnv):
    """Runs an :class:`ExplicitMMDP` behind the multi-agent environment interface.

    The state is ``(mmdp_state, steps_taken)``; the episode ends after
    ``horizon`` joint actions (never, when ``horizon`` is 0).
    """

    name = "tabular"

    def __init__(self, mmdp: ExplicitMMDP):
        self.mmdp = mmdp
        self.n = mmdp.n
        self.action_count = mmdp.action_count
        self._state: Tuple[int, int] = (mmdp.initial_state, 0)

    def reset(self, seed: int = 0) -> Tuple[int, int]:
        self._state = (self.mmdp.initial_state, 0)
        return self._state

    @property
    def state(self) -> Tuple[int, int]:
        return self._state

    def set_state(self, state: Tuple[int, int]) -> None:
        self._state = (int(state[0]), int(state[1]))

    def is_terminal(self) -> bool:
        return self.mmdp.horizon > 0 and self._state[1] >= self.mmdp.horizon

    def execute(self, joint_action: Iterable[int]) -> EnvStepResult:
        if self.is_terminal():
            raise ContractViolation("episode already finished")
        ja = self.check_joint_action(tuple(joint_action))
        s, t = self._state
        j = joint_index(ja, self.action_count)
        nxt = (int(self.mmdp.transition[s, j]), t + 1)
        self._state = nxt
        rewards = tuple(float(r) for r in self.mmdp.reward[s, j])
        return EnvStepResult(nxt, rewards, self.is_terminal())

    def observation_size(self, mode: str = "individual") -> int:
        check_mode(mode)
        return self.mmdp.state_count

    def observe(self, mode: str = "individual") -> np.ndarray:
        check_mode(mode)
        obs = np.zeros(self.mmdp.state_count)
        obs[self._state[0]] = 1.0
        return obs

    def render(self) -> str:
        return f"state {self._state[0]} (step {self._state[1]})"
