"""Switch: agents in two chambers must swap sides through a one-cell corridor.

Layout of the 3x7 grid (``#`` walls, digits start cells)::

    0.###.1
    .......
    2.###.3

Each agent's target is the mirror image of its start cell, so agents 0 and 1
swap corners, as do 2 and 3.  The chambers are the two leftmost and two
rightmost columns.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

from ..core import COLLECTIVE, EnvStepResult, MultiAgentEnv, check_mode
from ..errors import ContractViolation, InputError
from .grid import GLYPHS, MOVE_NAMES, Pos, in_bounds, moved, scaled

SHAPE = (3, 7)
WALLS = frozenset((r, c) for r in (0, 2) for c in (2, 3, 4))
STARTS: Tuple[Pos, ...] = ((0, 0), (0, 6), (2, 0), (2, 6))
ARRIVAL_REWARD = 5.0


@dataclass(frozen=True)
class SwitchState:
    agent_pos: Tuple[Pos, ...]
    arrived: Tuple[bool, ...]
    step_count: int = 0


class SwitchEnv(MultiAgentEnv):
    name = "switch"
    action_names = MOVE_NAMES

    def __init__(self, n: int = 2, step_cost: float = 0.0, max_env_steps: int = 100):
        if not 1 <= n <= len(STARTS):
            raise InputError(f"Switch supports 1-{len(STARTS)} agents, got {n}")
        self.n = n
        self.action_count = len(MOVE_NAMES)
        self.step_cost = float(step_cost)
        self.max_env_steps = int(max_env_steps)
        self.starts = STARTS[:n]
        self.targets = tuple((r, SHAPE[1] - 1 - c) for r, c in self.starts)
        self._state = self._initial()

    def _initial(self) -> SwitchState:
        return SwitchState(self.starts, (False,) * self.n, 0)

    def reset(self, seed: int = 0) -> SwitchState:
        # The layout is fixed; the seed is accepted for interface uniformity.
        self._state = self._initial()
        return self._state

    @property
    def state(self) -> SwitchState:
        return self._state

    def set_state(self, state: SwitchState) -> None:
        self._state = state

    def is_terminal(self, state: SwitchState = None) -> bool:
        st = self._state if state is None else state
        return all(st.arrived) or st.step_count >= self.max_env_steps

    def execute(self, joint_action: Sequence[int]) -> EnvStepResult:
        ja = self.check_joint_action(joint_action)
        st = self._state
        if self.is_terminal(st):
            raise ContractViolation("Switch episode already finished")
        pos = list(st.agent_pos)
        arrived = list(st.arrived)
        rewards = [0.0] * self.n
        for i, a in enumerate(ja):
            if arrived[i]:
                continue
            dest = moved(pos[i], a)
            occupied = any(pos[j] == dest and not arrived[j] for j in range(self.n) if j != i)
            if in_bounds(dest, SHAPE) and dest not in WALLS and not occupied:
                pos[i] = dest
            if pos[i] == self.targets[i]:
                arrived[i] = True
                rewards[i] = ARRIVAL_REWARD
            else:
                rewards[i] = self.step_cost
        self._state = SwitchState(tuple(pos), tuple(arrived), st.step_count + 1)
        return EnvStepResult(self._state, tuple(rewards), self.is_terminal())

    def reported_reward(self, summed_reward: float) -> float:
        return summed_reward / self.n

    def observation_size(self, mode: str = "individual") -> int:
        return 2 * self.n if check_mode(mode) != COLLECTIVE else 3 * SHAPE[0] * SHAPE[1]

    def observe(self, mode: str = "individual") -> np.ndarray:
        st = self._state
        if check_mode(mode) != COLLECTIVE:
            out = []
            for i in range(self.n):
                out.extend(scaled(self.targets[i] if st.arrived[i] else st.agent_pos[i], SHAPE))
            return np.array(out)
        grid = np.zeros((3,) + SHAPE)
        for r, c in WALLS:
            grid[2, r, c] = 1.0
        for i in range(self.n):
            if not st.arrived[i]:
                grid[0][st.agent_pos[i]] = (i + 1) / self.n
                grid[1][self.targets[i]] = (i + 1) / self.n
        return grid.ravel()

    def render(self) -> str:
        st = self._state
        rows = [["#" if (r, c) in WALLS else "." for c in range(SHAPE[1])] for r in range(SHAPE[0])]
        for i, (r, c) in enumerate(self.targets):
            rows[r][c] = chr(ord("A") + i)
        for i, (r, c) in enumerate(st.agent_pos):
            if not st.arrived[i]:
                rows[r][c] = GLYPHS[i]
        # Targets hide under agents at the start, so they are also listed.
        legend = " ".join(f"{chr(ord('A') + i)}={r},{c}" for i, (r, c) in enumerate(self.targets)
                          if not st.arrived[i])
        return "\n".join("".join(row) for row in rows) + f"\ntargets: {legend or '-'}"

    def with_positions(self, positions: Sequence[Pos]) -> SwitchState:
        """Place agents explicitly (testing and scenario setup)."""
        self._state = replace(self._state, agent_pos=tuple(tuple(p) for p in positions))
        return self._state
