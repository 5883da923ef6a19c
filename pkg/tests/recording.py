from typing import List, Sequence, Tuple

import numpy as np

from supervisor_marl.core import EnvStepResult, MultiAgentEnv


class RecordingEnv(MultiAgentEnv):
    """Counter environment that logs every joint action it executes.

    Agent ``i`` is rewarded ``(i + 1) * (a_i + 1)`` so per-agent rewards are
    distinguishable; the episode ends after ``horizon`` joint actions.
    """

    name = "recording"

    def __init__(self, n: int, action_count: int, horizon: int = 10**9):
        self.n = n
        self.action_count = action_count
        self.horizon = horizon
        self.executed: List[Tuple[int, ...]] = []
        self._state = 0

    def reset(self, seed: int = 0) -> int:
        self._state = seed % 7
        self.executed = []
        return self._state

    @property
    def state(self) -> int:
        return self._state

    def set_state(self, state: int) -> None:
        self._state = state

    def execute(self, joint_action: Sequence[int]) -> EnvStepResult:
        ja = self.check_joint_action(joint_action)
        self.executed.append(ja)
        self._state += 1
        rewards = tuple(float((i + 1) * (a + 1)) for i, a in enumerate(ja))
        return EnvStepResult(self._state, rewards, len(self.executed) >= self.horizon)

    def observation_size(self, mode: str = "individual") -> int:
        return 1

    def observe(self, mode: str = "individual") -> np.ndarray:
        return np.array([min(self._state, 100) / 100.0])

    def render(self) -> str:
        return f"state {self._state}"

