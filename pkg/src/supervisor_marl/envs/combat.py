"""Combat: a learned blue team against a scripted red team on a 15x15 grid.

Actions ``0-4`` move (up, down, left, right, noop); action ``5 + j`` attacks
red agent ``j``.  An attack hits when the target is alive and within
Chebyshev distance 3 of the attacker.  A hit costs one of the target's three
health points and forces it to spend its next step recovering, during which
its own attacks have no effect.  Attacks in a step are simultaneous and use
start-of-step positions; moves follow (blue by index, then red by index).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core import COLLECTIVE, EnvStepResult, MultiAgentEnv, check_mode
from ..errors import ContractViolation, InputError
from .grid import GLYPHS, MOVE_NAMES, NOOP, Pos, chebyshev, in_bounds, moved, scaled

SIZE = 15
SHAPE = (SIZE, SIZE)
MAX_HEALTH = 3
ATTACK_RANGE = 3
LOSS_REWARD = -1.0
HEALTH_PENALTY = -0.1
REGION = 5


@dataclass(frozen=True)
class Fighter:
    pos: Pos
    health: int = MAX_HEALTH
    cooldown: int = 0

    @property
    def alive(self) -> bool:
        return self.health > 0


@dataclass(frozen=True)
class CombatState:
    blue: Tuple[Fighter, ...]
    red: Tuple[Fighter, ...]
    step_count: int = 0


def red_policy(state: CombatState) -> Tuple[int, ...]:
    """Scripted red team: attack the nearest blue agent in range, else approach it."""
    actions = []
    for me in state.red:
        if not me.alive:
            actions.append(NOOP)
            continue
        targets = [(chebyshev(me.pos, b.pos), k) for k, b in enumerate(state.blue) if b.alive]
        if not targets:
            actions.append(NOOP)
            continue
        dist, k = min(targets)
        if dist <= ATTACK_RANGE and me.cooldown == 0:
            actions.append(len(MOVE_NAMES) + k)
            continue
        dr = state.blue[k].pos[0] - me.pos[0]
        dc = state.blue[k].pos[1] - me.pos[1]
        if abs(dr) >= abs(dc) and dr:
            actions.append(0 if dr < 0 else 1)
        elif dc:
            actions.append(2 if dc < 0 else 3)
        else:
            actions.append(NOOP)
    return tuple(actions)


class CombatEnv(MultiAgentEnv):
    name = "combat"

    def __init__(self, n: int = 5, n_red: Optional[int] = None, max_env_steps: int = 100):
        n_red = n if n_red is None else n_red
        if not (1 <= n <= REGION * REGION and 1 <= n_red <= REGION * REGION):
            raise InputError(f"team sizes must lie in [1, {REGION * REGION}]")
        self.n = n
        self.n_red = n_red
        self.action_count = len(MOVE_NAMES) + n_red
        self.action_names = MOVE_NAMES + tuple(f"attack_{j}" for j in range(n_red))
        self.max_env_steps = int(max_env_steps)
        self._state = self._place(np.random.default_rng(0))

    def _place(self, rng: np.random.Generator) -> CombatState:
        def team(size: int, col0: int) -> Tuple[Fighter, ...]:
            row0 = int(rng.integers(0, SIZE - REGION + 1))
            cells = rng.choice(REGION * REGION, size=size, replace=False)
            return tuple(Fighter((row0 + int(c) // REGION, col0 + int(c) % REGION)) for c in cells)

        blue = team(self.n, 0)
        red = team(self.n_red, SIZE - REGION)
        return CombatState(blue, red, 0)

    def reset(self, seed: int = 0) -> CombatState:
        self._state = self._place(np.random.default_rng(seed))
        return self._state

    @property
    def state(self) -> CombatState:
        return self._state

    def set_state(self, state: CombatState) -> None:
        self._state = state

    def is_terminal(self, state: CombatState = None) -> bool:
        st = self._state if state is None else state
        return (not any(f.alive for f in st.red) or not any(f.alive for f in st.blue)
                or st.step_count >= self.max_env_steps)

    def terminal_team_reward(self, state: CombatState = None) -> float:
        st = self._state if state is None else state
        remaining = sum(f.health for f in st.red)
        if not any(f.alive for f in st.red):
            return 0.0
        return LOSS_REWARD + HEALTH_PENALTY * remaining

    def execute(self, joint_action: Sequence[int]) -> EnvStepResult:
        ja = self.check_joint_action(joint_action)
        st = self._state
        if self.is_terminal(st):
            raise ContractViolation("Combat episode already finished")
        red_ja = red_policy(st)

        blue_dmg = [0] * self.n
        red_dmg = [0] * self.n_red
        self._resolve_attacks(st.blue, st.red, ja, red_dmg)
        self._resolve_attacks(st.red, st.blue, red_ja, blue_dmg)

        blue = [Fighter(f.pos, max(f.health - d, 0), 1 if d else 0) for f, d in zip(st.blue, blue_dmg)]
        red = [Fighter(f.pos, max(f.health - d, 0), 1 if d else 0) for f, d in zip(st.red, red_dmg)]
        self._resolve_moves(blue, red, ja, red_ja)

        self._state = CombatState(tuple(blue), tuple(red), st.step_count + 1)
        terminal = self.is_terminal()
        share = self.terminal_team_reward() / self.n if terminal else 0.0
        return EnvStepResult(self._state, (share,) * self.n, terminal)

    @staticmethod
    def _resolve_attacks(team: Sequence[Fighter], enemies: Sequence[Fighter],
                         actions: Sequence[int], damage: List[int]) -> None:
        for me, a in zip(team, actions):
            if not me.alive or a < len(MOVE_NAMES) or me.cooldown:
                continue
            target = enemies[a - len(MOVE_NAMES)]
            if target.alive and chebyshev(me.pos, target.pos) <= ATTACK_RANGE:
                damage[a - len(MOVE_NAMES)] += 1

    @staticmethod
    def _resolve_moves(blue: List[Fighter], red: List[Fighter],
                       blue_ja: Sequence[int], red_ja: Sequence[int]) -> None:
        occupied = {f.pos for f in blue + red if f.alive}
        for team, actions in ((blue, blue_ja), (red, red_ja)):
            for i, (f, a) in enumerate(zip(team, actions)):
                if not f.alive or a >= NOOP:
                    continue
                dest = moved(f.pos, a)
                if in_bounds(dest, SHAPE) and dest not in occupied:
                    occupied.discard(f.pos)
                    occupied.add(dest)
                    team[i] = Fighter(dest, f.health, f.cooldown)

    def observation_size(self, mode: str = "individual") -> int:
        if check_mode(mode) == COLLECTIVE:
            return 4 * SIZE * SIZE
        return 4 * self.n + 3 * self.n_red

    def observe(self, mode: str = "individual") -> np.ndarray:
        st = self._state
        if check_mode(mode) != COLLECTIVE:
            out: List[float] = []
            for f in st.blue:
                if f.alive:
                    out.extend(scaled(f.pos, SHAPE) + (f.health / MAX_HEALTH, float(f.cooldown)))
                else:
                    out.extend((-1.0, -1.0, 0.0, 0.0))
            for f in st.red:
                out.extend(scaled(f.pos, SHAPE) + (f.health / MAX_HEALTH,) if f.alive
                           else (-1.0, -1.0, 0.0))
            return np.array(out)
        grid = np.zeros((4,) + SHAPE)
        for ch, team in ((0, st.blue), (1, st.red)):
            for f in team:
                if f.alive:
                    grid[ch][f.pos] = f.health / MAX_HEALTH
                    grid[ch + 2][f.pos] = float(f.cooldown)
        return grid.ravel()

    def render(self) -> str:
        st = self._state
        rows = [["."] * SIZE for _ in range(SIZE)]
        for i, f in enumerate(st.blue):
            if f.alive:
                rows[f.pos[0]][f.pos[1]] = GLYPHS[i % len(GLYPHS)]
        for j, f in enumerate(st.red):
            if f.alive:
                rows[f.pos[0]][f.pos[1]] = chr(ord("a") + j % 26)
        lines = ["".join(r) for r in rows]
        lines.append("blue hp: " + " ".join(str(f.health) for f in st.blue))
        lines.append("red hp:  " + " ".join(str(f.health) for f in st.red))
        return "\n".join(lines)
