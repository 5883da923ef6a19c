"""TrafficJunction: cars crossing a four-way junction on a 14x14 grid.

Two-lane roads cross at the centre: eastbound traffic uses row 7, westbound
row 6, southbound column 6 and northbound column 7.  Car ``i`` enters from
arm ``i % 4`` (west, north, east, south).  Each step an unspawned car
appears on its entry cell with probability ``spawn_prob`` when that cell is
free; a car that has appeared in a step does not move until the next one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np

from ..core import COLLECTIVE, EnvStepResult, MultiAgentEnv, check_mode
from ..errors import ContractViolation, InputError
from .grid import GLYPHS, Pos, scaled

SIZE = 14
SHAPE = (SIZE, SIZE)
GAS, BRAKE = 0, 1
ACTION_NAMES = ("gas", "brake")
COLLISION_REWARD = -10.0
DELAY_COEF = -0.01
TAU_CAP = 100

Route = Tuple[Pos, ...]


def _rotate(pos: Pos, quarter_turns: int) -> Pos:
    r, c = pos
    for _ in range(quarter_turns):
        r, c = c, SIZE - 1 - r
    return (r, c)


def _west_routes() -> Tuple[Route, Route, Route]:
    """Straight, right-turn and left-turn routes for a car entering from the west."""
    straight = tuple((7, c) for c in range(SIZE))
    right = tuple((7, c) for c in range(7)) + tuple((r, 6) for r in range(8, SIZE))
    left = tuple((7, c) for c in range(8)) + tuple((r, 7) for r in range(6, -1, -1))
    return straight, right, left


def arm_routes(arm: int) -> Tuple[Route, Route, Route]:
    return tuple(tuple(_rotate(p, arm) for p in route) for route in _west_routes())


ROAD = frozenset(p for arm in range(4) for route in arm_routes(arm) for p in route)


@dataclass(frozen=True)
class Car:
    route: Route
    spawned: bool = False
    exited: bool = False
    cell: int = 0  # index into route
    tau: int = 0  # steps since the car appeared

    @property
    def active(self) -> bool:
        return self.spawned and not self.exited

    @property
    def pos(self) -> Pos:
        return self.route[self.cell]


@dataclass(frozen=True)
class TrafficState:
    cars: Tuple[Car, ...]
    step_count: int = 0


class TrafficJunctionEnv(MultiAgentEnv):
    name = "traffic"
    action_names = ACTION_NAMES

    def __init__(self, n: int = 4, spawn_prob: float = 0.3, max_env_steps: int = 200,
                 turning: bool = False):
        if n < 1:
            raise InputError("TrafficJunction needs at least one car")
        if not 0.0 <= spawn_prob <= 1.0:
            raise InputError("spawn_prob must lie in [0, 1]")
        self.n = n
        self.action_count = len(ACTION_NAMES)
        self.spawn_prob = float(spawn_prob)
        self.max_env_steps = int(max_env_steps)
        self.turning = bool(turning)
        self._draws = np.ones((self.max_env_steps, n))
        self._state = self._initial(np.random.default_rng(0))

    def _initial(self, rng: np.random.Generator) -> TrafficState:
        cars = []
        for i in range(self.n):
            routes = arm_routes(i % 4)
            choice = int(rng.integers(0, 3)) if self.turning else 0
            cars.append(Car(routes[choice]))
        return TrafficState(tuple(cars), 0)

    def reset(self, seed: int = 0) -> TrafficState:
        rng = np.random.default_rng(seed)
        self._state = self._initial(rng)
        self._draws = rng.random((self.max_env_steps, self.n))
        return self._state

    @property
    def state(self) -> TrafficState:
        return self._state

    def set_state(self, state: TrafficState) -> None:
        self._state = state

    def is_terminal(self, state: TrafficState = None) -> bool:
        st = self._state if state is None else state
        return all(c.exited for c in st.cars) or st.step_count >= self.max_env_steps

    def execute(self, joint_action: Sequence[int]) -> EnvStepResult:
        ja = self.check_joint_action(joint_action)
        st = self._state
        if self.is_terminal(st):
            raise ContractViolation("TrafficJunction episode already finished")
        cars: List[Car] = list(st.cars)

        fresh = [False] * self.n
        for i, car in enumerate(cars):
            if car.spawned or self._draws[st.step_count, i] >= self.spawn_prob:
                continue
            entry = car.route[0]
            if not any(c.active and c.pos == entry for c in cars):
                cars[i] = replace(car, spawned=True, cell=0, tau=0)
                fresh[i] = True

        for i, car in enumerate(cars):
            if not car.active or fresh[i]:
                continue
            if ja[i] == GAS:
                if car.cell + 1 >= len(car.route):
                    cars[i] = replace(car, exited=True, tau=car.tau + 1)
                    continue
                car = replace(car, cell=car.cell + 1)
            cars[i] = replace(car, tau=car.tau + 1)

        rewards = [0.0] * self.n
        occupancy: dict = {}
        for car in cars:
            if car.active:
                occupancy[car.pos] = occupancy.get(car.pos, 0) + 1
        for i, car in enumerate(cars):
            if car.active:
                rewards[i] = DELAY_COEF * car.tau
                if occupancy[car.pos] > 1:
                    rewards[i] += COLLISION_REWARD

        self._state = TrafficState(tuple(cars), st.step_count + 1)
        return EnvStepResult(self._state, tuple(rewards), self.is_terminal())

    def collisions(self) -> int:
        """Number of cells currently shared by two or more cars."""
        cells = [c.pos for c in self._state.cars if c.active]
        return sum(1 for p in set(cells) if cells.count(p) > 1)

    def observation_size(self, mode: str = "individual") -> int:
        return 4 * self.n if check_mode(mode) != COLLECTIVE else 2 * SIZE * SIZE

    def observe(self, mode: str = "individual") -> np.ndarray:
        cars = self._state.cars
        if check_mode(mode) != COLLECTIVE:
            out = []
            for car in cars:
                if car.active:
                    out.extend(scaled(car.pos, SHAPE))
                    out.extend((1.0, min(car.tau, TAU_CAP) / TAU_CAP))
                else:
                    out.extend((-1.0, -1.0, 0.0, 0.0))
            return np.array(out)
        grid = np.zeros((2,) + SHAPE)
        for p in ROAD:
            grid[1][p] = 1.0
        for i, car in enumerate(cars):
            if car.active:
                grid[0][car.pos] = max(grid[0][car.pos], (i + 1) / self.n)
        return grid.ravel()

    def render(self) -> str:
        rows = [["." if (r, c) in ROAD else "#" for c in range(SIZE)] for r in range(SIZE)]
        seen: dict = {}
        for i, car in enumerate(self._state.cars):
            if car.active:
                r, c = car.pos
                rows[r][c] = "*" if car.pos in seen else GLYPHS[i % len(GLYPHS)]
                seen[car.pos] = i
        return "\n".join("".join(row) for row in rows)
