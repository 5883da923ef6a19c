from __future__ import annotations

from typing import Tuple

Pos = Tuple[int, int]

UP, DOWN, LEFT, RIGHT, NOOP = range(5)
MOVE_NAMES = ("up", "down", "left", "right", "noop")
DELTAS = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1), NOOP: (0, 0)}

GLYPHS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def moved(pos: Pos, action: int) -> Pos:
    dr, dc = DELTAS[action]
    return (pos[0] + dr, pos[1] + dc)


def in_bounds(pos: Pos, shape: Tuple[int, int]) -> bool:
    return 0 <= pos[0] < shape[0] and 0 <= pos[1] < shape[1]


def chebyshev(a: Pos, b: Pos) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def scaled(pos: Pos, shape: Tuple[int, int]) -> Tuple[float, float]:
    return (pos[0] / (shape[0] - 1), pos[1] / (shape[1] - 1))
