"""Deterministic, seedable cooperative gridworlds."""

from typing import Any

from ..errors import InputError
from .combat import CombatEnv
from .switch import SwitchEnv
from .traffic import TrafficJunctionEnv

ENVIRONMENTS = {"switch": SwitchEnv, "traffic": TrafficJunctionEnv, "combat": CombatEnv}

# Agent counts used for the published tasks; other counts need an explicit override.
TASK_AGENT_COUNTS = {"switch": (2, 3, 4), "traffic": (4, 7, 10), "combat": (5, 6, 7)}


def make_env(name: str, n: int, **overrides: Any):
    try:
        cls = ENVIRONMENTS[name]
    except KeyError:
        raise InputError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None
    return cls(n=n, **overrides)


__all__ = ["CombatEnv", "ENVIRONMENTS", "SwitchEnv", "TASK_AGENT_COUNTS", "TrafficJunctionEnv", "make_env"]
