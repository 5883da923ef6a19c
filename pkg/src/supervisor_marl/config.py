"""Task configuration: INI file with sections, plus environment overrides.

Example::

    [task]
    env = switch
    agents = 2
    observation = individual
    seed = 0

    [env]
    step_cost = 0.0
    max_env_steps = 100

    [ppo]
    total_steps = 500000

    [eval]
    model_count = 1

Any key can be overridden from the environment as
``SMARL_<SECTION>_<KEY>``, e.g. ``SMARL_PPO_TOTAL_STEPS=100000``.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from .core import OBSERVATION_MODES
from .envs import ENVIRONMENTS, TASK_AGENT_COUNTS
from .errors import InputError
from .ppo.algorithm import PPOConfig

ENV_PREFIX = "SMARL_"

# Environment keyword arguments accepted per environment.
ENV_KEYS = {
    "switch": ("step_cost", "max_env_steps"),
    "traffic": ("spawn_prob", "max_env_steps", "turning"),
    "combat": ("max_env_steps",),
}
ENV_TYPES = {"step_cost": float, "spawn_prob": float, "max_env_steps": int, "turning": bool}

TASK_KEYS = {"env": str, "agents": int, "observation": str, "seed": int, "allow_any_agents": bool}
EVAL_KEYS = {"model_count": int, "rollouts_per_model": int, "max_meta_steps": int}


@dataclass
class TaskConfig:
    env: str = "switch"
    n: int = 2
    observation: str = "individual"
    env_overrides: Dict[str, Any] = field(default_factory=dict)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    model_count: int = 5
    eval_rollouts: int = 20
    eval_max_meta_steps: int = 5000
    seed: int = 0
    allow_any_agents: bool = False

    def __post_init__(self) -> None:
        if self.env not in ENVIRONMENTS:
            raise InputError(f"unknown environment {self.env!r}; choose from {sorted(ENVIRONMENTS)}")
        if self.observation not in OBSERVATION_MODES:
            raise InputError(f"observation must be one of {OBSERVATION_MODES}")
        allowed = TASK_AGENT_COUNTS[self.env]
        if not self.allow_any_agents and self.n not in allowed:
            raise InputError(f"{self.env} tasks use {allowed} agents; set allow_any_agents to override")
        unknown = set(self.env_overrides) - set(ENV_KEYS[self.env])
        if unknown:
            raise InputError(f"{self.env} does not accept {sorted(unknown)}")
        for name in ("model_count", "eval_rollouts", "eval_max_meta_steps"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be positive")

    @property
    def task_name(self) -> str:
        version = "v0" if self.observation == "individual" else "v1"
        return f"{self.env}{self.n}-{version}"

    def describe(self) -> str:
        """Canonical description of what determines network shapes and semantics."""
        return f"env={self.env};agents={self.n};observation={self.observation}"


def _parse(value: str, kind: type) -> Any:
    if kind is bool:
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise InputError(f"not a boolean: {value!r}")
    try:
        return kind(value.strip())
    except ValueError:
        raise InputError(f"cannot parse {value!r} as {kind.__name__}") from None


def _ppo_types() -> Dict[str, type]:
    hints = {"float": float, "int": int, "bool": bool, "str": str}
    return {f.name: hints[f.type] if isinstance(f.type, str) else f.type
            for f in dataclasses.fields(PPOConfig)}


def config_from_mapping(sections: Mapping[str, Mapping[str, str]]) -> TaskConfig:
    known = {"task", "env", "ppo", "eval"}
    extra = set(sections) - known
    if extra:
        raise InputError(f"unknown config sections {sorted(extra)}")
    task = dict(sections.get("task", {}))
    for key in task:
        if key not in TASK_KEYS:
            raise InputError(f"unknown key task.{key}")
    kwargs: Dict[str, Any] = {}
    if "env" in task:
        kwargs["env"] = _parse(task["env"], str)
    if "agents" in task:
        kwargs["n"] = _parse(task["agents"], int)
    if "observation" in task:
        kwargs["observation"] = _parse(task["observation"], str)
    if "seed" in task:
        kwargs["seed"] = _parse(task["seed"], int)
    if "allow_any_agents" in task:
        kwargs["allow_any_agents"] = _parse(task["allow_any_agents"], bool)

    overrides = {}
    for key, value in sections.get("env", {}).items():
        if key not in ENV_TYPES:
            raise InputError(f"unknown key env.{key}")
        overrides[key] = _parse(value, ENV_TYPES[key])
    kwargs["env_overrides"] = overrides

    ppo_types = _ppo_types()
    ppo_kwargs = {}
    for key, value in sections.get("ppo", {}).items():
        if key not in ppo_types:
            raise InputError(f"unknown key ppo.{key}")
        ppo_kwargs[key] = _parse(value, ppo_types[key])
    ppo_kwargs.setdefault("seed", kwargs.get("seed", 0))
    kwargs["ppo"] = PPOConfig(**ppo_kwargs)

    names = {"model_count": "model_count", "rollouts_per_model": "eval_rollouts",
             "max_meta_steps": "eval_max_meta_steps"}
    for key, value in sections.get("eval", {}).items():
        if key not in EVAL_KEYS:
            raise InputError(f"unknown key eval.{key}")
        kwargs[names[key]] = _parse(value, EVAL_KEYS[key])
    return TaskConfig(**kwargs)


def loads_config(text: str, environ: Optional[Mapping[str, str]] = None) -> TaskConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InputError(f"malformed config: {exc}") from None
    sections: Dict[str, Dict[str, str]] = {s: dict(parser[s]) for s in parser.sections()}
    environ = os.environ if environ is None else environ
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        section, _, key = name[len(ENV_PREFIX):].lower().partition("_")
        if section and key:
            sections.setdefault(section, {})[key] = value
    return config_from_mapping(sections)


def load_config(path: Union[str, Path], environ: Optional[Mapping[str, str]] = None) -> TaskConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    return loads_config(text, environ)


def dumps_config(cfg: TaskConfig) -> str:
    """Effective configuration, every key spelled out."""
    parser = configparser.ConfigParser()
    parser["task"] = {"env": cfg.env, "agents": str(cfg.n), "observation": cfg.observation,
                      "seed": str(cfg.seed), "allow_any_agents": str(cfg.allow_any_agents).lower()}
    parser["env"] = {k: str(v).lower() if isinstance(v, bool) else str(v)
                     for k, v in sorted(cfg.env_overrides.items())}
    parser["ppo"] = {k: str(v).lower() if isinstance(v, bool) else str(v)
                     for k, v in dataclasses.asdict(cfg.ppo).items()}
    parser["eval"] = {"model_count": str(cfg.model_count),
                      "rollouts_per_model": str(cfg.eval_rollouts),
                      "max_meta_steps": str(cfg.eval_max_meta_steps)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
