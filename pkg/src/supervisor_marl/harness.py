"""Train, evaluate, verify, inspect and enumerate: the work behind the CLI."""

from __future__ import annotations

import csv
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import plotting
from .compiler import (
    CompiledEnv,
    decision_state_count,
    joint_action_space_size,
    meta_state_space_size,
    reachable_decision_states,
)
from .config import TaskConfig, dumps_config
from .core import MultiAgentEnv
from .envs import make_env
from .errors import CheckpointError, NonFiniteLossError, SupervisorError
from .mmdp import ExplicitMMDP, load_mmdp, random_mmdp
from .oracle import build_compiled_mdp, check_equivalence
from .ppo import (
    Trainer,
    digest_of,
    forward_policy,
    load_checkpoint,
    make_networks,
    sample_action,
    save_checkpoint,
)

log = logging.getLogger(__name__)

METRICS_COLUMNS = ("iteration", "meta_steps", "episodes", "mean_episode_return",
                   "mean_actor_loss", "mean_critic_loss", "entropy")
EVAL_COLUMNS = ("model", "rollout", "seed", "reward", "summed_reward", "meta_steps",
                "joint_steps", "terminal")
OPTIMUM = {"switch": (5.0, "5"), "combat": (0.0, "0"), "traffic": (None, "-0.01*tau (no collisions)")}
DISCOUNTS = (0.5, 0.9, 0.99)
COUNT_CASES = ((1, 2, 2), (2, 2, 2), (1, 5, 3), (3, 3, 3))
EVAL_STREAM = 7919


def build_env(cfg: TaskConfig) -> MultiAgentEnv:
    return make_env(cfg.env, cfg.n, **cfg.env_overrides)


def build_compiled(cfg: TaskConfig) -> CompiledEnv:
    return CompiledEnv(build_env(cfg), cfg.observation)


def model_seed(cfg: TaskConfig, model: int) -> int:
    return int(np.random.SeedSequence([cfg.ppo.seed, model]).generate_state(1)[0])


def checkpoint_digest(cfg: TaskConfig) -> bytes:
    return digest_of(cfg.describe())


def _fmt(value: float) -> str:
    return repr(float(value))


# --------------------------------------------------------------------------- train

def train(cfg: TaskConfig, out_dir: Union[str, Path], plots: bool = True) -> List[Path]:
    """Train ``cfg.model_count`` models; returns the checkpoint paths.

    ``metrics_model<k>.csv`` holds only seed-determined values so reruns are
    byte-identical; wall-clock times go to ``timing_model<k>.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(dumps_config(cfg))
    digest = checkpoint_digest(cfg)
    checkpoints, metrics_files = [], []
    for k in range(cfg.model_count):
        ppo = dataclasses.replace(cfg.ppo, seed=model_seed(cfg, k))
        trainer = Trainer(build_compiled(cfg), ppo)
        metrics_path = out / f"metrics_model{k}.csv"
        timing_path = out / f"timing_model{k}.csv"
        start = time.perf_counter()
        with open(metrics_path, "w", newline="") as mf, open(timing_path, "w", newline="") as tf:
            metrics, timing = csv.writer(mf), csv.writer(tf)
            metrics.writerow(METRICS_COLUMNS)
            timing.writerow(("iteration", "meta_steps", "wall_clock_s"))

            def record(s) -> None:
                metrics.writerow((s.iteration, s.meta_steps, s.episodes, _fmt(s.mean_episode_return),
                                  _fmt(s.mean_actor_loss), _fmt(s.mean_critic_loss), _fmt(s.entropy)))
                timing.writerow((s.iteration, s.meta_steps, f"{time.perf_counter() - start:.3f}"))
                mf.flush()
                tf.flush()
                log.info("model %d iter %d steps %d return %.3f actor %.4f critic %.4f", k,
                         s.iteration, s.meta_steps, s.mean_episode_return, s.mean_actor_loss,
                         s.mean_critic_loss)

            try:
                trainer.train(record)
            except NonFiniteLossError:
                save_checkpoint(out / f"crash_model{k}.ckpt", [trainer.actor, trainer.critic], digest)
                raise
        path = out / f"model_{k}.ckpt"
        save_checkpoint(path, [trainer.actor, trainer.critic], digest)
        checkpoints.append(path)
        metrics_files.append(metrics_path)
    if plots:
        plotting.plot_training(metrics_files, out / "training.png", cfg.task_name)
    return checkpoints


# ------------------------------------------------------------------------ evaluate

@dataclass
class Rollout:
    model: int
    rollout: int
    seed: int
    reward: float  # reported metric (per-agent for Switch)
    summed_reward: float
    meta_steps: int
    terminal: bool


@dataclass
class EvalReport:
    task: str
    n: int
    best_reward: float
    avg_reward: float
    best_len_meta: int
    best_len_joint: float
    avg_len_meta: float
    optimum: str
    rollouts: List[Rollout] = field(default_factory=list)

    def rows(self) -> List[Tuple[str, str]]:
        return [("task", self.task), ("rollouts", str(len(self.rollouts))),
                ("best_reward", f"{self.best_reward:.6g}"), ("avg_reward", f"{self.avg_reward:.6g}"),
                ("best_len_meta", str(self.best_len_meta)),
                ("best_len_joint", f"{self.best_len_joint:g}"),
                ("avg_len_meta", f"{self.avg_len_meta:.6g}"), ("optimum", self.optimum)]


def run_episode(compiled: CompiledEnv, actor, seed: int, greedy: bool,
                max_meta_steps: int) -> Tuple[float, int, bool]:
    """One evaluation rollout: (summed meta-reward, meta-steps, reached terminal)."""
    rng = np.random.default_rng(seed)
    compiled.reset(seed)
    total, steps = 0.0, 0
    while steps < max_meta_steps:
        dist = forward_policy(actor, compiled.observe())
        a = int(np.argmax(dist)) if greedy else sample_action(dist, rng)[0]
        res = compiled.step(a)
        total += res.meta_reward
        steps += 1
        if res.terminal:
            return total, steps, True
    return total, steps, False


def summarize(cfg: TaskConfig, rollouts: Sequence[Rollout]) -> EvalReport:
    # Best rollout: highest reward, then shortest episode.
    best = min(rollouts, key=lambda r: (-r.reward, r.meta_steps))
    joint = best.meta_steps / cfg.n
    return EvalReport(
        task=cfg.task_name, n=cfg.n, best_reward=best.reward,
        avg_reward=float(np.mean([r.reward for r in rollouts])),
        best_len_meta=best.meta_steps,
        best_len_joint=int(joint) if best.meta_steps % cfg.n == 0 else joint,
        avg_len_meta=float(np.mean([r.meta_steps for r in rollouts])),
        optimum=OPTIMUM[cfg.env][1], rollouts=list(rollouts))


def find_checkpoints(models: Union[str, Path]) -> List[Path]:
    path = Path(models)
    if path.is_file():
        return [path]
    found = sorted(path.glob("model_*.ckpt"), key=lambda p: int(p.stem.split("_")[1]))
    if not found:
        raise CheckpointError(f"no model_*.ckpt files in {path}")
    return found


def evaluate(cfg: TaskConfig, models: Union[str, Path], greedy: bool = False,
             out_dir: Optional[Union[str, Path]] = None, plots: bool = True) -> EvalReport:
    checkpoints = find_checkpoints(models)
    compiled = build_compiled(cfg)
    actor, critic = make_networks(compiled.observation_size, compiled.meta_action_count,
                                  np.random.default_rng(0))
    digest = checkpoint_digest(cfg)
    rollouts = []
    for k, ckpt in enumerate(checkpoints):
        load_checkpoint(ckpt, [actor, critic], digest)
        for r in range(cfg.eval_rollouts):
            seed = int(np.random.SeedSequence([cfg.seed, EVAL_STREAM, k, r]).generate_state(1)[0])
            total, steps, terminal = run_episode(compiled, actor, seed, greedy, cfg.eval_max_meta_steps)
            rollouts.append(Rollout(k, r, seed, compiled.inner.reported_reward(total), total,
                                    steps, terminal))
    report = summarize(cfg, rollouts)

    if out_dir is None:
        out_dir = Path(models) if Path(models).is_dir() else Path(models).parent
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suffix = "_greedy" if greedy else ""
    with open(out / f"evaluation{suffix}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVAL_COLUMNS)
        for ro in rollouts:
            writer.writerow((ro.model, ro.rollout, ro.seed, _fmt(ro.reward), _fmt(ro.summed_reward),
                             ro.meta_steps, f"{ro.meta_steps / cfg.n:g}", int(ro.terminal)))
    if plots:
        plotting.plot_evaluation([r.reward for r in rollouts], [r.meta_steps for r in rollouts],
                                 [r.model for r in rollouts], out / f"evaluation{suffix}.png",
                                 OPTIMUM[cfg.env][0], cfg.task_name)
    return report


# -------------------------------------------------------------------------- verify

@dataclass
class VerifyResult:
    lines: List[str] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    passed_cases: int = 0
    total_cases: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_mmdp(m: ExplicitMMDP, label: str, result: VerifyResult) -> None:
    result.total_cases += 1
    try:
        reports = [check_equivalence(m, g, use_plans=(i == 0)) for i, g in enumerate(DISCOUNTS)]
    except SupervisorError as exc:
        result.failures.append(f"{label}: refused ({exc})")
        result.lines.append(f"FAIL {label}: refused ({exc})")
        return
    problems = [f for rep in reports for f in rep.failures]
    first = reports[0]
    desc = (f"|S|={m.state_count} n={m.n} |A|={m.action_count} H={m.horizon} "
            f"joint={first.joint_return:.9g} compiled={first.compiled_return:.9g}")
    if problems:
        result.failures.append(f"{label}: " + "; ".join(dict.fromkeys(problems)))
        result.lines.append(f"FAIL {label} {desc}: {problems[0]}")
    else:
        result.passed_cases += 1
        result.lines.append(f"ok   {label} {desc}")


def cyclic_mmdp(state_count: int, action_count: int, n: int) -> ExplicitMMDP:
    """Every joint action moves ``s`` to ``s + 1 (mod |S|)``: all states reachable."""
    joint = action_count**n
    transition = np.tile(((np.arange(state_count) + 1) % state_count)[:, None], (1, joint))
    return ExplicitMMDP(state_count, n, action_count, transition,
                        np.zeros((state_count, joint, n)), 0, 1)


def verify_counting(result: VerifyResult) -> None:
    for s, a, n in COUNT_CASES:
        m = cyclic_mmdp(s, a, n)
        closed = decision_state_count(s, a, n)
        reached = reachable_decision_states(m)
        built = build_compiled_mdp(m).mdp.state_count
        formula = meta_state_space_size(s, a, n)
        expected_formula = s * sum(a**i for i in range(n + 1))
        ok = reached == closed == built and formula == expected_formula
        line = (f"counting |S|={s} |A|={a} n={n}: enumerated={reached} built={built} "
                f"closed_form={closed} with_full_lists={formula}")
        result.lines.append(("ok   " if ok else "FAIL ") + line)
        if not ok:
            result.failures.append(line)
    spot = meta_state_space_size(4, 5, 6)
    ok = spot == 78124
    result.lines.append(("ok   " if ok else "FAIL ") + f"meta_state_space_size(4, 5, 6) = {spot}")
    if not ok:
        result.failures.append(f"meta_state_space_size(4, 5, 6) = {spot}, expected 78124")


def verify(cases: int = 50, seed: int = 0, mmdp: Optional[Union[str, Path]] = None,
           counting: bool = True) -> VerifyResult:
    result = VerifyResult()
    if mmdp is not None:
        verify_mmdp(load_mmdp(mmdp), str(mmdp), result)
    else:
        rng = np.random.default_rng(seed)
        for i in range(cases):
            s, n, a, h = (int(rng.integers(1, 7)), int(rng.integers(1, 4)),
                          int(rng.integers(1, 4)), int(rng.integers(1, 5)))
            case_seed = int(rng.integers(2**31))
            verify_mmdp(random_mmdp(case_seed, s, n, a, h), f"case {i} seed={case_seed}", result)
    if counting:
        verify_counting(result)
    return result


# ------------------------------------------------------------------------- inspect

def inspect_rollout(cfg: TaskConfig, model: Optional[Union[str, Path]] = None, steps: int = 20,
                    seed: Optional[int] = None) -> Iterator[str]:
    """Text animation of one rollout; a uniform random policy when ``model`` is None."""
    compiled = build_compiled(cfg)
    env = compiled.inner
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    actor = None
    if model is not None:
        actor, critic = make_networks(compiled.observation_size, compiled.meta_action_count,
                                      np.random.default_rng(0))
        load_checkpoint(model, [actor, critic], checkpoint_digest(cfg))
    names = getattr(env, "action_names", None)
    compiled.reset(seed)
    yield f"{cfg.task_name} seed={seed} policy={'random' if actor is None else Path(model).name}"
    yield env.render()
    total, frames = 0.0, 0
    for t in range(1, steps + 1):
        if actor is None:
            a = int(rng.integers(compiled.meta_action_count))
        else:
            a = sample_action(forward_policy(actor, compiled.observe()), rng)[0]
        pending = compiled.current.assignments.assign(a)
        res = compiled.step(a)
        total += res.meta_reward
        name = f" ({names[a]})" if names else ""
        yield f"meta-step {t}: assign a_{a}{name} -> L={pending.label()} meta-reward {res.meta_reward:g}"
        if res.env_stepped:
            frames += 1
            yield f"--- frame {frames} (joint action {pending.label()})"
            yield env.render()
        if res.terminal:
            yield (f"episode finished after {t} meta-steps ({frames} joint actions), "
                   f"return {total:g}, reported reward {env.reported_reward(total):g}")
            return
    yield f"stopped after {steps} meta-steps ({frames} joint actions), return so far {total:g}"


# ----------------------------------------------------------------------- enumerate

def enumerate_sizes(action_count: int, n: int, state_count: Optional[int] = None) -> List[Tuple[str, int]]:
    rows = [("individual_actions", action_count), ("agents", n),
            ("joint_actions", joint_action_space_size(action_count, n)),
            ("supervisor_actions", action_count),
            ("meta_states_per_state", meta_state_space_size(1, action_count, n)),
            ("decision_states_per_state", decision_state_count(1, action_count, n))]
    if state_count is not None:
        rows += [("states", state_count),
                 ("meta_states", meta_state_space_size(state_count, action_count, n)),
                 ("decision_states", decision_state_count(state_count, action_count, n))]
    return rows
