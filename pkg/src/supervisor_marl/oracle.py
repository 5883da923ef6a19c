"""Exact solvers used to check the supervisor compilation on small MMDPs.

Three independent routes compute the optimal return of an explicit MMDP:

* the joint-action MDP (one action per element of ``A**n``),
* the compiled supervisor MDP, built by driving :class:`CompiledEnv` itself,
* brute-force enumeration of every open-loop joint-action plan (exact for
  deterministic dynamics).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .compiler import CompiledEnv, decision_state_count
from .core import AssignmentList, MetaState
from .errors import InputError, SizeGuardError
from .mmdp import ExplicitMDP, ExplicitMMDP, TabularEnv

BUILD_LIMIT = 10**6
PLAN_LIMIT = 10**7
FINITE = "finite"
INFINITE = "infinite"


@dataclass
class ValueSolution:
    """Optimal values and greedy actions.

    For a finite horizon ``H``, ``values`` has shape ``(H + 1, S)`` where
    row ``t`` holds the optimal return from time ``t`` onwards, and
    ``stage_policies[t]`` is the greedy action at time ``t``.  For the
    discounted infinite-horizon case ``values`` has shape ``(S,)``.
    """

    values: np.ndarray
    greedy_policy: np.ndarray
    q_values: np.ndarray  # Q at time 0, shape (S, A)
    stage_policies: Optional[np.ndarray] = None
    iterations: int = 0

    def value(self, state: int) -> float:
        v = self.values[0] if self.values.ndim == 2 else self.values
        return float(v[state])


@dataclass
class CompiledMDP:
    """A compiled MDP together with the meta-state behind every state index."""

    mdp: ExplicitMDP
    meta_states: List[Tuple[int, Tuple[Optional[int], ...]]]
    index: Dict[Tuple[int, Tuple[Optional[int], ...]], int]


def build_joint_mdp(m: ExplicitMMDP) -> ExplicitMDP:
    if m.joint_action_count > BUILD_LIMIT:
        raise SizeGuardError(f"{m.joint_action_count} joint actions exceed {BUILD_LIMIT}")
    return ExplicitMDP(m.state_count, m.joint_action_count, m.transition.copy(),
                       m.reward.sum(axis=2), m.initial_state, m.horizon)


def build_compiled_mdp(m: ExplicitMMDP) -> CompiledMDP:
    """Tabulate the supervisor MDP of ``m`` by stepping :class:`CompiledEnv`.

    Every ``(state, prefix)`` pair is included, reachable or not, so the
    state count is exactly ``|S| * sum_{k<n} |A|**k``.
    """
    size = decision_state_count(m.state_count, m.action_count, m.n)
    if size > BUILD_LIMIT:
        raise SizeGuardError(f"{size} meta-states exceed {BUILD_LIMIT}")

    meta_states: List[Tuple[int, Tuple[Optional[int], ...]]] = []
    for s in range(m.state_count):
        for k in range(m.n):
            for prefix in itertools.product(range(m.action_count), repeat=k):
                meta_states.append((s, tuple(prefix) + (None,) * (m.n - k)))
    index = {ms: i for i, ms in enumerate(meta_states)}

    endless = ExplicitMMDP(m.state_count, m.n, m.action_count, m.transition, m.reward,
                           m.initial_state, 0)
    env = CompiledEnv(TabularEnv(endless))
    env.reset(0)
    transition = np.zeros((size, m.action_count), dtype=np.int64)
    reward = np.zeros((size, m.action_count))
    for i, (s, slots) in enumerate(meta_states):
        origin = MetaState((s, 0), AssignmentList(slots))
        for a in range(m.action_count):
            env.restore(origin)
            result = env.step(a)
            nxt = result.next
            transition[i, a] = index[(nxt.env_state[0], nxt.assignments.slots)]
            reward[i, a] = result.meta_reward

    initial = index[(m.initial_state, (None,) * m.n)]
    mdp = ExplicitMDP(size, m.action_count, transition, reward, initial, m.horizon * m.n)
    return CompiledMDP(mdp, meta_states, index)


def value_iteration(mdp: ExplicitMDP, gamma: float, mode: str = FINITE,
                    tolerance: float = 1e-12, max_iterations: int = 1_000_000) -> ValueSolution:
    """Bellman optimality backups; argmax ties go to the lowest action index."""
    if not 0.0 <= gamma <= 1.0:
        raise InputError("gamma must lie in [0, 1]")
    T, R = mdp.transition, mdp.reward

    if mode == FINITE:
        H = mdp.horizon
        values = np.zeros((H + 1, mdp.state_count))
        policies = np.zeros((H, mdp.state_count), dtype=np.int64)
        q = R.copy()
        for t in range(H - 1, -1, -1):
            q = R + gamma * values[t + 1][T]
            policies[t] = np.argmax(q, axis=1)
            values[t] = q.max(axis=1)
        greedy = policies[0] if H else np.zeros(mdp.state_count, dtype=np.int64)
        return ValueSolution(values, greedy, q if H else np.zeros_like(R), policies, H)

    if mode != INFINITE:
        raise InputError(f"unknown value-iteration mode {mode!r}")
    if gamma >= 1.0:
        raise InputError("infinite-horizon value iteration needs gamma < 1")
    v = np.zeros(mdp.state_count)
    for it in range(1, max_iterations + 1):
        q = R + gamma * v[T]
        new = q.max(axis=1)
        delta = float(np.max(np.abs(new - v))) if v.size else 0.0
        v = new
        if delta < tolerance:
            break
    q = R + gamma * v[T]
    return ValueSolution(v, np.argmax(q, axis=1), q, None, it)


def best_plan_return(m: ExplicitMMDP, gamma: float = 1.0) -> float:
    """Maximum discounted return over all open-loop joint-action plans."""
    J, H = m.joint_action_count, m.horizon
    if J**H > PLAN_LIMIT:
        raise SizeGuardError(f"{J**H} plans exceed {PLAN_LIMIT}")
    team = m.reward.sum(axis=2)
    states = np.array([m.initial_state])
    returns = np.zeros(1)
    for t in range(H):
        returns = (returns[:, None] + gamma**t * team[states]).ravel()
        states = m.transition[states].ravel()
    return float(returns.max())


@dataclass
class EquivalenceReport:
    joint_return: float
    compiled_return: float
    plan_return: Optional[float]
    gamma_env: float
    gamma_meta: float
    discounted_joint: float
    discounted_compiled: float
    greedy_joint_action: Tuple[int, ...]
    greedy_gap: float
    tolerance: float = 1e-9
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def check_equivalence(m: ExplicitMMDP, gamma_env: float = 1.0, tolerance: float = 1e-9,
                      use_plans: bool = True) -> EquivalenceReport:
    """Compare joint, compiled and (optionally) brute-force optimal returns.

    Undiscounted returns must agree.  With per-meta-step discount
    ``gamma_env**(1/n)`` the compiled optimum must equal
    ``gamma_env**((n-1)/n)`` times the joint optimum, because the reward of
    environment step ``t`` arrives at meta-step ``t*n + n - 1``.
    """
    joint = build_joint_mdp(m)
    compiled = build_compiled_mdp(m)
    cm = compiled.mdp

    joint_sol = value_iteration(joint, 1.0)
    comp_sol = value_iteration(cm, 1.0)
    joint_return = joint_sol.value(joint.initial_state)
    compiled_return = comp_sol.value(cm.initial_state)

    plan_return = None
    if use_plans and m.joint_action_count**m.horizon <= PLAN_LIMIT:
        plan_return = best_plan_return(m)

    gamma_meta = gamma_env ** (1.0 / m.n)
    disc_joint = value_iteration(joint, gamma_env).value(joint.initial_state)
    disc_comp = value_iteration(cm, gamma_meta).value(cm.initial_state)

    # Greedy joint action assembled from the first n compiled decisions.
    greedy: Tuple[int, ...] = ()
    gap = 0.0
    if m.horizon > 0:
        idx = cm.initial_state
        for t in range(m.n):
            a = int(comp_sol.stage_policies[t][idx])
            greedy += (a,)
            idx = int(cm.transition[idx, a])
        j = 0
        for a in greedy:
            j = j * m.action_count + a
        q0 = joint_sol.q_values[joint.initial_state]
        gap = float(q0.max() - q0[j])

    failures = []
    if abs(joint_return - compiled_return) >= tolerance:
        failures.append(f"undiscounted: joint {joint_return!r} != compiled {compiled_return!r}")
    if plan_return is not None and abs(plan_return - joint_return) >= tolerance:
        failures.append(f"plan enumeration {plan_return!r} != joint {joint_return!r}")
    expected = gamma_env ** ((m.n - 1) / m.n) * disc_joint
    if abs(disc_comp - expected) >= tolerance:
        failures.append(f"discounted (gamma={gamma_env}): compiled {disc_comp!r} != {expected!r}")
    if gap >= tolerance:
        failures.append(f"greedy joint action {greedy} is {gap!r} below the joint optimum")

    return EquivalenceReport(joint_return, compiled_return, plan_return, gamma_env, gamma_meta,
                             disc_joint, disc_comp, greedy, gap, tolerance, failures)
