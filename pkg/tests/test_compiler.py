import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supervisor_marl.compiler import (
    CompiledEnv,
    decision_state_count,
    initial_meta_state,
    joint_action_space_size,
    meta_state_space_size,
    reachable_decision_states,
    step,
)
from supervisor_marl.core import AssignmentList
from supervisor_marl.envs import CombatEnv, SwitchEnv, make_env
from supervisor_marl.errors import ArithmeticRangeError, ContractViolation, InputError, SizeGuardError
from supervisor_marl.mmdp import ExplicitMMDP

from recording import RecordingEnv


def test_initial_meta_state_switch2():
    env = SwitchEnv(2)
    meta = initial_meta_state(env, 0)
    assert meta.assignments == AssignmentList((None, None))
    assert meta.env_state == env.state


def test_initial_meta_state_combat5_and_determinism():
    env = CombatEnv(5)
    a = initial_meta_state(env, 11)
    b = initial_meta_state(env, 11)
    assert a.assignments.slots == (None,) * 5
    assert a == b


def test_intermediate_step_has_zero_reward_and_keeps_state():
    env = CompiledEnv(RecordingEnv(2, 3))
    start = env.reset(0)
    res = step(env, 2)
    assert res.next.assignments.slots == (2, None)
    assert res.next.env_state == start.env_state
    assert res.meta_reward == 0.0
    assert not res.env_stepped and not res.terminal
    assert env.inner.executed == []


def test_completing_step_executes_and_sums_rewards():
    env = CompiledEnv(RecordingEnv(2, 3))
    env.reset(0)
    env.step(2)
    res = env.step(1)
    assert env.inner.executed == [(2, 1)]
    assert res.meta_reward == 1 * 3 + 2 * 2
    assert res.env_stepped
    assert res.next.assignments.slots == (None, None)


def test_six_agent_worked_example():
    # assign a_2, a_1, a_3, a_2, a_4, a_3 builds a single joint action
    env = CompiledEnv(RecordingEnv(6, 5))
    env.reset(0)
    results = [env.step(a) for a in (2, 1, 3, 2, 4, 3)]
    assert env.inner.executed == [(2, 1, 3, 2, 4, 3)]
    assert [r.env_stepped for r in results] == [False] * 5 + [True]


def test_step_rejects_out_of_range_action():
    env = CompiledEnv(RecordingEnv(2, 3))
    env.reset(0)
    with pytest.raises(InputError):
        env.step(3)
    with pytest.raises(InputError):
        env.step(-1)


def test_step_after_terminal_is_a_contract_violation():
    env = CompiledEnv(RecordingEnv(2, 2, horizon=1))
    env.reset(0)
    env.step(0)
    assert env.step(1).terminal
    with pytest.raises(ContractViolation):
        env.step(0)


def test_terminal_discards_partial_assignments_on_reset():
    env = CompiledEnv(RecordingEnv(3, 2, horizon=1))
    env.reset(0)
    for a in (0, 1, 1):
        res = env.step(a)
    assert res.terminal
    assert env.reset(1).assignments.slots == (None,) * 3


def test_meta_action_count_matches_individual_actions():
    for name, n in (("switch", 3), ("traffic", 7), ("combat", 6)):
        env = CompiledEnv(make_env(name, n))
        assert env.meta_action_count == env.inner.action_count


@pytest.mark.parametrize("a, n, expected", [(5, 6, 15625), (7, 1, 7), (2, 10, 1024)])
def test_joint_action_space_size(a, n, expected):
    assert joint_action_space_size(a, n) == expected


def test_joint_action_space_size_overflow():
    assert joint_action_space_size(2, 62) == 2**62
    with pytest.raises(ArithmeticRangeError):
        joint_action_space_size(2, 63)


@pytest.mark.parametrize("s, a, n, expected", [(1, 5, 6, 19531), (4, 5, 6, 78124), (9, 4, 0, 9)])
def test_meta_state_space_size(s, a, n, expected):
    # 19531 = 1 + 5 + 25 + 125 + 625 + 3125 + 15625
    assert meta_state_space_size(s, a, n) == expected


def test_meta_state_space_size_overflow():
    with pytest.raises(ArithmeticRangeError):
        meta_state_space_size(2**40, 2, 30)


def test_decision_state_count_excludes_full_lists():
    assert decision_state_count(1, 5, 6) == 19531 - 15625


def _mmdp(states, actions, n, transition):
    joint = actions**n
    return ExplicitMMDP(states, n, actions, np.asarray(transition).reshape(states, joint),
                        np.zeros((states, joint, n)), 0, 1)


def test_reachable_self_loop():
    # (-,-), (a_0,-), (a_1,-)
    assert reachable_decision_states(_mmdp(1, 2, 2, [[0] * 4])) == 3


def test_reachable_two_states():
    assert reachable_decision_states(_mmdp(2, 2, 2, [[1] * 4, [0] * 4])) == 6


def test_reachable_single_action_three_agents():
    # (-,-,-), (a,-,-), (a,a,-)
    assert reachable_decision_states(_mmdp(1, 1, 3, [[0]])) == 3


def test_reachable_counts_only_reachable_states():
    # state 1 is never entered
    assert reachable_decision_states(_mmdp(2, 2, 2, [[0] * 4, [0] * 4])) == 3


def test_reachable_guard():
    with pytest.raises(SizeGuardError):
        reachable_decision_states(_mmdp(1, 2, 2, [[0] * 4]), limit=2)


def random_stream_env(name, n):
    return CompiledEnv(make_env(name, n, max_env_steps=15))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([("switch", 2), ("switch", 4), ("traffic", 4), ("combat", 5)]),
       st.integers(0, 2**31 - 1))
def test_compiler_properties_over_random_streams(task, seed):
    name, n = task
    env = random_stream_env(name, n)
    rng = np.random.default_rng(seed)
    env.reset(seed)
    shadow = make_env(name, n, max_env_steps=15)
    shadow.reset(seed)
    meta_total, env_total, pending = 0.0, 0.0, []
    for t in range(1, 500):
        before = env.inner.state
        a = int(rng.integers(env.meta_action_count))
        pending.append(a)
        res = env.step(a)
        assert res.env_stepped == (t % n == 0)
        if not res.env_stepped:
            assert res.meta_reward == 0.0
            assert env.inner.state is before
        else:
            out = shadow.execute(pending)
            pending = []
            env_total += sum(out.rewards)
        meta_total += res.meta_reward
        if res.terminal:
            break
    assert res.terminal
    assert meta_total == env_total


def test_identical_streams_give_identical_results():
    def run():
        env = CompiledEnv(make_env("traffic", 4))
        env.reset(5)
        rng = np.random.default_rng(3)
        out = []
        for _ in range(200):
            out.append(env.step(int(rng.integers(2))))
            if out[-1].terminal:
                break
        return out

    assert run() == run()
