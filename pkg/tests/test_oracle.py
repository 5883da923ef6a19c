import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supervisor_marl.compiler import decision_state_count
from supervisor_marl.errors import InputError, SizeGuardError
from supervisor_marl.mmdp import (
    ExplicitMDP,
    ExplicitMMDP,
    dumps_mmdp,
    joint_action_of,
    load_mmdp,
    loads_mmdp,
    random_mmdp,
    save_mmdp,
)
from supervisor_marl.oracle import (
    best_plan_return,
    build_compiled_mdp,
    build_joint_mdp,
    check_equivalence,
    value_iteration,
)


def test_geometric_series_value():
    mdp = ExplicitMDP(1, 1, np.zeros((1, 1), int), np.ones((1, 1)), 0, 0)
    sol = value_iteration(mdp, 0.5, "infinite", tolerance=1e-12)
    assert sol.value(0) == pytest.approx(2.0, abs=1e-11)


def test_infinite_mode_rejects_gamma_one():
    mdp = ExplicitMDP(1, 1, np.zeros((1, 1), int), np.ones((1, 1)), 0, 0)
    with pytest.raises(InputError):
        value_iteration(mdp, 1.0, "infinite")


def test_zero_reward_mdp():
    mdp = ExplicitMDP(3, 2, np.array([[1, 2], [2, 0], [0, 1]]), np.zeros((3, 2)), 0, 4)
    sol = value_iteration(mdp, 1.0)
    assert np.all(sol.values == 0.0)
    assert np.all(sol.greedy_policy == 0)


def test_two_state_chain_backward_induction():
    # action 0 ("a") pays 1, action 1 ("b") pays 0
    mdp = ExplicitMDP(2, 2, np.array([[1, 1], [0, 0]]), np.array([[1.0, 0.0], [1.0, 0.0]]), 0, 2)
    sol = value_iteration(mdp, 1.0)
    assert sol.value(0) == 2.0
    assert sol.greedy_policy[0] == 0


def test_ties_break_to_lowest_index():
    mdp = ExplicitMDP(1, 3, np.zeros((1, 3), int), np.array([[0.5, 1.0, 1.0]]), 0, 1)
    assert value_iteration(mdp, 1.0).greedy_policy[0] == 1


def test_joint_mdp_sizes_and_sums():
    m = random_mmdp(3, 2, 2, 3, 2)
    joint = build_joint_mdp(m)
    assert joint.action_count == 9
    np.testing.assert_array_equal(joint.reward, m.reward.sum(axis=2))
    single = random_mmdp(3, 2, 1, 3, 2)
    np.testing.assert_array_equal(build_joint_mdp(single).reward, single.reward[:, :, 0])


def test_joint_mdp_guard():
    m = ExplicitMMDP.__new__(ExplicitMMDP)
    object.__setattr__(m, "state_count", 2)
    object.__setattr__(m, "n", 6)
    object.__setattr__(m, "action_count", 11)
    with pytest.raises(SizeGuardError):
        build_joint_mdp(m)


def test_compiled_mdp_minimal_example():
    m = random_mmdp(0, 1, 2, 2, 1)
    compiled = build_compiled_mdp(m)
    assert compiled.mdp.state_count == 3
    assert compiled.mdp.action_count == 2
    assert compiled.meta_states[compiled.mdp.initial_state] == (0, (None, None))
    assert compiled.mdp.horizon == 2


@pytest.mark.parametrize("s, n, a", [(4, 2, 2), (3, 3, 3), (6, 1, 3)])
def test_compiled_state_count_closed_form(s, n, a):
    compiled = build_compiled_mdp(random_mmdp(1, s, n, a, 2))
    assert compiled.mdp.state_count == decision_state_count(s, a, n)


def test_compiled_intermediate_rewards_are_zero():
    m = random_mmdp(5, 3, 3, 2, 2)
    compiled = build_compiled_mdp(m)
    for idx, (s, slots) in enumerate(compiled.meta_states):
        if sum(x is not None for x in slots) < m.n - 1:
            assert np.all(compiled.mdp.reward[idx] == 0.0)


def test_workhorse_instance_against_hand_enumeration():
    m = random_mmdp(2024, 4, 2, 2, 3)
    joint = m.joint_action_count
    best = -np.inf
    for plan in itertools.product(range(joint), repeat=m.horizon):
        s, total = m.initial_state, 0.0
        for j in plan:
            total += m.reward[s, j].sum()
            s = m.transition[s, j]
        best = max(best, total)
    report = check_equivalence(m)
    assert report.passed, report.failures
    assert report.joint_return == pytest.approx(best, abs=1e-9)
    assert report.compiled_return == pytest.approx(best, abs=1e-9)
    assert best_plan_return(m) == pytest.approx(best, abs=1e-9)


def test_single_agent_is_trivially_equal():
    report = check_equivalence(random_mmdp(9, 5, 1, 3, 4), gamma_env=0.9)
    assert report.passed
    assert report.joint_return == report.compiled_return


def test_zero_reward_mmdp():
    m = random_mmdp(1, 3, 2, 2, 2)
    m = ExplicitMMDP(m.state_count, m.n, m.action_count, m.transition, np.zeros_like(m.reward),
                     m.initial_state, m.horizon)
    report = check_equivalence(m)
    assert report.joint_return == 0.0 and report.compiled_return == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 3), st.integers(1, 3),
       st.integers(1, 4), st.sampled_from([1.0, 0.9, 0.5]))
def test_equivalence_property(seed, s, n, a, h, gamma):
    report = check_equivalence(random_mmdp(seed, s, n, a, h), gamma_env=gamma, use_plans=gamma == 1.0)
    assert report.passed, report.failures
    assert report.discounted_compiled == pytest.approx(
        gamma ** ((n - 1) / n) * report.discounted_joint, abs=1e-9)


def test_greedy_reconstruction_reaches_joint_optimum():
    m = random_mmdp(77, 4, 3, 2, 3)
    report = check_equivalence(m)
    assert len(report.greedy_joint_action) == 3
    assert report.greedy_gap <= 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 5.0))
def test_value_iteration_monotone_in_rewards(seed, c):
    m = random_mmdp(seed, 3, 2, 2, 3)
    mdp = build_joint_mdp(m)
    shifted = ExplicitMDP(mdp.state_count, mdp.action_count, mdp.transition, mdp.reward + c,
                          mdp.initial_state, mdp.horizon)
    base = value_iteration(mdp, 1.0).values
    up = value_iteration(shifted, 1.0).values
    stages_left = np.arange(mdp.horizon, -1, -1)[:, None]
    np.testing.assert_allclose(up - base, np.broadcast_to(c * stages_left, base.shape), atol=1e-9)


def test_random_mmdp_determinism():
    a, b, c = random_mmdp(1, 4, 2, 2, 3), random_mmdp(1, 4, 2, 2, 3), random_mmdp(2, 4, 2, 2, 3)
    assert np.array_equal(a.reward, b.reward) and np.array_equal(a.transition, b.transition)
    assert not (np.array_equal(a.reward, c.reward) and np.array_equal(a.transition, c.transition))
    assert np.all(np.abs(a.reward) <= 1.0)


def test_text_format_round_trip(tmp_path):
    m = random_mmdp(8, 3, 2, 3, 4)
    again = loads_mmdp(dumps_mmdp(m))
    assert np.array_equal(again.transition, m.transition)
    assert np.array_equal(again.reward, m.reward)
    assert (again.horizon, again.initial_state) == (m.horizon, m.initial_state)
    path = tmp_path / "m.txt"
    save_mmdp(m, path)
    assert np.array_equal(load_mmdp(path).reward, m.reward)


@pytest.mark.parametrize("text", [
    "mmdp 1 1 2 1 0\n0 0 0 1.0\n",  # missing row
    "mmdp 1 1 1 1 0\n0 0 0 1.0\n0 0 0 1.0\n",  # duplicate row
    "mmdp 1 1 1 1 0\n0 0 3 1.0\n",  # bad next state
    "nope\n",
])
def test_text_format_rejects_bad_input(text):
    with pytest.raises(InputError):
        loads_mmdp(text)


def test_joint_action_digit_order():
    assert joint_action_of(5, 2, 3) == (1, 0, 1)
