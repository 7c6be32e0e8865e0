"""Exact finite-horizon solver: oracle identities and state-space limits."""

import pytest

from stochprobe import (
    CapacityError,
    Pmf,
    ProblemSpec,
    build_probemax,
    evaluate_policy,
    expected_max,
    max_over_starts,
    optimal_policy,
    optimal_value,
    subtree_values,
    walk_reach,
)
from stochprobe.harness import GenParams, gen_random_kernel

from conftest import act, kernel

COIN_10 = Pmf(((0.0, 0.5), (10.0, 0.5)))
DET_6 = Pmf(((6.0, 1.0),))


def test_single_coin_value_is_its_mean():
    spec = ProblemSpec("probemax", (COIN_10,), m=1)
    inst, _ = build_probemax(spec, step=1.0, theta=10.0)
    assert optimal_value(inst) == pytest.approx(5.0, abs=1e-9)


def test_one_probe_prefers_the_sure_six():
    spec = ProblemSpec("probemax", (COIN_10, DET_6), m=1)
    inst, _ = build_probemax(spec, step=1.0, theta=10.0)
    assert optimal_value(inst) == pytest.approx(6.0, abs=1e-9)


def test_adaptivity_witness_value(witness_spec):
    # Probing the 0/4 coin first and reacting earns
    # 0.5*(0.1*10 + 0.9*4) + 0.5*(0.1*10 + 0.9*3) = 3.8,
    # while the best fixed pair {sure 3, long shot} gets only 3.7.
    inst, _ = build_probemax(witness_spec, step=1.0, theta=10.0)
    assert optimal_value(inst) == pytest.approx(3.8, abs=1e-9)
    best_pair = max(
        expected_max([witness_spec.items[i], witness_spec.items[j]])
        for i in range(3) for j in range(i + 1, 3))
    assert best_pair == pytest.approx(3.7, abs=1e-9)


def test_witness_policy_probes_coin_then_reacts(witness_spec):
    inst, _ = build_probemax(witness_spec, step=1.0, theta=10.0)
    tree = optimal_policy(inst)
    assert tree.action == "i0"
    assert tree.children[4].action == "i2"
    assert tree.children[0].action == "i1"
    assert evaluate_policy(inst, tree) == pytest.approx(3.8, abs=1e-9)


def test_policy_matches_value_on_random_kernels():
    for seed in range(40):
        inst = gen_random_kernel(seed, GenParams(n=5, levels=4, horizon=5))
        tree = optimal_policy(inst)
        assert evaluate_policy(inst, tree) == pytest.approx(
            optimal_value(inst), abs=1e-9)


def test_ties_break_to_lowest_action_id():
    spec = ProblemSpec("probemax", (COIN_10, COIN_10), m=1)
    inst, _ = build_probemax(spec, step=1.0, theta=10.0)
    assert optimal_policy(inst).action == "i0"


def test_identical_items_swap_invariant():
    spec = ProblemSpec("probemax", (COIN_10, COIN_10), m=1)
    inst, _ = build_probemax(spec, step=1.0, theta=10.0)
    assert optimal_value(inst) == pytest.approx(5.0, abs=1e-9)


def test_no_actions_returns_terminal():
    inst = kernel([], [0.0, 2.5], 3, start_level=1)
    assert optimal_value(inst) == pytest.approx(2.5, abs=1e-12)


def test_start_level_parameter():
    inst = kernel([act("a", "g", {0: ((0, 0.5), (1, 0.5))})], [0.0, 4.0], 1)
    assert optimal_value(inst, 1) == pytest.approx(4.0, abs=1e-12)
    assert optimal_value(inst, 0) == pytest.approx(2.0, abs=1e-12)


def test_max_over_starts_monotone_terminal():
    inst = kernel([act("a", "g", {0: ((0, 0.5), (1, 0.5))})], [0.0, 4.0], 1)
    assert max_over_starts(inst) == pytest.approx(4.0, abs=1e-12)


def test_max_over_starts_no_op_kernel():
    inst = kernel([act("a", "g", {0: ((0, 1.0),), 1: ((1, 1.0),)})], [0.0, 3.0], 2)
    assert max_over_starts(inst) == pytest.approx(3.0, abs=1e-12)


def test_adding_profitable_action_never_hurts():
    for seed in range(15):
        inst = gen_random_kernel(seed, GenParams(n=4, levels=3, horizon=4))
        base = optimal_value(inst)
        extra = act("zz_extra", "zz_extra", {0: ((0, 1.0),)}, profit=0.25)
        grown = kernel(list(inst.actions) + [extra], inst.terminal, inst.horizon)
        assert optimal_value(grown) >= base - 1e-9


def test_every_subtree_value_at_most_max():
    for seed in range(15):
        inst = gen_random_kernel(seed, GenParams(n=4, levels=3, horizon=4))
        cap = max_over_starts(inst)
        tree = optimal_policy(inst)
        values = subtree_values(inst, tree)
        for node, _phi, _mu, _acc in walk_reach(inst, tree):
            assert values[id(node)] <= cap + 1e-9


def test_group_cap_overflow_raises():
    acts = [act(f"a{i}", f"g{i}", {0: ((0, 1.0),)}, profit=0.1) for i in range(4)]
    inst = kernel(acts, [0.0], 4)
    with pytest.raises(CapacityError):
        optimal_value(inst, group_cap=3)
