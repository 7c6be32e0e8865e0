"""Approximation pipeline: signatures, topologies, the placement DP, search."""

import pytest

from stochprobe import (
    BlockNode,
    CapacityError,
    ConfigDpResult,
    HintError,
    ParameterError,
    PtasKnobs,
    action_signature,
    block_leaf,
    block_profit_approx,
    block_profit_exact,
    block_signature,
    build_probemax,
    config_dp,
    enumerate_topologies,
    estimate_max,
    materialize,
    max_over_starts,
    optimal_value,
    reconstruct_and_score,
    solve_ptas,
)
from stochprobe.harness import GenParams, gen_random_kernel

from conftest import act, kernel


@pytest.fixture
def two_probe_kernel():
    return kernel(
        [act("a1", "g1", {0: ((0, 0.5), (1, 0.5))}),
         act("a2", "g2", {0: ((0, 0.75), (1, 0.25))})],
        [0.0, 1.0], 2)


def test_signature_floors_off_grid_mass():
    inst = kernel([act("a", "g", {0: ((0, 0.863), (1, 0.137))})], [0.0, 1.0], 1)
    sig = action_signature(inst, "a", 0, 0.0625, 1.0)
    assert sig.units == (13, 2, 0)
    assert sig.grid == 0.0625


def test_signature_keeps_lattice_points_exact():
    inst = kernel([act("a", "g", {0: ((0, 0.75), (1, 0.25))})], [0.0, 1.0], 1)
    assert action_signature(inst, "a", 0, 0.0625, 1.0).units == (12, 4, 0)


def test_signature_zero_profit_entry():
    inst = kernel([act("a", "g", {0: ((1, 1.0),)})], [0.0, 1.0], 1)
    assert action_signature(inst, "a", 0, 0.25, 1.0).units[-1] == 0


def test_signature_rejects_bad_grid():
    inst = kernel([act("a", "g", {0: ((0, 1.0),)})], [0.0], 1)
    with pytest.raises(ParameterError):
        action_signature(inst, "a", 0, 0.0, 1.0)


def test_signature_rounding_loss_under_one_grid_step():
    inst = kernel([act("a", "g", {0: ((0, 0.863), (1, 0.137))}, profit=0.33)],
                  [0.0, 1.0], 1)
    grid, max_ref = 0.0625, 2.0
    sig = action_signature(inst, "a", 0, grid, max_ref)
    assert 0.0 <= 0.137 - sig.units[1] * grid < grid
    assert 0.0 <= 0.33 - sig.profit_value() < grid * max_ref


def test_block_signature_is_entrywise_sum():
    inst = kernel(
        [act("a", "ga", {0: ((0, 0.863), (1, 0.137))}, profit=0.2),
         act("b", "gb", {0: ((0, 0.9), (1, 0.1))}, profit=0.3)],
        [0.0, 1.0], 2)
    sa = action_signature(inst, "a", 0, 0.0625, 1.0)
    sb = action_signature(inst, "b", 0, 0.0625, 1.0)
    sab = block_signature(inst, ("a", "b"), 0, 0.0625, 1.0)
    assert sab.units == tuple(x + y for x, y in zip(sa.units, sb.units))


def test_topologies_single_level_are_chains():
    assert len(enumerate_topologies(1, 3, 2, 0)) == 2
    assert len(enumerate_topologies(1, 5, 5, 0)) == 5


def test_topologies_single_block_two_levels():
    tops = enumerate_topologies(2, 1, 2, 0)
    assert len(tops) == 1
    assert tops[0].node_count() == 1


def test_topologies_two_blocks_two_levels():
    # Root plus either a flat child, an up child, or both.
    assert len(enumerate_topologies(2, 2, 2, 0)) == 3


def test_topologies_deterministic_order():
    a = enumerate_topologies(3, 4, 3, 0)
    b = enumerate_topologies(3, 4, 3, 0)
    assert a == b


def test_topologies_count_cap_overflow():
    with pytest.raises(CapacityError):
        enumerate_topologies(4, 8, 6, 0, count_cap=10)


def test_config_dp_single_block_unit_cap(two_probe_kernel):
    top = enumerate_topologies(2, 1, 1, 0)[0]
    result = config_dp(two_probe_kernel, top, 0.25, 1.0, caps=1)
    assert len(result.candidates) == 3  # empty, {a1}, {a2}
    sizes = sorted(sum(len(p) for p in cand.placements if p is not None)
                   for cand in result.candidates)
    assert sizes == [0, 1, 1]


def test_config_dp_zero_caps_only_empty(two_probe_kernel):
    top = enumerate_topologies(2, 1, 1, 0)[0]
    result = config_dp(two_probe_kernel, top, 0.25, 1.0, caps=0)
    assert len(result.candidates) == 1
    assert all(not p for p in result.candidates[0].placements)


def test_config_dp_coarse_grid_collapses_signatures(two_probe_kernel):
    # Grid 2.0 floors every mass and profit to zero, so all placements
    # share the single zero configuration.
    top = enumerate_topologies(2, 1, 1, 0)[0]
    result = config_dp(two_probe_kernel, top, 2.0, 1.0, caps=2)
    assert len(result.candidates) == 1


def test_config_dp_state_cap_overflow(two_probe_kernel):
    top = enumerate_topologies(2, 2, 2, 0)[0]
    with pytest.raises(CapacityError):
        config_dp(two_probe_kernel, top, 0.015625, 1.0, caps=2, state_cap=1)


def test_config_dp_env_var_overrides_state_cap(two_probe_kernel, monkeypatch):
    monkeypatch.setenv("STOCHPROBE_STATE_CAP", "1")
    top = enumerate_topologies(2, 2, 2, 0)[0]
    with pytest.raises(CapacityError):
        config_dp(two_probe_kernel, top, 0.015625, 1.0, caps=2)


def test_config_dp_placements_reproduce_signatures(two_probe_kernel):
    # Regrouping the per-group placements by node and re-summing the action
    # signatures must land exactly on the unit tuples the DP recorded.
    top = enumerate_topologies(2, 2, 2, 0)[0]
    levels = _preorder_levels(top)
    result = config_dp(two_probe_kernel, top, 0.25, 1.0, caps=2)
    for cand in result.candidates:
        per_node: dict[int, list[str]] = {}
        for placed in cand.placements:
            for node_idx, action_id in placed or ():
                per_node.setdefault(node_idx, []).append(action_id)
        for node_idx, sig_units in enumerate(cand.signatures):
            rebuilt = block_signature(
                two_probe_kernel, per_node.get(node_idx, []),
                levels[node_idx], 0.25, 1.0)
            assert rebuilt.units == sig_units


def _preorder_levels(topology):
    levels = []

    def walk(node):
        levels.append(node.level)
        for _key, child in node.children:
            walk(child)

    walk(topology)
    return levels


def test_reconstruct_single_candidate(two_probe_kernel):
    top = enumerate_topologies(2, 1, 1, 0)[0]
    result = config_dp(two_probe_kernel, top, 0.25, 1.0, caps=0)
    tree, value = reconstruct_and_score(
        two_probe_kernel, top, result, 0.25, 1.0)
    assert value == pytest.approx(0.0, abs=1e-12)


def test_reconstruct_empty_candidates_is_noop(two_probe_kernel):
    empty = ConfigDpResult((), 0, ("g1", "g2"))
    top = enumerate_topologies(2, 1, 1, 0)[0]
    tree, value = reconstruct_and_score(two_probe_kernel, top, empty, 0.25, 1.0)
    assert value == pytest.approx(two_probe_kernel.terminal[0], abs=1e-12)


def test_reconstruct_exact_rescoring_beats_surrogate_order():
    # Candidate "a" hides almost a full grid step of mass and profit from
    # the surrogate; with top_k=1 the on-grid "b" wins, with top_k=2 the
    # exact rescoring recovers "a".
    inst = kernel(
        [act("a", "ga", {0: ((0, 0.7501), (1, 0.2499))}, profit=0.2499),
         act("b", "gb", {0: ((0, 0.8125), (1, 0.1875))}, profit=0.25)],
        [0.0, 1.0], 1)
    top = enumerate_topologies(2, 1, 1, 0)[0]
    result = config_dp(inst, top, 0.0625, 1.0, caps=1)
    tree1, value1 = reconstruct_and_score(inst, top, result, 0.0625, 1.0, top_k=1)
    assert tree1.items == ("b",)
    assert value1 == pytest.approx(0.4375, abs=1e-12)
    tree2, value2 = reconstruct_and_score(inst, top, result, 0.0625, 1.0, top_k=2)
    assert tree2.items == ("a",)
    assert value2 == pytest.approx(0.4998, abs=1e-12)


def test_signature_equal_trees_score_close():
    # Same topology, equal per-node signatures: the order-free scores
    # differ by less than one effective grid step per block and level.
    inst = kernel(
        [act("a", "ga", {0: ((0, 0.861), (1, 0.139))}),
         act("b", "gb", {0: ((0, 0.870), (1, 0.130))})],
        [0.0, 1.0], 1)
    grid, max_ref = 0.0625, 1.0
    assert action_signature(inst, "a", 0, grid, max_ref).units == \
        action_signature(inst, "b", 0, grid, max_ref).units
    ta = BlockNode(("a",), 0, {0: block_leaf(0), 1: block_leaf(1)})
    tb = BlockNode(("b",), 0, {0: block_leaf(0), 1: block_leaf(1)})
    K = 2
    bound = 1 * (1 + 3 * K) * grid * max_ref
    assert abs(block_profit_approx(inst, ta)
               - block_profit_approx(inst, tb)) <= bound


def test_estimate_max_delegates_to_oracle(two_probe_kernel):
    assert estimate_max(two_probe_kernel, "exact") == pytest.approx(
        max_over_starts(two_probe_kernel), abs=1e-12)


def test_estimate_max_greedy_needs_probemax(two_probe_kernel):
    with pytest.raises(HintError):
        estimate_max(two_probe_kernel, "greedy_probemax")


def test_estimate_max_terminal_bound():
    inst = kernel([act("a", "g", {0: ((0, 1.0),)})], [0.0, 3.0], 1)
    assert estimate_max(inst, "terminal_bound") == pytest.approx(3.0, abs=1e-12)


def test_solve_single_action_matches_oracle():
    inst = kernel([act("a", "g", {0: ((0, 0.5), (1, 0.5))})], [0.0, 1.0], 1)
    knobs = PtasKnobs(eps=0.5, grid=0.25, block_budget=1, depth_limit=1)
    res = solve_ptas(inst, knobs)
    assert res.value == pytest.approx(optimal_value(inst), abs=1e-9)
    assert res.diagnostics.completed == res.diagnostics.topologies
    assert not res.diagnostics.partial


def test_solve_witness_with_lossless_grid(witness_spec):
    inst, _ = build_probemax(witness_spec, step=1.0, theta=10.0)
    knobs = PtasKnobs(eps=0.3, grid=0.1, block_budget=6, depth_limit=4, top_k=32)
    res = solve_ptas(inst, knobs)
    assert res.value == pytest.approx(3.8, abs=1e-9)


def test_solve_zero_caps_is_noop(witness_spec):
    inst, _ = build_probemax(witness_spec, step=1.0, theta=10.0)
    knobs = PtasKnobs(eps=0.3, grid=0.1, block_budget=6, depth_limit=4, caps=0)
    res = solve_ptas(inst, knobs)
    assert res.value == pytest.approx(inst.terminal[0], abs=1e-12)


def test_solve_survives_per_topology_capacity_errors(witness_spec):
    inst, _ = build_probemax(witness_spec, step=1.0, theta=10.0)
    knobs = PtasKnobs(eps=0.3, grid=0.1, block_budget=6, depth_limit=4,
                      top_k=32, state_cap=200)
    res = solve_ptas(inst, knobs)
    assert res.diagnostics.partial
    assert res.diagnostics.capacity_errors > 0
    assert res.value >= inst.terminal[0] - 1e-12


def test_solve_recovers_exact_optimum_on_grid_kernels():
    # Zero-profit dyadic kernels with every mass on the 1/8 lattice: the
    # placement DP loses nothing, so full-depth search returns the oracle.
    for seed in range(3):
        inst = gen_random_kernel(
            seed, GenParams(n=3, levels=2, horizon=3, q=4, zero_profit=True))
        if all(h == 0.0 for h in inst.terminal):
            continue
        knobs = PtasKnobs(eps=0.5, grid=0.125, block_budget=6, depth_limit=3,
                          top_k=10 ** 9, max_hint="exact")
        res = solve_ptas(inst, knobs)
        assert res.value == pytest.approx(optimal_value(inst), abs=1e-9)


def test_materialized_trees_validate(two_probe_kernel):
    top = enumerate_topologies(2, 2, 2, 0)[0]
    result = config_dp(two_probe_kernel, top, 0.25, 1.0, caps=2)
    for cand in result.candidates:
        tree = materialize(two_probe_kernel, top, cand, result.group_order)
        assert block_profit_exact(two_probe_kernel, tree) >= -1e-12
