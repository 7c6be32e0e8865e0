"""Acceptance gate: one test, and one pytest -v line, per advertised
desk-scale guarantee.

Each suite runs once per session through the small cache below.  Two
suite runs each back a pair of criteria: the policy-surgery suite checks
both the blockify value bound and the truncation accounting, and the
baselines suite checks both the adaptivity witness and the Monte-Carlo
consistency of the simulator.  Every test asserts its wall-clock budget
next to its semantics.
"""

from __future__ import annotations

import statistics
import time

from stochprobe import ProblemSpec, Pmf, build_probemax, expected_max, optimal_value
from stochprobe.harness import Report, RunConfig, run_suite

_REPORTS: dict[str, Report] = {}


def suite_report(name: str) -> Report:
    if name not in _REPORTS:
        _REPORTS[name] = run_suite(RunConfig(suite=name, seed=0))
    return _REPORTS[name]


def test_oracle_identity_on_200_instances():
    report = suite_report("oracle")
    assert len(report.rows) == 200
    assert report.passed
    assert all(row["pass"] for row in report.rows)
    assert report.wall_seconds < 60.0


def test_block_value_envelope_on_500_trees():
    report = suite_report("lemma31")
    assert len(report.rows) == 500
    assert report.passed
    assert all(row["pass"] for row in report.rows)
    assert report.wall_seconds < 30.0


def test_blockify_keeps_p1_and_loses_at_most_k_eps_squared_max():
    report = suite_report("alg1")
    bound_rows = [row for row in report.rows if isinstance(row["index"], int)]
    assert len(bound_rows) == 100
    assert report.passed
    assert all(row["p1"] and row["pass"] for row in bound_rows)
    assert report.wall_seconds < 120.0


def test_truncation_loss_equals_cut_set_surplus():
    report = suite_report("alg1")
    assert report.passed
    assert all(row["pass"] for row in report.rows)
    # The identity must be exercised: some rows have nonempty cut sets.
    assert report.summary["cut_rows"] >= 1
    assert report.wall_seconds < 30.0


def test_ptas_end_to_end_ratios_on_50_instances():
    report = suite_report("ptas_e2e")
    assert len(report.rows) == 50
    assert report.passed
    ratios = [row["ratio"] for row in report.rows]
    assert min(ratios) >= 0.75 - 1e-9
    assert statistics.fmean(ratios) >= 0.90
    assert report.wall_seconds < 600.0


def test_configuration_dp_is_complete_at_zero_rounding_loss():
    report = suite_report("signatures")
    assert report.passed
    assert all(row["pass"] for row in report.rows)
    assert report.wall_seconds < 60.0


def test_discretization_identities_on_1000_pmfs():
    report = suite_report("discretization")
    assert len(report.rows) == 1000
    assert report.passed
    assert all(row["mass_error"] <= 1e-12 for row in report.rows)
    assert report.wall_seconds < 10.0


def test_committed_pandora_stays_below_index_policy():
    report = suite_report("committed")
    assert len(report.rows) == 100
    assert report.passed
    assert all(row["pass"] for row in report.rows)
    assert report.wall_seconds < 60.0


def test_adaptivity_witness_three_eight_versus_three_seven():
    start = time.perf_counter()
    spec = ProblemSpec("probemax", (
        Pmf(((0.0, 0.5), (4.0, 0.5))),
        Pmf(((3.0, 1.0),)),
        Pmf(((0.0, 0.9), (10.0, 0.1))),
    ), m=2)
    inst, _maps = build_probemax(spec, step=1.0, theta=10.0)
    adaptive = optimal_value(inst)
    best_pair = max(
        expected_max([spec.items[a], spec.items[b]])
        for a in range(3) for b in range(a + 1, 3))
    wall = time.perf_counter() - start
    assert abs(adaptive - 3.8) <= 1e-9
    assert abs(best_pair - 3.7) <= 1e-9
    assert wall < 1.0


def test_sbk_reduction_quarter_bound_on_100_trees():
    report = suite_report("sbk")
    named = {row["name"]: row for row in report.rows}
    assert sum(1 for name in named if name.startswith("random_")) == 100
    assert report.passed
    hand = named["two_zero_size"]
    assert abs(hand["skp"] - 6.0) <= 1e-9 and abs(hand["sbk"] - 3.0) <= 1e-9
    assert report.wall_seconds < 10.0


def test_target_relaxation_metrics_on_50_instances():
    report = suite_report("target")
    assert len(report.rows) == 50
    assert report.passed
    assert all(row["pass"] for row in report.rows)  # mass accounting
    assert all(row["slack"] >= 0.0 for row in report.rows)
    assert report.summary["deviating_le_half"] is True
    assert report.wall_seconds < 120.0


def test_simulation_consistency_on_20_pairs():
    report = suite_report("baselines")
    sims = [row for row in report.rows if str(row["name"]).startswith("sim_")]
    assert len(sims) == 20
    assert report.passed
    assert all(row["pass"] for row in sims)
    assert report.wall_seconds < 60.0
