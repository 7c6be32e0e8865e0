"""Shared builders for the test suite.

The adaptivity trio shows up across modules: three items where probing
the coin first and reacting beats every fixed pair, so it separates
adaptive from non-adaptive values (3.8 vs 3.7).
"""

import pytest

from stochprobe import ActionSpec, Instance, Pmf, ProblemSpec, TransitionRow, ValueSpace


@pytest.fixture
def witness_spec() -> ProblemSpec:
    """Probe 2 of 3: a 0/4 coin, a sure 3, and a long-shot 0/10 coin."""
    return ProblemSpec(
        "probemax",
        (
            Pmf(((0.0, 0.5), (4.0, 0.5))),
            Pmf(((3.0, 1.0),)),
            Pmf(((0.0, 0.9), (10.0, 0.1))),
        ),
        m=2,
    )


def kernel(actions, terminal, horizon, start_level=0):
    """Instance shorthand: level count inferred from the terminal vector."""
    return Instance(ValueSpace(len(terminal)), horizon, tuple(actions),
                    tuple(float(h) for h in terminal), start_level=start_level)


def act(aid, group, rows, profit=0.0):
    """Action shorthand: rows maps level -> ((to, p), ...)."""
    return ActionSpec(aid, group,
                      {lvl: TransitionRow(tuple(probs), profit)
                       for lvl, probs in rows.items()})
