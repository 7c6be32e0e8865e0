"""Serialization, generators, simulation, acceptance suites, and the CLI."""

from .gen import GenParams, gen_random, gen_random_kernel, gen_random_policy, stream
from .io import (parse_block_tree, parse_instance, parse_policy,
                 parse_policy_or_block, serialize_block_tree, serialize_instance,
                 serialize_policy, serialize_spec)
from .sim import SimResult, Z99, simulate
from .suites import Report, RunConfig, SUITES, run_suite

__all__ = [
    "GenParams",
    "Report",
    "RunConfig",
    "SUITES",
    "SimResult",
    "Z99",
    "gen_random",
    "gen_random_kernel",
    "gen_random_policy",
    "parse_block_tree",
    "parse_instance",
    "parse_policy",
    "parse_policy_or_block",
    "run_suite",
    "serialize_block_tree",
    "serialize_instance",
    "serialize_policy",
    "serialize_spec",
    "simulate",
    "stream",
]
