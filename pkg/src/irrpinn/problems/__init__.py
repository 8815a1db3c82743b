"""Benchmark problem definitions.

Each benchmark module builds a :class:`~irrpinn.problems.base.Problem`
holding the domain, residual operators in normalized coordinates,
boundary/initial condition sets, irreversibility specifications, network
bindings and training defaults.
"""

from .base import Problem, PointSpec, TermDef, BENCHMARKS, build_problem

__all__ = ["Problem", "PointSpec", "TermDef", "BENCHMARKS", "build_problem"]
