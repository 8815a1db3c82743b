"""Problem container shared by all benchmarks.

A problem is a bag of loss-term definitions over named collocation sets.
Every term evaluates pointwise values from derivative bundles of the
problem's networks at one point set; the trainer reduces them (mean of
squares for residual-type terms, plain mean for irreversibility terms),
weights them per group, and optimizes stage by stage.

All term callables receive points and derivatives in normalized [-1,1]
coordinates; physical chain-rule factors are baked into each benchmark's
operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

from ..sampler import Domain


@dataclass(frozen=True)
class PointSpec:
    """One collocation set: interior, boundary face, or initial slice.

    ``fixed`` pins coordinates to exact values; ``box`` narrows sampling
    ranges (e.g. a boundary segment).
    """

    key: str
    kind: str  # interior | boundary | initial
    n: int
    fixed: Tuple[Tuple[int, float], ...] = ()
    box: Tuple[Tuple[int, Tuple[float, float]], ...] = ()

    def fixed_dict(self):
        return dict(self.fixed)

    def box_dict(self):
        return {c: tuple(b) for c, b in self.box}


@dataclass(frozen=True)
class TermDef:
    """One loss term.

    ``fn(ctx, pts, extra)`` returns pointwise values at the set's points:
    signed residuals for kind 'residual' (reduced as mean of squares) or
    non-negative violations for kind 'irr' (reduced as plain mean).
    ``ctx`` maps net name -> DerivativeBundle, ``pts`` are normalized
    points, ``extra`` the problem's extra trainables (e.g. an eigenvalue).
    ``weight_key`` names the adaptive weight group the term feeds;
    ``stages`` lists the staggering stages in which it is optimized.
    """

    name: str
    weight_key: str
    kind: str  # residual | irr
    points_key: str
    fn: Callable
    stages: Tuple[int, ...] = (0,)
    causal: bool = False


@dataclass
class Problem:
    name: str
    domain: Domain
    nets: Dict[str, "NetworkConfig"]  # type: ignore[name-defined]
    point_specs: Dict[str, PointSpec]
    terms: Tuple[TermDef, ...]
    # per point-set, per net: max derivative order needed by any term
    derivative_orders: Dict[str, Dict[str, int]]
    # per stage: trainable leaves; net params are "net:<name>", extras "extra:<name>"
    stage_params: Tuple[Tuple[str, ...], ...] = (("net:main",),)
    # optional per-stage derivative requests (subset needed by that stage's
    # terms); falls back to derivative_orders
    stage_derivative_orders: Optional[Dict[int, Dict[str, Dict[str, int]]]] = None
    extra_init: Dict[str, float] = field(default_factory=dict)
    # interior set receiving residual-based refinement (None disables)
    adaptive_key: Optional[str] = None
    # fn(ctx, pts, extra) -> aggregate |residual| per point, for refinement
    refinement_residual: Optional[Callable] = None
    causal_coord: Optional[int] = None
    # fn(params_dict, problem) -> dict of evaluation metrics; wired by callers
    evaluate: Optional[Callable] = None
    irr_term_names: Tuple[str, ...] = ()
    # optional per-net forward overrides (params, x_norm) -> outputs, e.g.
    # hard-constraint ansatz wrapped around the raw network
    forward_fns: Optional[Dict[str, Callable]] = None

    def forward_fn(self, nets, name):
        if self.forward_fns and name in self.forward_fns:
            return self.forward_fns[name]
        return nets[name].apply

    def stage_terms(self, stage: int):
        return [t for t in self.terms if stage in t.stages]

    @property
    def n_stages(self) -> int:
        return len(self.stage_params)

    def weight_keys(self):
        seen = []
        for t in self.terms:
            if t.weight_key not in seen:
                seen.append(t.weight_key)
        return seen


BENCHMARKS = ("traveling_wave", "combustion", "ice", "corrosion", "fracture")


def build_problem(name: str, profile: str = "desk", **overrides) -> Problem:
    """Build a fully-populated benchmark by name.

    ``profile`` selects between the publication-scale configuration
    ("paper") and a reduced desk-scale one ("desk") sized for CPU runs.
    """
    if name == "traveling_wave":
        from .fisher import build

        return build(profile, **overrides)
    if name == "combustion":
        from .combustion import build

        return build(profile, **overrides)
    if name == "ice":
        from .ice import build

        return build(profile, **overrides)
    if name == "corrosion":
        from .corrosion import build

        return build(profile, **overrides)
    if name == "fracture":
        from .fracture import build

        return build(profile, **overrides)
    raise KeyError(f"unknown benchmark {name!r}; valid: {', '.join(BENCHMARKS)}")
