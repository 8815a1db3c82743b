"""Collocation-point generation.

Uniform random sets regenerated at fixed cadences plus residual-based
adaptive refinement that keeps the points with the largest residual
magnitudes out of a larger candidate pool.  All network inputs are
normalized affinely to [-1, 1] per coordinate; residual operators apply
the corresponding chain-rule scale factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, PoolTooSmall

SPACE = "space"
TIME = "time"


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box with coordinate roles and the [-1,1] training map."""

    bounds: Tuple[Tuple[float, float], ...]
    roles: Tuple[str, ...]
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.bounds) != len(self.roles):
            raise ConfigError("bounds and roles length mismatch")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ConfigError(f"degenerate bounds ({lo}, {hi})")
        if not self.names:
            object.__setattr__(
                self, "names", tuple(f"x{i}" for i in range(len(self.bounds)))
            )

    @property
    def n_coords(self) -> int:
        return len(self.bounds)

    @property
    def time_index(self) -> Optional[int]:
        for i, role in enumerate(self.roles):
            if role == TIME:
                return i
        return None

    def lows(self):
        return np.array([b[0] for b in self.bounds])

    def highs(self):
        return np.array([b[1] for b in self.bounds])

    def normalize(self, points):
        """Physical -> [-1, 1] training coordinates."""
        lo, hi = self.lows(), self.highs()
        return 2.0 * (np.asarray(points) - lo) / (hi - lo) - 1.0

    def denormalize(self, points):
        lo, hi = self.lows(), self.highs()
        return lo + (np.asarray(points) + 1.0) * 0.5 * (hi - lo)

    def scale_factors(self):
        """d(normalized)/d(physical) per coordinate: 2 / (hi - lo)."""
        lo, hi = self.lows(), self.highs()
        return 2.0 / (hi - lo)


@dataclass
class CollocationSet:
    """Points in physical units plus provenance bookkeeping."""

    points: np.ndarray
    provenance: str = "general"
    epoch_stamp: int = 0

    def __len__(self):
        return self.points.shape[0]


def sample_uniform(
    domain: Domain,
    n: int,
    seed: int,
    fixed: Optional[Dict[int, float]] = None,
    box: Optional[Dict[int, Tuple[float, float]]] = None,
    provenance: str = "general",
    epoch_stamp: int = 0,
) -> CollocationSet:
    """I.i.d. uniform points over the box, deterministic per seed.

    ``fixed`` pins coordinates exactly (boundary/initial sets), e.g.
    {0: -20.0} places every point on the x = -20 face.  ``box`` narrows
    the sampling range of selected coordinates (boundary segments).
    """
    if n <= 0:
        raise ConfigError(f"need n > 0, got {n}")
    rng = np.random.default_rng(seed)
    lo, hi = domain.lows(), domain.highs()
    if box:
        lo = lo.copy()
        hi = hi.copy()
        for coord, (b_lo, b_hi) in box.items():
            lo[coord], hi[coord] = b_lo, b_hi
    pts = rng.uniform(lo, hi, size=(n, domain.n_coords))
    if fixed:
        for coord, value in fixed.items():
            pts[:, coord] = value
    return CollocationSet(points=pts, provenance=provenance, epoch_stamp=epoch_stamp)


def adaptive_refine(
    pool: CollocationSet, residual_magnitudes, n_adapt: int
) -> CollocationSet:
    """Top-k |residual| subset of the pool; ties broken by lower index."""
    res = np.abs(np.asarray(residual_magnitudes, dtype=np.float64))
    if len(pool) < n_adapt:
        raise PoolTooSmall(f"pool of {len(pool)} cannot supply {n_adapt} points")
    if res.shape[0] != len(pool):
        raise ConfigError("one residual magnitude per pool point required")
    # lexsort: primary descending residual, secondary ascending index
    order = np.lexsort((np.arange(res.shape[0]), -res))
    chosen = np.sort(order[:n_adapt])
    return CollocationSet(
        points=pool.points[chosen],
        provenance="adaptive",
        epoch_stamp=pool.epoch_stamp,
    )
