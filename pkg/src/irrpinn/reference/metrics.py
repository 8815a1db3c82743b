"""Error metrics and interface extraction."""

from __future__ import annotations

import numpy as np

from ..errors import NoInterface, ZeroReference


def relative_l2(prediction, reference) -> float:
    """||pred - ref||_2 / ||ref||_2 over all nodes, in percent."""
    pred = np.asarray(prediction, dtype=np.float64).ravel()
    ref = np.asarray(reference, dtype=np.float64).ravel()
    if pred.shape != ref.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {ref.shape}")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ZeroReference("reference field is identically zero")
    return 100.0 * float(np.linalg.norm(pred - ref) / denom)


def extract_interface(values, positions, level: float) -> float:
    """First crossing of ``level`` along a sampled ray, linearly interpolated.

    ``values`` are field samples at monotone ``positions``.  Raises
    NoInterface when the field never crosses the level.
    """
    v = np.asarray(values, dtype=np.float64)
    s = np.asarray(positions, dtype=np.float64)
    if v.shape != s.shape or v.ndim != 1:
        raise ValueError("values and positions must be matching 1D arrays")
    d = v - level
    for i in range(len(d) - 1):
        if d[i] == 0.0:
            return float(s[i])
        if d[i] * d[i + 1] < 0.0:
            frac = d[i] / (d[i] - d[i + 1])
            return float(s[i] + frac * (s[i + 1] - s[i]))
    if d[-1] == 0.0:
        return float(s[-1])
    raise NoInterface(f"no crossing of level {level} along the ray")
