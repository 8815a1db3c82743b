"""Loss terms: residual/boundary/initial, irreversibility penalties,
the fracture KKT residual, causal temporal weighting, and
gradient-normalized loss weighting.

Residual-type terms are mean-squared; irreversibility terms are the mean
of the raw (degree-1) violation, which keeps the penalty positively
homogeneous in the derivative magnitude.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from .autodiff import DerivativeBundle
from .errors import EmptySet

log = logging.getLogger(__name__)

FORWARD = "forward"
BACKWARD = "backward"
SIGN_SWITCHING = "sign_switching"


@dataclass(frozen=True)
class IrreversibilitySpec:
    """Which derivative is penalized and how.

    ``coordinate`` indexes the tracked input coordinate of the bundle,
    ``output`` selects the network output.  Directions: forward penalizes
    negative derivatives (field must not decrease along the coordinate),
    backward penalizes positive ones.  The sign-switching variant flips
    the penalized direction on either side of ``center`` so a single term
    can enforce outward-monotone decay from an interior peak; it is only
    meaningful on spatial coordinates.
    """

    coordinate: int
    direction: str  # forward | backward | sign_switching
    output: int = 0
    center: float = 0.0
    epsilon_x: float = 1e-6
    smoothing: str = "relu"  # relu | softplus
    softplus_beta: float = 100.0

    def __post_init__(self):
        if self.direction not in (FORWARD, BACKWARD, SIGN_SWITCHING):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.smoothing not in ("relu", "softplus"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")
        if self.epsilon_x <= 0:
            raise ValueError("epsilon_x must be > 0")


def _smooth_positive_part(z, spec: IrreversibilitySpec):
    if spec.smoothing == "softplus":
        b = spec.softplus_beta
        return jax.nn.softplus(b * z) / b
    return jax.nn.relu(z)


def violation(du, spec: IrreversibilitySpec, beta_value=0.0):
    """Pointwise violation measure, >= 0.

    forward: max(0, -du); backward: max(0, du); sign-switching:
    max(0, s*du) with s = (beta - center)/(|beta - center| + eps_x).
    """
    du = jnp.asarray(du)
    if spec.direction == FORWARD:
        arg = -du
    elif spec.direction == BACKWARD:
        arg = du
    else:
        offset = jnp.asarray(beta_value) - spec.center
        s = offset / (jnp.abs(offset) + spec.epsilon_x)
        arg = s * du
    return _smooth_positive_part(arg, spec)


def irr_loss(bundle: DerivativeBundle, spec: IrreversibilitySpec, beta_values=None):
    """Mean pointwise violation over the collocation set (degree-1 penalty)."""
    du = bundle.du[:, spec.output, spec.coordinate]
    if du.shape[0] == 0:
        raise EmptySet("irreversibility loss over an empty collocation set")
    if spec.direction == SIGN_SWITCHING and beta_values is None:
        raise ValueError("sign-switching spec needs the coordinate values")
    beta = beta_values if beta_values is not None else 0.0
    return jnp.mean(violation(du, spec, beta))


def _mean_square(values, what):
    values = jnp.asarray(values)
    if values.size == 0:
        raise EmptySet(f"{what} over an empty point set")
    return jnp.mean(values**2)


def residual_loss(residuals):
    return _mean_square(residuals, "residual loss")


def bc_loss(residuals):
    return _mean_square(residuals, "boundary loss")


def ic_loss(residuals):
    return _mean_square(residuals, "initial-condition loss")


def kkt_residual(r_hat, phi_hat, dphi_dt, eps_tol: float, eps_phi: float = 1e-3):
    """Pointwise complementarity residual for damage evolution, >= 0.

    Fully damaged (phi >= 1 - eps_phi): the upper bound is active and the
    driving force may only be non-positive -> max(0, r).  Stationary
    (|dphi/dt| < eps_tol): no evolution, force must be admissible ->
    max(0, -r).  Evolving interior: the active set requires r = 0 -> |r|.
    The damaged branch takes precedence where predicates overlap.
    """
    if eps_tol <= 0:
        raise ValueError("eps_tol must be > 0")
    r_hat = jnp.asarray(r_hat)
    phi_hat = jnp.asarray(phi_hat)
    dphi_dt = jnp.asarray(dphi_dt)
    stationary = jnp.abs(dphi_dt) < eps_tol
    damaged = phi_hat >= 1.0 - eps_phi
    return jnp.where(
        damaged,
        jax.nn.relu(r_hat),
        jnp.where(stationary, jax.nn.relu(-r_hat), jnp.abs(r_hat)),
    )


@dataclass(frozen=True)
class CausalConfig:
    """Segment-wise causal weighting of a residual along one coordinate."""

    n_segments: int = 10
    epsilon_c: float = 0.01
    threshold: float = 0.99
    growth: float = 2.0

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("need at least one segment")
        if self.epsilon_c <= 0:
            raise ValueError("epsilon_c must be > 0")


def causal_weights(segment_losses, epsilon_c, threshold: float = 0.99):
    """w_i = exp(-eps_c * sum_{j<i} L_j); constants w.r.t. parameters.

    Returns (weights, last_exceeds) where ``last_exceeds`` flags that the
    final segment's weight passed ``threshold`` so the trainer can grow
    ``epsilon_c``.
    """
    losses = jnp.asarray(segment_losses)
    prefix = jnp.cumsum(losses) - losses  # exclusive prefix sum, w_0 = 1
    weights = jnp.exp(-epsilon_c * prefix)
    weights = jax.lax.stop_gradient(weights)
    return weights, weights[-1] > threshold


def causal_segment_losses(values, coords_norm, n_segments: int):
    """Mean-square of ``values`` per segment of the [-1, 1] coordinate.

    Empty segments contribute zero.  Returns (segment_losses, counts).
    """
    values = jnp.asarray(values)
    seg = jnp.clip(((coords_norm + 1.0) * 0.5 * n_segments).astype(jnp.int32), 0, n_segments - 1)
    sums = jax.ops.segment_sum(values**2, seg, num_segments=n_segments)
    counts = jax.ops.segment_sum(jnp.ones_like(values), seg, num_segments=n_segments)
    return sums / jnp.maximum(counts, 1.0), counts


def grad_norm_weights(grad_norms, previous_weights, alpha_w: float):
    """Gradient-normalized weights with EMA smoothing (host-side, numpy).

    raw w_j = (sum_k ||grad L_k||) / ||grad L_j||, then
    w <- alpha_w * w_prev + (1 - alpha_w) * raw.  Terms with degenerate
    gradients (norm < 1e-12) keep their previous weight and a warning is
    logged.
    """
    norms = np.asarray(grad_norms, dtype=np.float64)
    prev = np.asarray(previous_weights, dtype=np.float64)
    degenerate = norms < 1e-12
    if degenerate.any():
        log.warning(
            "degenerate gradient norm(s) at index %s; keeping previous weights",
            np.nonzero(degenerate)[0].tolist(),
        )
    total = norms.sum()
    raw = np.where(degenerate, prev, total / np.where(degenerate, 1.0, norms))
    return alpha_w * prev + (1.0 - alpha_w) * raw


@dataclass(frozen=True)
class LossWeights:
    """Weighting policy: EMA smoothing, update cadence, and a cap.

    The cap guards the known failure mode of inverse-norm weighting: once
    a term is essentially solved its gradient norm collapses and the raw
    weight diverges, letting noise on the solved term dominate training.
    """

    alpha_w: float = 0.9
    update_interval: int = 100
    max_weight: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.alpha_w < 1.0:
            raise ValueError("alpha_w must be in [0, 1)")
        if self.update_interval < 1:
            raise ValueError("update_interval must be positive")
        if self.max_weight <= 0:
            raise ValueError("max_weight must be positive")


def total_loss(terms, weights):
    """Weighted sum over active terms; missing terms contribute nothing."""
    total = 0.0
    for name, value in terms.items():
        total = total + weights.get(name, 1.0) * value
    return total
