"""Differentiation kernel.

Input derivatives are obtained by propagating second-order forward jets
(value, first, pure second directional derivative) one tracked direction
at a time via nested ``jax.jvp``; parameter gradients are reverse-mode
gradients taken through those jet computations, so losses built from
input derivatives remain exactly differentiable w.r.t. the parameters.

Mixed input partials are not computed directly; Laplacians need only the
pure second partials, and the one operator that wants a mixed spatial
partial reconstructs it from an extra diagonal-direction sweep
(d2/dv2 along v = e_i + e_j equals u_ii + 2 u_ij + u_jj).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Tuple, Union

import jax
import jax.numpy as jnp
import numpy as np

from .errors import InvalidStep, NonFiniteGradient, NonFiniteValue, UnsupportedOp

_TRACE_ERRORS = (jax.errors.JAXTypeError, TypeError)


class DerivativeBundle(NamedTuple):
    """Network outputs plus input derivatives at a batch of points.

    Shapes: ``u`` is [batch, outputs]; ``du`` and ``d2u`` are
    [batch, outputs, slots].  The first ``input_dim`` slots hold first
    and pure second partials per input coordinate (zero-filled above the
    requested order); any extra-direction sweeps follow in order.
    """

    u: jax.Array
    du: jax.Array
    d2u: jax.Array


@dataclass(frozen=True)
class DerivativeRequest:
    """Per-coordinate derivative orders plus optional extra directions.

    ``orders[k]`` in {0,1,2} is the order tracked for input coordinate k.
    Each entry of ``extra_directions`` is a direction vector swept at
    order 2 and appended as an additional slot.
    """

    orders: Tuple[int, ...]
    extra_directions: Tuple[Tuple[float, ...], ...] = ()

    def __post_init__(self):
        for o in self.orders:
            if o not in (0, 1, 2):
                raise ValueError(f"orders must be in {{0,1,2}}, got {o}")

    @property
    def n_slots(self) -> int:
        return len(self.orders) + len(self.extra_directions)


def _normalize_request(order, n_coords: int) -> DerivativeRequest:
    if isinstance(order, DerivativeRequest):
        if len(order.orders) != n_coords:
            raise ValueError(
                f"request has {len(order.orders)} orders for {n_coords} coordinates"
            )
        return order
    return DerivativeRequest(orders=(int(order),) * n_coords)


def _sweep(f: Callable, x: jax.Array, v: jax.Array, order: int):
    """Directional jet along v: (first, second) at the requested order."""
    if order >= 2:
        # jvp of (f, jvp f) along the same direction gives the pure
        # second directional derivative in one nested forward sweep
        inner = lambda y: jax.jvp(f, (y,), (v,))
        (_, du), (_, d2u) = jax.jvp(inner, (x,), (v,))
        return du, d2u
    _, du = jax.jvp(f, (x,), (v,))
    return du, jnp.zeros_like(du)


def _point_jet(f: Callable, x: jax.Array, req: DerivativeRequest):
    u = f(x)
    n_out = u.shape[0]
    zeros = jnp.zeros((n_out,), dtype=u.dtype)
    firsts = []
    seconds = []
    for k, order in enumerate(req.orders):
        if order == 0:
            firsts.append(zeros)
            seconds.append(zeros)
            continue
        v = jnp.zeros_like(x).at[k].set(1.0)
        du_k, d2u_k = _sweep(f, x, v, order)
        firsts.append(du_k)
        seconds.append(d2u_k)
    for direction in req.extra_directions:
        v = jnp.asarray(direction, dtype=x.dtype)
        du_k, d2u_k = _sweep(f, x, v, 2)
        firsts.append(du_k)
        seconds.append(d2u_k)
    du = jnp.stack(firsts, axis=-1)
    d2u = jnp.stack(seconds, axis=-1)
    return u, du, d2u


def input_derivatives(
    net_forward: Callable,
    params,
    points: jax.Array,
    order: Union[int, DerivativeRequest] = 2,
    chunk_size: int | None = None,
) -> DerivativeBundle:
    """Jet evaluation over a batch; pure, jit- and grad-safe.

    ``net_forward(params, x)`` must map a single point ``x`` of shape
    [coords] to an output vector of shape [outputs].  ``order`` is either
    a uniform derivative order or a :class:`DerivativeRequest`.  Results
    for the whole batch are assembled chunk-by-chunk in index order so
    the reduction layout is deterministic regardless of how the backend
    parallelizes each chunk.
    """
    points = jnp.asarray(points)
    if points.ndim == 1:
        points = points[None, :]
    req = _normalize_request(order, points.shape[1])

    def single(x):
        return _point_jet(lambda y: net_forward(params, y), x, req)

    if chunk_size is None or points.shape[0] <= chunk_size:
        u, du, d2u = jax.vmap(single)(points)
        return DerivativeBundle(u, du, d2u)

    pieces = []
    for start in range(0, points.shape[0], chunk_size):
        pieces.append(jax.vmap(single)(points[start : start + chunk_size]))
    u = jnp.concatenate([p[0] for p in pieces], axis=0)
    du = jnp.concatenate([p[1] for p in pieces], axis=0)
    d2u = jnp.concatenate([p[2] for p in pieces], axis=0)
    return DerivativeBundle(u, du, d2u)


def evaluate_with_input_derivatives(
    net_forward: Callable,
    params,
    points,
    order: Union[int, DerivativeRequest] = 2,
    chunk_size: int | None = None,
) -> DerivativeBundle:
    """Checked front-end around :func:`input_derivatives`.

    Raises ``NonFiniteValue`` (with the first offending point index) if
    any input or any derivative up to the requested order is not finite,
    and ``ValueError`` for an order outside {0, 1, 2}.
    """
    if not isinstance(order, DerivativeRequest) and order not in (0, 1, 2):
        raise ValueError(f"derivative order must be in {{0,1,2}}, got {order}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if not np.all(np.isfinite(pts)):
        idx = int(np.argwhere(~np.isfinite(pts).all(axis=1))[0, 0])
        raise NonFiniteValue(f"non-finite input at point index {idx}", point_index=idx)
    bundle = input_derivatives(net_forward, params, jnp.asarray(pts), order, chunk_size)
    stacked = np.concatenate(
        [
            np.asarray(bundle.u).reshape(pts.shape[0], -1),
            np.asarray(bundle.du).reshape(pts.shape[0], -1),
            np.asarray(bundle.d2u).reshape(pts.shape[0], -1),
        ],
        axis=1,
    )
    bad = ~np.isfinite(stacked).all(axis=1)
    if bad.any():
        idx = int(np.argmax(bad))
        raise NonFiniteValue(
            f"non-finite network output/derivative at point index {idx}", point_index=idx
        )
    return bundle


def loss_gradient(loss_fn: Callable, params):
    """Reverse-mode gradient of a scalar loss w.r.t. a parameter pytree.

    Gradient paths through :func:`input_derivatives` are exact.  Raises
    ``UnsupportedOp`` when the loss escapes the traceable primitive set
    and ``NonFiniteGradient`` when any gradient entry is NaN/Inf.
    """
    try:
        grads = jax.grad(loss_fn)(params)
    except _TRACE_ERRORS as exc:
        raise UnsupportedOp(f"loss function uses an unsupported primitive: {exc}") from exc
    flat, _ = jax.tree_util.tree_flatten(grads)
    for leaf in flat:
        if not bool(jnp.all(jnp.isfinite(leaf))):
            raise NonFiniteGradient("gradient contains non-finite entries")
    return grads


class GradcheckReport(NamedTuple):
    """Per-block max relative deviation between analytic and FD gradients."""

    deviations: dict
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance


def gradcheck(
    loss_fn: Callable,
    params,
    step: float,
    tolerance: float,
    n_directions: int = 3,
    seed: int = 0,
) -> GradcheckReport:
    """Directional central-difference check of ``loss_gradient``.

    For each parameter block (pytree leaf) the analytic directional
    derivative g.v is compared against (L(p+h v) - L(p-h v)) / 2h for
    ``n_directions`` random unit directions supported on that block; the
    reported deviation is max |analytic - fd| / (|fd| + 1e-12).
    """
    if not step > 0:
        raise InvalidStep(f"finite-difference step must be > 0, got {step}")
    grads = loss_gradient(loss_fn, params)
    leaves, treedef = jax.tree_util.tree_flatten(params)
    grad_leaves = jax.tree_util.tree_leaves(grads)
    paths = [
        "/".join(str(getattr(k, "key", getattr(k, "idx", k))) for k in path) or "params"
        for path, _ in jax.tree_util.tree_flatten_with_path(params)[0]
    ]
    rng = np.random.default_rng(seed)
    deviations = {}
    for i, (leaf, g_leaf, name) in enumerate(zip(leaves, grad_leaves, paths)):
        leaf_np = np.asarray(leaf, dtype=np.float64)
        worst = 0.0
        for _ in range(n_directions):
            v = rng.standard_normal(leaf_np.shape)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                continue
            v /= norm
            plus = [np.asarray(l, dtype=np.float64).copy() for l in leaves]
            minus = [np.asarray(l, dtype=np.float64).copy() for l in leaves]
            plus[i] = leaf_np + step * v
            minus[i] = leaf_np - step * v
            lp = float(loss_fn(jax.tree_util.tree_unflatten(treedef, [jnp.asarray(a) for a in plus])))
            lm = float(loss_fn(jax.tree_util.tree_unflatten(treedef, [jnp.asarray(a) for a in minus])))
            fd = (lp - lm) / (2.0 * step)
            analytic = float(np.sum(np.asarray(g_leaf, dtype=np.float64) * v))
            worst = max(worst, abs(analytic - fd) / (abs(fd) + 1e-12))
        deviations[name] = worst
    max_dev = max(deviations.values()) if deviations else 0.0
    return GradcheckReport(deviations=deviations, max_deviation=max_dev, tolerance=tolerance)
