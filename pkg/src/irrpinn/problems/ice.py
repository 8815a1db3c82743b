"""Melting benchmark: a driven interface in 3D + time.

A single order-parameter equation moves the solid/liquid interface at a
constant rate: phi_t = M (lap(phi) - F'(phi)/ell^2) - (lambda/ell)
sqrt(2 F(phi)) with the quartic double well F = (phi^2 - 1)^2 / 4.  The
drive dominates the curvature term at the tabulated parameters, so the
front radius follows R(t) = R0 - lambda*t, which the closed-form
reference encodes.  Melting is one-way: backward temporal
irreversibility on phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np

from ..autodiff import DerivativeRequest
from ..losses import CausalConfig, IrreversibilitySpec, LossWeights, violation
from ..networks import FourierConfig, NetworkConfig
from ..sampler import Domain
from ..trainer import TrainingConfig
from .base import PointSpec, Problem, TermDef


@dataclass(frozen=True)
class IceParams:
    M: float = 0.1  # mobility, mm^2/s
    ell: float = 2.25  # interface thickness, mm
    lambda_melt: float = 5.0  # melting rate, mm/s
    R0: float = 35.0  # initial radius, mm
    half_width: float = 50.0  # cubic domain half-width, mm
    T_end: float = 5.0  # s

    def __post_init__(self):
        if min(self.M, self.ell, self.lambda_melt, self.R0) <= 0:
            raise ValueError("all parameters must be positive")
        if self.R0 - self.lambda_melt * self.T_end < 0:
            raise ValueError("front would leave the domain before T_end")


def initial_profile(params: IceParams, r):
    return np.tanh((params.R0 - np.asarray(r)) / (np.sqrt(2.0) * params.ell))


def make_domain(params: IceParams) -> Domain:
    w = params.half_width
    return Domain(
        bounds=((-w, w), (-w, w), (-w, w), (0.0, params.T_end)),
        roles=("space", "space", "space", "time"),
        names=("x", "y", "z", "t"),
    )


def residual_fn(params: IceParams, domain: Domain):
    sf = domain.scale_factors()
    s_x, s_t = sf[0], sf[3]
    M, ell, lam = params.M, params.ell, params.lambda_melt

    def fn(ctx, pts, extra):
        b = ctx["main"]
        phi = b.u[:, 0]
        phi_t = b.du[:, 0, 3] * s_t
        lap = (b.d2u[:, 0, 0] + b.d2u[:, 0, 1] + b.d2u[:, 0, 2]) * s_x**2
        f_prime = phi**3 - phi
        # sqrt(2F) = |phi^2 - 1| / sqrt(2), exact and sign-safe
        drive = lam / ell * jnp.abs(phi**2 - 1.0) / jnp.sqrt(2.0)
        return phi_t - M * (lap - f_prime / ell**2) + drive

    return fn


def build(profile: str = "desk", params: IceParams | None = None, seed: int = 0) -> Problem:
    params = params or IceParams()
    domain = make_domain(params)
    w = params.half_width

    net = NetworkConfig(
        architecture="mlp",
        depth=3,
        width=64,
        activation="tanh",
        input_dim=4,
        output_dim=1,
        ffe=FourierConfig(m_f=64, sigma_x=2.0, sigma_t=0.2, seed=seed),
        time_index=3,
    )

    res = residual_fn(params, domain)

    def ic_fn(ctx, pts, extra):
        r = jnp.sqrt(jnp.sum((pts[:, :3] * w) ** 2, axis=1))
        target = jnp.tanh((params.R0 - r) / (jnp.sqrt(2.0) * params.ell))
        return ctx["main"].u[:, 0] - target

    def bc_fn(ctx, pts, extra):
        # the sphere never reaches the walls; far field is melted, phi = -1
        return ctx["main"].u[:, 0] + 1.0

    irr_spec = IrreversibilitySpec(coordinate=3, direction="backward")

    def irr_fn(ctx, pts, extra):
        return violation(ctx["main"].du[:, 0, 3], irr_spec)

    n_general = 20**4 if profile == "paper" else 6**4
    n_bc = 256 if profile == "paper" else 96
    point_specs = {
        "g": PointSpec(key="g", kind="interior", n=n_general),
        "i": PointSpec(key="i", kind="initial", n=4096 if profile == "paper" else 1024,
                       fixed=((3, 0.0),)),
    }
    for axis, name in ((0, "x"), (1, "y"), (2, "z")):
        for sign, tag in ((-w, "lo"), (w, "hi")):
            key = f"b_{name}_{tag}"
            point_specs[key] = PointSpec(key=key, kind="boundary", n=n_bc, fixed=((axis, sign),))

    bc_terms = tuple(
        TermDef(name=key, weight_key="b", kind="residual", points_key=key, fn=bc_fn)
        for key in point_specs
        if key.startswith("b_")
    )
    terms = (
        TermDef(name="g", weight_key="g", kind="residual", points_key="g", fn=res, causal=True),
        TermDef(name="i", weight_key="i", kind="residual", points_key="i", fn=ic_fn),
        TermDef(name="irr", weight_key="irr", kind="irr", points_key="g", fn=irr_fn),
    ) + bc_terms

    orders = {"g": {"main": DerivativeRequest(orders=(2, 2, 2, 1))}, "i": {"main": 0}}
    for key in point_specs:
        if key.startswith("b_"):
            orders[key] = {"main": 0}

    epochs = 4000 if profile == "paper" else 2000
    n_adaptive = 8000 if profile == "paper" else 1500

    training = TrainingConfig(
        epochs=epochs,
        initial_lr=5e-4,
        optimizer="adam",
        causal=CausalConfig(n_segments=10, epsilon_c=0.01),
        weighting=LossWeights(alpha_w=0.9, update_interval=100),
        seed=seed,
        n_adaptive=n_adaptive,
    )

    problem = Problem(
        name="ice",
        domain=domain,
        nets={"main": net},
        point_specs=point_specs,
        terms=terms,
        derivative_orders=orders,
        stage_params=(("net:main",),),
        adaptive_key="g",
        refinement_residual=res,
        causal_coord=3,
        irr_term_names=("irr",),
    )
    problem.params = params
    problem.training = training
    return problem


def predict_phi(problem, params_dict, pts_phys, batch=8192):
    import jax

    from ..networks import build_network

    net = build_network(problem.nets["main"])
    theta = params_dict["net:main"]
    norm = problem.domain.normalize(np.asarray(pts_phys))
    apply = jax.jit(net.apply_batch)
    out = []
    for start in range(0, norm.shape[0], batch):
        out.append(np.asarray(apply(theta, jnp.asarray(norm[start : start + batch]))))
    return np.concatenate(out)[:, 0]


def extract_radius(problem, params_dict, t, n_ray=501):
    """phi = 0 crossing along the +x ray at time t."""
    from ..reference.metrics import extract_interface

    p = problem.params
    xs = np.linspace(0.0, p.half_width, n_ray)
    pts = np.zeros((n_ray, 4))
    pts[:, 0] = xs
    pts[:, 3] = t
    phi = predict_phi(problem, params_dict, pts)
    # search from outside in: the field rises from -1 (melt) to +1 (solid)
    return extract_interface(phi, xs, 0.0)


def make_evaluator(problem, times=(1.0, 2.0, 3.0, 4.0, 5.0)):
    """Front-radius deviation against R(t) = R0 - lambda t."""
    from ..reference.ice_analytic import melting_radius

    p = problem.params

    def evaluate(params_dict):
        devs = []
        for t in times:
            target = melting_radius(p, t)
            try:
                r = extract_radius(problem, params_dict, t)
            except Exception:
                devs.append(1.0)
                continue
            devs.append(abs(r - target) / target)
        return {"rel_l2": 100.0 * max(devs), "radius_dev_max": max(devs)}

    return evaluate
