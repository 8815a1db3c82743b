"""Traveling-wave benchmark: 1D reaction-diffusion with logistic growth.

u_t = D u_xx + r u (1 - alpha u) on [-L/2, L/2] x [0, T_end], with a
Gaussian initial bump and homogeneous Dirichlet ends.  Two fronts leave
the bump symmetrically, so the field must decrease monotonically outward
on both sides: one sign-switching spatial irreversibility term about the
bump center covers both fronts.
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
class FisherParams:
    D: float = 1.0  # diffusion coefficient, m^2/s
    r: float = 1.0  # reaction rate, 1/s
    alpha: float = 1.0  # reaction nonlinearity
    A: float = 1.0  # initial bump amplitude
    beta: float = 1.0  # initial bump width, 1/m^2
    L: float = 40.0  # domain length, m
    x0: float = 0.0  # bump center, m
    T_end: float = 20.0  # horizon, s

    def __post_init__(self):
        if min(self.D, self.r, self.L, self.beta) <= 0:
            raise ValueError("D, r, L, beta must be positive")


def initial_profile(params: FisherParams, x):
    return params.A * np.exp(-params.beta * (np.asarray(x) - params.x0) ** 2)


def make_domain(params: FisherParams) -> Domain:
    return Domain(
        bounds=((-params.L / 2, params.L / 2), (0.0, params.T_end)),
        roles=("space", "time"),
        names=("x", "t"),
    )


def residual_fn(params: FisherParams, domain: Domain):
    s_x, s_t = domain.scale_factors()

    def fn(ctx, pts, extra):
        b = ctx["main"]
        u = b.u[:, 0]
        u_t = b.du[:, 0, 1] * s_t
        u_xx = b.d2u[:, 0, 0] * s_x**2
        return u_t - params.D * u_xx - params.r * u * (1.0 - params.alpha * u)

    return fn


def build(profile: str = "desk", params: FisherParams | None = None, seed: int = 0) -> Problem:
    params = params or FisherParams()
    domain = make_domain(params)
    half = params.L / 2

    # desk keeps the architecture but halves the embedding width; the
    # solution's spectral content is low so 64 features at sigma 2 suffice
    m_f = 128 if profile == "paper" else 64
    net = NetworkConfig(
        architecture="modified_mlp",
        depth=4,
        width=64,
        activation="snake",
        input_dim=2,
        output_dim=1,
        ffe=FourierConfig(m_f=m_f, sigma_x=2.0, sigma_t=2.0, seed=seed),
        time_index=1,
    )

    res = residual_fn(params, domain)

    def ic_fn(ctx, pts, extra):
        x_phys = pts[:, 0] * half
        target = params.A * jnp.exp(-params.beta * (x_phys - params.x0) ** 2)
        return ctx["main"].u[:, 0] - target

    def bc_fn(ctx, pts, extra):
        return ctx["main"].u[:, 0]

    # outward-monotone decay about the bump center, in normalized units
    irr_spec = IrreversibilitySpec(
        coordinate=0, direction="sign_switching", center=params.x0 / half, epsilon_x=1e-6
    )

    def irr_fn(ctx, pts, extra):
        du = ctx["main"].du[:, 0, 0]
        return violation(du, irr_spec, beta_value=pts[:, 0])

    point_specs = {
        "g": PointSpec(key="g", kind="interior", n=400),
        "i": PointSpec(key="i", kind="initial", n=256, fixed=((1, 0.0),)),
        "b_left": PointSpec(key="b_left", kind="boundary", n=128, fixed=((0, -half),)),
        "b_right": PointSpec(key="b_right", kind="boundary", n=128, fixed=((0, half),)),
    }

    terms = (
        TermDef(name="g", weight_key="g", kind="residual", points_key="g", fn=res, causal=True),
        TermDef(name="b_left", weight_key="b", kind="residual", points_key="b_left", fn=bc_fn),
        TermDef(name="b_right", weight_key="b", kind="residual", points_key="b_right", fn=bc_fn),
        TermDef(name="i", weight_key="i", kind="residual", points_key="i", fn=ic_fn),
        TermDef(name="irr", weight_key="irr", kind="irr", points_key="g", fn=irr_fn),
    )

    epochs = 4000 if profile == "paper" else 3000
    n_adaptive = 2000 if profile == "paper" else 600

    training = TrainingConfig(
        epochs=epochs,
        initial_lr=1e-3,
        optimizer="adam",
        causal=CausalConfig(n_segments=10, epsilon_c=0.01),
        weighting=LossWeights(alpha_w=0.9, update_interval=100),
        seed=seed,
        n_adaptive=n_adaptive,
    )

    problem = Problem(
        name="traveling_wave",
        domain=domain,
        nets={"main": net},
        point_specs=point_specs,
        terms=terms,
        derivative_orders={
            # u_xx needs order 2 in x; only u_t in time
            "g": {"main": DerivativeRequest(orders=(2, 1))},
            "i": {"main": 0},
            "b_left": {"main": 0},
            "b_right": {"main": 0},
        },
        stage_params=(("net:main",),),
        adaptive_key="g",
        refinement_residual=res,
        causal_coord=1,
        irr_term_names=("irr",),
    )
    problem.params = params
    problem.training = training
    return problem


def predict_on_grid(problem, params_dict, x, t, batch=8192):
    """Evaluate the trained field on a tensor grid; returns [len(t), len(x)]."""
    import jax

    from ..networks import build_network

    net = build_network(problem.nets["main"])
    theta = params_dict["net:main"]
    xx, tt = np.meshgrid(np.asarray(x), np.asarray(t))
    pts = np.column_stack([xx.ravel(), tt.ravel()])
    norm = problem.domain.normalize(pts)
    out = []
    apply = jax.jit(net.apply_batch)
    for start in range(0, norm.shape[0], batch):
        out.append(np.asarray(apply(theta, jnp.asarray(norm[start : start + batch]))))
    return np.concatenate(out)[:, 0].reshape(len(np.asarray(t)), len(np.asarray(x)))


def make_evaluator(problem, reference, stride_x=25, stride_t=25):
    """Relative-L2 monitor vs an fd_fisher grid, on a thinned subgrid."""
    from ..reference.metrics import relative_l2

    x = reference.axis("x")[::stride_x]
    t = reference.axis("t")[::stride_t]
    ref = reference.fields["u"][::stride_t, ::stride_x]

    def evaluate(params_dict):
        pred = predict_on_grid(problem, params_dict, x, t)
        return {"rel_l2": relative_l2(pred, ref)}

    return evaluate
