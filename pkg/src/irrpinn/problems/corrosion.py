"""Pitting-corrosion benchmark: coupled transport + interface equations.

Two unknown fields on a 2D strip: normalized metal-ion concentration c
(conserved transport) and order parameter phi (1 metal, 0 electrolyte).
Internally everything runs in micrometer-second units, where the
transport diffusivity 2*A*M is ~850 um^2/s and the interface relaxation
rate L*w_phi is ~3.5e7 1/s; the interface equation is therefore
quasi-static and is normalized by L*w_phi so its residual is O(1).

A semicircular pit at the bottom-center communicates with a fresh
electrolyte reservoir through its mouth segment (c = 0, phi = 0 there);
all other boundaries are no-flux.  Corroded metal never heals: backward
temporal irreversibility on phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np

from ..autodiff import DerivativeRequest
from ..losses import CausalConfig, IrreversibilitySpec, LossWeights, violation
from ..networks import FourierConfig, NetworkConfig
from ..sampler import Domain
from ..trainer import StaggerSchedule, TrainingConfig
from .base import PointSpec, Problem, TermDef

M_TO_UM = 1.0e6


@dataclass(frozen=True)
class CorrosionParams:
    # SI inputs
    alpha_phi: float = 1.03e-4  # gradient energy coefficient, J/m
    w_phi: float = 1.76e7  # double-well height, J/m^3
    ell: float = 1.0e-5  # interface thickness, m
    L_mob: float = 2.0  # interface mobility, m^3/(J s)
    M_diff: float = 7.94e-18  # diffusivity parameter, m^5/(J s)
    A_free: float = 5.35e7  # free-energy curvature, J/m^3
    c_Se: float = 1.0
    c_Le: float = 0.036
    # geometry (micrometers) and horizon
    x_half: float = 50.0
    y_max: float = 50.0
    T_end: float = 30.0
    pit_radius: float = 5.0
    # monitor points in the corrosion path, um
    monitor_points: tuple = ((0.0, 8.0), (-8.0, 4.0), (8.0, 4.0))

    def __post_init__(self):
        if self.c_Se <= self.c_Le:
            raise ValueError("c_Se must exceed c_Le")

    @property
    def delta_c(self) -> float:
        return self.c_Se - self.c_Le

    @property
    def D_ch(self) -> float:
        """Transport diffusivity 2*A*M in um^2/s."""
        return 2.0 * self.A_free * self.M_diff * M_TO_UM**2

    @property
    def ac_rate(self) -> float:
        """Interface relaxation rate L*w_phi, 1/s."""
        return self.L_mob * self.w_phi

    @property
    def coupling(self) -> float:
        """2*A/w_phi, the dimensionless exchange coefficient."""
        return 2.0 * self.A_free / self.w_phi

    @property
    def grad_coef(self) -> float:
        """alpha_phi/w_phi in um^2 (square of the interface scale)."""
        return self.alpha_phi / self.w_phi * M_TO_UM

    @property
    def interface_delta(self) -> float:
        """Equilibrium tanh scale sqrt(alpha/(2 w)) in um."""
        return float(np.sqrt(self.grad_coef / 2.0))


def h_interp(phi):
    """Quintic interpolation: h(0)=0, h(1)=1, h'(0)=h'(1)=0."""
    return phi**3 * (6.0 * phi**2 - 15.0 * phi + 10.0)


def h_prime(phi):
    return 30.0 * phi**2 * (1.0 - phi) ** 2


def h_second(phi):
    return 60.0 * phi * (1.0 - phi) * (1.0 - 2.0 * phi)


def g_prime(phi):
    return 2.0 * phi * (1.0 - phi) * (1.0 - 2.0 * phi)


def initial_fields(params: CorrosionParams, x, y):
    """(c0, phi0): metal body with a semicircular undersaturated pit."""
    d = np.sqrt(np.asarray(x) ** 2 + np.asarray(y) ** 2) - params.pit_radius
    phi0 = 0.5 * (1.0 + np.tanh(d / (2.0 * params.interface_delta)))
    return h_interp(phi0), phi0


def make_domain(params: CorrosionParams) -> Domain:
    return Domain(
        bounds=((-params.x_half, params.x_half), (0.0, params.y_max), (0.0, params.T_end)),
        roles=("space", "space", "time"),
        names=("x", "y", "t"),
    )


def residual_fns(params: CorrosionParams, domain: Domain):
    """Returns (ch_fn, ac_fn) in normalized training coordinates."""
    sf = domain.scale_factors()
    s_x, s_y, s_t = sf
    p = params

    def fields(ctx):
        b = ctx["main"]
        c = b.u[:, 0]
        phi = b.u[:, 1]
        c_t = b.du[:, 0, 2] * s_t
        phi_t = b.du[:, 1, 2] * s_t
        lap_c = b.d2u[:, 0, 0] * s_x**2 + b.d2u[:, 0, 1] * s_y**2
        lap_phi = b.d2u[:, 1, 0] * s_x**2 + b.d2u[:, 1, 1] * s_y**2
        grad_phi_sq = (b.du[:, 1, 0] * s_x) ** 2 + (b.du[:, 1, 1] * s_y) ** 2
        return c, phi, c_t, phi_t, lap_c, lap_phi, grad_phi_sq

    def ch_fn(ctx, pts, extra):
        c, phi, c_t, phi_t, lap_c, lap_phi, gphi2 = fields(ctx)
        lap_h = h_second(phi) * gphi2 + h_prime(phi) * lap_phi
        return c_t - p.D_ch * lap_c + p.D_ch * p.delta_c * lap_h

    def ac_fn(ctx, pts, extra):
        c, phi, c_t, phi_t, lap_c, lap_phi, gphi2 = fields(ctx)
        bracket = c - h_interp(phi) * p.delta_c - p.c_Le
        return (
            phi_t / p.ac_rate
            - p.coupling * bracket * p.delta_c * h_prime(phi)
            + g_prime(phi)
            - p.grad_coef * lap_phi
        )

    return ch_fn, ac_fn


def build(profile: str = "desk", params: CorrosionParams | None = None, seed: int = 0) -> Problem:
    params = params or CorrosionParams()
    domain = make_domain(params)
    p = params

    width = 128 if profile == "paper" else 64
    m_f = 64 if profile == "paper" else 48
    net = NetworkConfig(
        architecture="modified_mlp",
        depth=6,
        width=width,
        activation="gelu",
        input_dim=3,
        output_dim=2,
        ffe=FourierConfig(m_f=m_f, sigma_x=1.5, sigma_t=1.0, seed=seed),
        time_index=2,
    )

    ch_fn, ac_fn = residual_fns(params, domain)

    def both_residual_mag(ctx, pts, extra):
        return jnp.abs(ch_fn(ctx, pts, extra)) + jnp.abs(ac_fn(ctx, pts, extra))

    def ic_c(ctx, pts, extra):
        x = pts[:, 0] * p.x_half
        y = (pts[:, 1] + 1.0) * 0.5 * p.y_max
        d = jnp.sqrt(x**2 + y**2) - p.pit_radius
        phi0 = 0.5 * (1.0 + jnp.tanh(d / (2.0 * p.interface_delta)))
        return ctx["main"].u[:, 0] - h_interp(phi0)

    def ic_phi(ctx, pts, extra):
        x = pts[:, 0] * p.x_half
        y = (pts[:, 1] + 1.0) * 0.5 * p.y_max
        d = jnp.sqrt(x**2 + y**2) - p.pit_radius
        phi0 = 0.5 * (1.0 + jnp.tanh(d / (2.0 * p.interface_delta)))
        return ctx["main"].u[:, 1] - phi0

    def mouth_c(ctx, pts, extra):
        return ctx["main"].u[:, 0]

    def mouth_phi(ctx, pts, extra):
        return ctx["main"].u[:, 1]

    def make_noflux(coord, output):
        def fn(ctx, pts, extra):
            return ctx["main"].du[:, output, coord]

        return fn

    r = p.pit_radius
    n_b = 128 if profile == "paper" else 96
    point_specs = {
        "g": PointSpec(key="g", kind="interior", n=15**3 if profile == "paper" else 1100),
        "i": PointSpec(key="i", kind="initial", n=2048 if profile == "paper" else 768,
                       fixed=((2, 0.0),)),
        "b_mouth": PointSpec(key="b_mouth", kind="boundary", n=n_b,
                             fixed=((1, 0.0),), box=((0, (-r, r)),)),
        "b_bot_l": PointSpec(key="b_bot_l", kind="boundary", n=n_b,
                             fixed=((1, 0.0),), box=((0, (-p.x_half, -r)),)),
        "b_bot_r": PointSpec(key="b_bot_r", kind="boundary", n=n_b,
                             fixed=((1, 0.0),), box=((0, (r, p.x_half)),)),
        "b_top": PointSpec(key="b_top", kind="boundary", n=n_b, fixed=((1, p.y_max),)),
        "b_left": PointSpec(key="b_left", kind="boundary", n=n_b, fixed=((0, -p.x_half),)),
        "b_right": PointSpec(key="b_right", kind="boundary", n=n_b, fixed=((0, p.x_half),)),
    }

    irr_spec = IrreversibilitySpec(coordinate=2, direction="backward", output=1)

    def irr_fn(ctx, pts, extra):
        return violation(ctx["main"].du[:, 1, 2], irr_spec)

    CH, AC = 0, 1  # stagger stages per governing equation
    terms = (
        TermDef(name="g_ch", weight_key="g_ch", kind="residual", points_key="g",
                fn=ch_fn, stages=(CH,), causal=True),
        TermDef(name="g_ac", weight_key="g_ac", kind="residual", points_key="g",
                fn=ac_fn, stages=(AC,), causal=True),
        TermDef(name="i_c", weight_key="i", kind="residual", points_key="i",
                fn=ic_c, stages=(CH,)),
        TermDef(name="i_phi", weight_key="i", kind="residual", points_key="i",
                fn=ic_phi, stages=(AC,)),
        TermDef(name="b_mouth_c", weight_key="b", kind="residual", points_key="b_mouth",
                fn=mouth_c, stages=(CH,)),
        TermDef(name="b_mouth_phi", weight_key="b", kind="residual", points_key="b_mouth",
                fn=mouth_phi, stages=(AC,)),
        TermDef(name="b_bot_l_c", weight_key="b", kind="residual", points_key="b_bot_l",
                fn=make_noflux(1, 0), stages=(CH,)),
        TermDef(name="b_bot_r_c", weight_key="b", kind="residual", points_key="b_bot_r",
                fn=make_noflux(1, 0), stages=(CH,)),
        TermDef(name="b_top_c", weight_key="b", kind="residual", points_key="b_top",
                fn=make_noflux(1, 0), stages=(CH,)),
        TermDef(name="b_left_c", weight_key="b", kind="residual", points_key="b_left",
                fn=make_noflux(0, 0), stages=(CH,)),
        TermDef(name="b_right_c", weight_key="b", kind="residual", points_key="b_right",
                fn=make_noflux(0, 0), stages=(CH,)),
        TermDef(name="b_bot_l_phi", weight_key="b", kind="residual", points_key="b_bot_l",
                fn=make_noflux(1, 1), stages=(AC,)),
        TermDef(name="b_bot_r_phi", weight_key="b", kind="residual", points_key="b_bot_r",
                fn=make_noflux(1, 1), stages=(AC,)),
        TermDef(name="b_top_phi", weight_key="b", kind="residual", points_key="b_top",
                fn=make_noflux(1, 1), stages=(AC,)),
        TermDef(name="b_left_phi", weight_key="b", kind="residual", points_key="b_left",
                fn=make_noflux(0, 1), stages=(AC,)),
        TermDef(name="b_right_phi", weight_key="b", kind="residual", points_key="b_right",
                fn=make_noflux(0, 1), stages=(AC,)),
        TermDef(name="irr", weight_key="irr", kind="irr", points_key="g",
                fn=irr_fn, stages=(AC,)),
    )

    orders = {
        "g": {"main": DerivativeRequest(orders=(2, 2, 1))},
        "i": {"main": 0},
        "b_mouth": {"main": 0},
    }
    for key in ("b_bot_l", "b_bot_r", "b_top", "b_left", "b_right"):
        orders[key] = {"main": DerivativeRequest(orders=(1, 1, 0))}

    epochs = 2500 if profile == "paper" else 2400
    n_adaptive = 2000 if profile == "paper" else 900

    training = TrainingConfig(
        epochs=epochs,
        initial_lr=5e-4,
        optimizer="adam",
        stagger=StaggerSchedule(steps_per_stage=50),
        causal=CausalConfig(n_segments=10, epsilon_c=0.01),
        weighting=LossWeights(alpha_w=0.9, update_interval=100),
        seed=seed,
        n_adaptive=n_adaptive,
    )

    problem = Problem(
        name="corrosion",
        domain=domain,
        nets={"main": net},
        point_specs=point_specs,
        terms=terms,
        derivative_orders=orders,
        stage_params=(("net:main",), ("net:main",)),
        adaptive_key="g",
        refinement_residual=both_residual_mag,
        causal_coord=2,
        irr_term_names=("irr",),
    )
    problem.params = params
    problem.training = training
    return problem


def predict_fields(problem, params_dict, pts_phys, batch=8192):
    """(c, phi) at physical points [N, 3]."""
    import jax

    from ..networks import build_network

    net = build_network(problem.nets["main"])
    theta = params_dict["net:main"]
    norm = problem.domain.normalize(np.asarray(pts_phys))
    apply = jax.jit(net.apply_batch)
    out = []
    for start in range(0, norm.shape[0], batch):
        out.append(np.asarray(apply(theta, jnp.asarray(norm[start : start + batch]))))
    res = np.concatenate(out)
    return res[:, 0], res[:, 1]


def monitor_traces(problem, params_dict, times):
    """phi(t) at the three monitor points."""
    p = problem.params
    traces = {}
    for mx, my in p.monitor_points:
        pts = np.column_stack(
            [np.full_like(times, mx), np.full_like(times, my), np.asarray(times)]
        )
        _, phi = predict_fields(problem, params_dict, pts)
        traces[(mx, my)] = phi
    return traces


def make_evaluator(problem, reference, stride_xy=4, frame_stride=5):
    """phi relative L2 vs the FD grid on a thinned space-time subgrid."""
    from ..reference.metrics import relative_l2

    x = reference.axis("x")[::stride_xy]
    y = reference.axis("y")[::stride_xy]
    t = reference.axis("t")[::frame_stride]
    ref_phi = reference.fields["phi"][::frame_stride, ::stride_xy, ::stride_xy]
    tt, yy, xx = np.meshgrid(t, y, x, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel(), tt.ravel()])

    def evaluate(params_dict):
        _, phi = predict_fields(problem, params_dict, pts)
        return {"rel_l2": relative_l2(phi.reshape(ref_phi.shape), ref_phi)}

    return evaluate
