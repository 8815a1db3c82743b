"""Brittle-fracture benchmark: a single-edge-notched tension test.

Plane-strain elasticity with a (1-phi)^2 stiffness degradation, a damage
driving force r = (G_c/ell)(phi - ell^2 lap phi) + g'(phi) psi0(eps), and
the complementarity conditions (phi_dot >= 0, admissible r, r*phi_dot = 0)
enforced through a pointwise switched residual.  The loading history is a
smooth ramp of the top-edge displacement; top/bottom displacements are
hard constraints built into the displacement network's output ansatz,
lateral edges stay traction-free via soft conditions, and the initial
crack enters through the phi initial condition.  Damage only grows:
forward temporal irreversibility on phi.

Units: mm, s, MPa (so G_c is N/mm); stresses are normalized by E inside
the residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from ..autodiff import DerivativeRequest
from ..losses import IrreversibilitySpec, LossWeights, kkt_residual, violation
from ..networks import NetworkConfig, build_network
from ..sampler import Domain
from ..trainer import StaggerSchedule, TrainingConfig
from .base import PointSpec, Problem, TermDef


@dataclass(frozen=True)
class FractureParams:
    E: float = 210.0e3  # Young's modulus, MPa
    nu: float = 0.3
    lame_lambda: float = 121.153e3  # MPa
    mu: float = 80.769e3  # MPa
    G_c: float = 2.7  # N/mm
    ell: float = 0.024  # mm
    u_r: float = 0.0525  # mm
    alpha_ramp: float = 4.0
    H: float = 1.0  # specimen height = width, mm
    crack_length: float = 0.5  # mm, from the left edge at mid-height
    eps_tol: float = 1.0e-3
    eps_phi: float = 1.0e-3

    def __post_init__(self):
        lam = self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))
        mu = self.E / (2 * (1 + self.nu))
        if abs(lam - self.lame_lambda) / lam > 1e-3 or abs(mu - self.mu) / mu > 1e-3:
            raise ValueError("Lame constants inconsistent with (E, nu) under plane strain")


def u_top(params: FractureParams, t):
    """Smooth loading protocol; reaches exactly u_r at t = 1."""
    xp = jnp if isinstance(t, jnp.ndarray) else np
    return params.u_r * xp.tanh(params.alpha_ramp * t) / xp.tanh(params.alpha_ramp)


def make_domain(params: FractureParams) -> Domain:
    h = params.H / 2
    return Domain(
        bounds=((-h, h), (-h, h), (0.0, 1.0)),
        roles=("space", "space", "time"),
        names=("x", "y", "t"),
    )


def crack_profile(params: FractureParams, x, y):
    """Initial damage: an exponential ridge along the notch line."""
    xp = jnp if isinstance(x, jnp.ndarray) else np
    ridge = xp.exp(-xp.abs(y) / params.ell)
    return xp.where(x <= 0.0, ridge, 0.0)


def make_displacement_forward(params: FractureParams, net):
    """Hard-constraint ansatz around the raw displacement network.

    u_x vanishes on top/bottom; u_y is zero at the bottom and follows the
    loading ramp at the top.  The free part is scaled by u_r so the raw
    network works at O(1).
    """
    h = params.H / 2

    def forward(theta, xn):
        x = xn[0] * h
        y = xn[1] * h
        t = (xn[2] + 1.0) * 0.5
        raw = net.apply(theta, xn)
        bulk = (y - h) * (y + h) * t * params.u_r
        lift = (y + h) / params.H * u_top(params, t)
        ux = bulk * raw[0]
        uy = bulk * raw[1] + lift
        return jnp.stack([ux, uy])

    return forward


DIAG = ((1.0, 1.0, 0.0),)  # extra sweep recovering the mixed x-y partial


def _strain_terms(params: FractureParams, bu, s):
    """Physical strains and second derivatives from a displacement bundle.

    ``s`` is the normalized-to-physical spatial scale (2/H); slots are
    (x, y, t, diag).
    """
    ux_x = bu.du[:, 0, 0] * s
    ux_y = bu.du[:, 0, 1] * s
    uy_x = bu.du[:, 1, 0] * s
    uy_y = bu.du[:, 1, 1] * s
    ux_xx = bu.d2u[:, 0, 0] * s**2
    ux_yy = bu.d2u[:, 0, 1] * s**2
    uy_xx = bu.d2u[:, 1, 0] * s**2
    uy_yy = bu.d2u[:, 1, 1] * s**2
    ux_xy = (bu.d2u[:, 0, 3] - bu.d2u[:, 0, 0] - bu.d2u[:, 0, 1]) / 2.0 * s**2
    uy_xy = (bu.d2u[:, 1, 3] - bu.d2u[:, 1, 0] - bu.d2u[:, 1, 1]) / 2.0 * s**2
    return ux_x, ux_y, uy_x, uy_y, ux_xx, ux_yy, uy_xx, uy_yy, ux_xy, uy_xy


def stress_tilde(params: FractureParams, ux_x, ux_y, uy_x, uy_y):
    """Undegraded stress normalized by E (plane strain)."""
    lam = params.lame_lambda / params.E
    mu = params.mu / params.E
    tr = ux_x + uy_y
    sxx = lam * tr + 2.0 * mu * ux_x
    syy = lam * tr + 2.0 * mu * uy_y
    sxy = mu * (ux_y + uy_x)
    return sxx, syy, sxy


def build(profile: str = "desk", params: FractureParams | None = None, seed: int = 0) -> Problem:
    params = params or FractureParams()
    domain = make_domain(params)
    p = params
    h = p.H / 2
    s = 2.0 / p.H  # d(normalized)/d(physical) for both spatial coords
    s_t = 2.0  # time maps [0,1] -> [-1,1]

    width = 128 if profile == "paper" else 64
    net_u_cfg = NetworkConfig(
        architecture="modified_mlp", depth=6, width=width, activation="swish",
        input_dim=3, output_dim=2,
    )
    net_phi_cfg = NetworkConfig(
        architecture="modified_mlp", depth=6, width=width, activation="swish",
        input_dim=3, output_dim=1, output_transform=(0.0, 1.0),
    )

    lam_t = p.lame_lambda / p.E
    mu_t = p.mu / p.E

    def eq_fn(ctx, pts, extra):
        bu = ctx["u"]
        bp = ctx["phi"]
        (ux_x, ux_y, uy_x, uy_y,
         ux_xx, ux_yy, uy_xx, uy_yy, ux_xy, uy_xy) = _strain_terms(p, bu, s)
        phi = bp.u[:, 0]
        phi_x = bp.du[:, 0, 0] * s
        phi_y = bp.du[:, 0, 1] * s
        g = (1.0 - phi) ** 2
        gp = -2.0 * (1.0 - phi)
        sxx, syy, sxy = stress_tilde(p, ux_x, ux_y, uy_x, uy_y)
        div_x = (lam_t + 2 * mu_t) * ux_xx + lam_t * uy_xy + mu_t * (ux_yy + uy_xy)
        div_y = (lam_t + 2 * mu_t) * uy_yy + lam_t * ux_xy + mu_t * (uy_xx + ux_xy)
        eq_x = g * div_x + gp * (phi_x * sxx + phi_y * sxy)
        eq_y = g * div_y + gp * (phi_x * sxy + phi_y * syy)
        return jnp.stack([eq_x, eq_y], axis=1)

    drive_coef = p.ell / p.G_c * p.E  # converts E-normalized energy density

    def r_tilde(ctx):
        """Driving force normalized by G_c/ell."""
        bu = ctx["u"]
        bp = ctx["phi"]
        ux_x = bu.du[:, 0, 0] * s
        ux_y = bu.du[:, 0, 1] * s
        uy_x = bu.du[:, 1, 0] * s
        uy_y = bu.du[:, 1, 1] * s
        phi = bp.u[:, 0]
        lap_phi = (bp.d2u[:, 0, 0] + bp.d2u[:, 0, 1]) * s**2
        exy = 0.5 * (ux_y + uy_x)
        tr = ux_x + uy_y
        psi0_t = 0.5 * lam_t * tr**2 + mu_t * (ux_x**2 + uy_y**2 + 2.0 * exy**2)
        gp = -2.0 * (1.0 - phi)
        return phi - p.ell**2 * lap_phi + drive_coef * gp * psi0_t, phi, bp.du[:, 0, 2] * s_t

    def kkt_fn(ctx, pts, extra):
        r, phi, phi_t = r_tilde(ctx)
        return kkt_residual(r, phi, phi_t, eps_tol=p.eps_tol, eps_phi=p.eps_phi)

    def traction_fn(ctx, pts, extra):
        bu = ctx["u"]
        bp = ctx["phi"]
        ux_x = bu.du[:, 0, 0] * s
        ux_y = bu.du[:, 0, 1] * s
        uy_x = bu.du[:, 1, 0] * s
        uy_y = bu.du[:, 1, 1] * s
        phi = bp.u[:, 0]
        g = (1.0 - phi) ** 2
        sxx, syy, sxy = stress_tilde(p, ux_x, ux_y, uy_x, uy_y)
        # lateral normals are +-e_x; sign squares away in the loss
        return jnp.stack([g * sxx, g * sxy], axis=1)

    def ic_phi_fn(ctx, pts, extra):
        x = pts[:, 0] * h
        y = pts[:, 1] * h
        return ctx["phi"].u[:, 0] - crack_profile(p, x, y)

    irr_spec = IrreversibilitySpec(coordinate=2, direction="forward")

    def irr_fn(ctx, pts, extra):
        return violation(ctx["phi"].du[:, 0, 2], irr_spec)

    def refine_fn(ctx, pts, extra):
        eq = eq_fn(ctx, pts, extra)
        return jnp.abs(eq[:, 0]) + jnp.abs(eq[:, 1]) + kkt_fn(ctx, pts, extra)

    n_interior = 15**3 if profile == "paper" else 1000
    point_specs = {
        "g": PointSpec(key="g", kind="interior", n=n_interior),
        "i": PointSpec(key="i", kind="initial", n=1024 if profile == "paper" else 768,
                       fixed=((2, 0.0),)),
        "b_left": PointSpec(key="b_left", kind="boundary", n=128, fixed=((0, -h),)),
        "b_right": PointSpec(key="b_right", kind="boundary", n=128, fixed=((0, h),)),
    }

    U, PHI = 0, 1
    terms = (
        TermDef(name="g_eq", weight_key="g_eq", kind="residual", points_key="g",
                fn=eq_fn, stages=(U,)),
        TermDef(name="b_left", weight_key="b", kind="residual", points_key="b_left",
                fn=traction_fn, stages=(U,)),
        TermDef(name="b_right", weight_key="b", kind="residual", points_key="b_right",
                fn=traction_fn, stages=(U,)),
        TermDef(name="g_kkt", weight_key="g_kkt", kind="residual", points_key="g",
                fn=kkt_fn, stages=(PHI,)),
        TermDef(name="i_phi", weight_key="i", kind="residual", points_key="i",
                fn=ic_phi_fn, stages=(PHI,)),
        TermDef(name="irr", weight_key="irr", kind="irr", points_key="g",
                fn=irr_fn, stages=(PHI,)),
    )

    u_full = DerivativeRequest(orders=(2, 2, 0), extra_directions=DIAG)
    u_first = DerivativeRequest(orders=(1, 1, 0))
    phi_full = DerivativeRequest(orders=(2, 2, 1))
    phi_first = DerivativeRequest(orders=(1, 1, 0))

    derivative_orders = {
        "g": {"u": u_full, "phi": phi_full},
        "i": {"phi": 0},
        "b_left": {"u": u_first, "phi": 0},
        "b_right": {"u": u_first, "phi": 0},
    }
    stage_orders = {
        U: {
            "g": {"u": u_full, "phi": phi_first},
            "b_left": {"u": u_first, "phi": 0},
            "b_right": {"u": u_first, "phi": 0},
        },
        PHI: {
            "g": {"u": u_first, "phi": phi_full},
            "i": {"phi": 0},
        },
    }

    epochs = 7000 if profile == "paper" else 3000
    n_adaptive = 500 if profile == "paper" else 400

    training = TrainingConfig(
        epochs=epochs,
        initial_lr=5e-4,
        optimizer="adam",
        stagger=StaggerSchedule(steps_per_stage=50),
        causal=None,
        weighting=LossWeights(alpha_w=0.9, update_interval=100),
        seed=seed,
        n_adaptive=n_adaptive,
    )

    net_u = build_network(net_u_cfg)
    problem = Problem(
        name="fracture",
        domain=domain,
        nets={"u": net_u_cfg, "phi": net_phi_cfg},
        point_specs=point_specs,
        terms=terms,
        derivative_orders=derivative_orders,
        stage_derivative_orders=stage_orders,
        stage_params=(("net:u",), ("net:phi",)),
        adaptive_key="g",
        refinement_residual=refine_fn,
        causal_coord=None,
        irr_term_names=("irr",),
        forward_fns={"u": make_displacement_forward(params, net_u)},
    )
    problem.params = params
    problem.training = training
    return problem


def predict_phi(problem, params_dict, pts_phys, batch=8192):
    from ..networks import build_network

    net = build_network(problem.nets["phi"])
    theta = params_dict["net:phi"]
    norm = problem.domain.normalize(np.asarray(pts_phys))
    apply = jax.jit(net.apply_batch)
    out = []
    for start in range(0, norm.shape[0], batch):
        out.append(np.asarray(apply(theta, jnp.asarray(norm[start : start + batch]))))
    return np.concatenate(out)[:, 0]


def reaction_force(problem, params_dict, times, n_line: int = 201):
    """Top-edge reaction per unit thickness: integral of g(phi) sigma_yy dx."""
    from ..autodiff import input_derivatives

    p = problem.params
    h = p.H / 2
    s = 2.0 / p.H
    nets = {name: build_network(cfg) for name, cfg in problem.nets.items()}
    fwd_u = problem.forward_fn(nets, "u")
    xs = np.linspace(-h, h, n_line)
    forces = []
    req = DerivativeRequest(orders=(1, 1, 0))
    for t in np.atleast_1d(times):
        pts = np.column_stack([xs, np.full_like(xs, h), np.full_like(xs, t)])
        norm = jnp.asarray(problem.domain.normalize(pts))
        bu = input_derivatives(fwd_u, params_dict["net:u"], norm, req)
        phi = nets["phi"].apply_batch(params_dict["net:phi"], norm)[:, 0]
        ux_x = np.asarray(bu.du[:, 0, 0]) * s
        uy_y = np.asarray(bu.du[:, 1, 1]) * s
        tr = ux_x + uy_y
        syy = p.lame_lambda * tr + 2.0 * p.mu * uy_y
        g = (1.0 - np.asarray(phi)) ** 2
        forces.append(float(np.trapezoid(g * syy, xs)))
    return np.asarray(forces)


def crack_band_span(problem, params_dict, t=1.0, level: float = 0.5,
                    n_x: int = 101, band_half_width: float = 0.12):
    """Fraction of the ligament covered by the connected damage band.

    Scans max-over-y of phi in a strip around the crack line for ligament
    positions x in [0, H/2]; returns the connected covered fraction
    starting at the notch tip.
    """
    p = problem.params
    h = p.H / 2
    xs = np.linspace(0.0, h, n_x)
    ys = np.linspace(-band_half_width, band_half_width, 25)
    xx, yy = np.meshgrid(xs, ys)
    pts = np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, t)])
    phi = predict_phi(problem, params_dict, pts).reshape(len(ys), len(xs))
    covered = phi.max(axis=0) >= level
    run = 0
    for flag in covered:
        if flag:
            run += 1
        else:
            break
    return run / n_x


def elastic_slope_analytic(params: FractureParams) -> float:
    """Uncracked plane-strain stiffness per unit thickness: E/(1-nu^2) * W/H."""
    return params.E / (1.0 - params.nu**2) * (params.H / params.H)
