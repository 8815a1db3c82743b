"""Steady premixed-flame benchmark: a 1D eigenvalue problem.

The temperature profile and the inlet flow speed (the eigenvalue) are
determined jointly: the energy balance

    rho_in * s_L * c_p * dT/dx - lambda * d2T/dx2 = -omega * q_F

is closed by algebraic flow relations, and only one s_L admits a profile
that heats monotonically into a burnt plateau.  Spatial forward
irreversibility on T selects exactly that branch.

Sign convention: omega >= 0 is the fuel consumption rate and the heat
release enters the balance with consumption sign, so the residual reads
rho_in*s_L*c_p*T' - lambda*T'' + omega*q_F with omega' = -omega; the
operational form used by both the marching reference and the residual is
lambda*T'' = rho_in*s_L*c_p*T' - omega*q_F.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import jax.numpy as jnp
import numpy as np

from ..losses import CausalConfig, IrreversibilitySpec, LossWeights, violation
from ..networks import FourierConfig, NetworkConfig
from ..sampler import Domain
from ..trainer import StaggerSchedule, TrainingConfig
from .base import PointSpec, Problem, TermDef


@dataclass(frozen=True)
class CombustionParams:
    R_univ: float = 8.314  # J/(mol K)
    A_pre: float = 1.4e8  # pre-exponential factor
    nu: float = 1.6  # reaction order
    E_a: float = 121417.2  # J/mol
    W: float = 0.02897  # kg/mol
    lambda_cond: float = 0.026  # W/(m K)
    c_p: float = 1000.0  # J/(kg K)
    q_F: float = 5.0e7  # J/kg
    T_in: float = 298.0  # K
    dTdx_in: float = 1.0e5  # K/m
    Y_F_in: float = 0.0909
    p_in: float = 101325.0  # Pa
    L_dom: float = 1.5e-3  # m
    T_max: float = 5000.0  # blow-off cap for the marching reference, K

    @property
    def R_g(self) -> float:
        """Specific gas constant R/W."""
        return self.R_univ / self.W

    @property
    def rho_in(self) -> float:
        """Inlet density from the ideal gas law."""
        return self.p_in * self.W / (self.R_univ * self.T_in)

    @property
    def T_ad(self) -> float:
        """Complete-burn temperature where Y_F reaches zero."""
        return self.T_in + self.q_F * self.Y_F_in / self.c_p


def derived_fields(params: CombustionParams, T, s_L):
    """Algebraic flow relations (omega, u, rho, Y_F, c, p) at temperature T.

    Y_F is clamped at zero from below so the reaction shuts off at the
    burnt state instead of going complex under the fractional order.
    Works on numpy or jax arrays.
    """
    xp = jnp if isinstance(T, jnp.ndarray) else np
    R_g = params.R_g
    c = s_L + R_g * params.T_in / s_L
    disc = c**2 - 4.0 * R_g * T
    u = (c - xp.sqrt(xp.maximum(disc, 1e-30))) / 2.0
    rho = params.rho_in * s_L / u
    Y_F = xp.maximum(params.Y_F_in + params.c_p * (params.T_in - T) / params.q_F, 0.0)
    omega = params.A_pre * xp.exp(-params.E_a / (params.R_univ * T)) * (rho * Y_F) ** params.nu
    p = rho * R_g * T
    return {"omega": omega, "u": u, "rho": rho, "Y_F": Y_F, "c": c, "p": p, "disc": disc}


def combustion_residual_and_derived(params: CombustionParams, T, dT_dx, d2T_dx2, s_L):
    """Physical-unit energy-balance residual plus the derived flow fields.

    Raises DiscriminantError for an unphysical (s_L, T) pair where the
    velocity quadratic has no real root.
    """
    from ..errors import DiscriminantError

    if np.any(np.asarray(T) <= 0):
        raise ValueError("temperature must be positive")
    d = derived_fields(params, np.asarray(T, dtype=np.float64), s_L)
    if np.any(np.asarray(d["disc"]) < 0):
        raise DiscriminantError(f"c^2 - 4 R_g T < 0 at s_L={s_L}")
    # omega >= 0 is the consumption rate, so heat release carries a minus
    # (see the module docstring for the sign convention)
    residual = (
        params.rho_in * s_L * params.c_p * np.asarray(dT_dx)
        - params.lambda_cond * np.asarray(d2T_dx2)
        - d["omega"] * params.q_F
    )
    derived = {k: d[k] for k in ("omega", "u", "rho", "Y_F", "c", "p")}
    return residual, derived


def make_domain(params: CombustionParams) -> Domain:
    return Domain(bounds=((0.0, params.L_dom),), roles=("space",), names=("x",))


def temperature_scale(params: CombustionParams) -> float:
    """Normalization span for the network output: T = T_in + dT * That."""
    return params.T_ad - params.T_in


def residual_fn(params: CombustionParams, domain: Domain):
    """Nondimensional energy balance; O(1) across the flame."""
    (s_x,) = domain.scale_factors()
    dT = temperature_scale(params)
    # divide through by lambda*dT*(2/L)^2 so the conduction term is That''
    conv_coef = params.rho_in * params.c_p / (params.lambda_cond * s_x)
    source_coef = params.q_F / (params.lambda_cond * dT * s_x**2)

    def fn(ctx, pts, extra):
        b = ctx["main"]
        # clamp the trainable speed and the temperature into the physical
        # window so arbitrary intermediate network states cannot blow up
        # the Arrhenius term or the velocity quadratic during training
        s_L = jnp.clip(extra["s_L"], 1e-3, 10.0)
        That = b.u[:, 0]
        T = jnp.clip(params.T_in + dT * That, 150.0, 2.0 * params.T_ad)
        dThat = b.du[:, 0, 0]
        d2That = b.d2u[:, 0, 0]
        flow = derived_fields(params, T, s_L)
        return conv_coef * s_L * dThat - d2That - source_coef * flow["omega"]

    return fn


def build(profile: str = "desk", params: CombustionParams | None = None, seed: int = 0) -> Problem:
    params = params or CombustionParams()
    domain = make_domain(params)
    dT = temperature_scale(params)
    (s_x,) = domain.scale_factors()

    net = NetworkConfig(
        architecture="resnet",
        depth=8,
        width=32,
        activation="tanh",
        input_dim=1,
        output_dim=1,
        ffe=FourierConfig(m_f=64, sigma_x=4.0, seed=seed),
    )

    res = residual_fn(params, domain)

    def bc_dirichlet(ctx, pts, extra):
        # That(0) = 0 <=> T = T_in
        return ctx["main"].u[:, 0]

    neumann_target = params.dTdx_in / (dT * s_x)

    def bc_neumann(ctx, pts, extra):
        return ctx["main"].du[:, 0, 0] - neumann_target

    irr_spec = IrreversibilitySpec(coordinate=0, direction="forward")

    def irr_fn(ctx, pts, extra):
        return violation(ctx["main"].du[:, 0, 0], irr_spec)

    n_general = 500
    point_specs = {
        "g": PointSpec(key="g", kind="interior", n=n_general),
        "b_in": PointSpec(key="b_in", kind="boundary", n=16, fixed=((0, 0.0),)),
    }

    terms = (
        TermDef(
            name="g", weight_key="g", kind="residual", points_key="g",
            fn=res, stages=(0, 1), causal=True,
        ),
        TermDef(name="b_dir", weight_key="b", kind="residual", points_key="b_in", fn=bc_dirichlet),
        TermDef(name="b_neu", weight_key="b", kind="residual", points_key="b_in", fn=bc_neumann),
        TermDef(name="irr", weight_key="irr", kind="irr", points_key="g", fn=irr_fn),
    )

    epochs = 20000 if profile == "paper" else 12000

    training = TrainingConfig(
        epochs=epochs,
        initial_lr=1e-3,
        optimizer="rprop_adam",
        stagger=StaggerSchedule(steps_per_stage=50),
        causal=CausalConfig(n_segments=10, epsilon_c=0.01),
        weighting=LossWeights(alpha_w=0.9, update_interval=100),
        seed=seed,
        n_adaptive=0,
    )

    problem = Problem(
        name="combustion",
        domain=domain,
        nets={"main": net},
        point_specs=point_specs,
        terms=terms,
        derivative_orders={"g": {"main": 2}, "b_in": {"main": 1}},
        # stage 0 trains the network with s_L frozen; stage 1 updates s_L alone
        stage_params=(("net:main",), ("extra:s_L",)),
        extra_init={"s_L": 0.5},
        adaptive_key=None,
        refinement_residual=None,
        causal_coord=0,  # information marches downstream from the inlet
        irr_term_names=("irr",),
    )
    problem.params = params
    problem.training = training
    return problem


def predict_temperature(problem, params_dict, x):
    """Physical-unit temperature profile at positions x."""
    import jax

    from ..networks import build_network

    net = build_network(problem.nets["main"])
    p = problem.params
    norm = problem.domain.normalize(np.asarray(x).reshape(-1, 1))
    That = np.asarray(jax.jit(net.apply_batch)(params_dict["net:main"], jnp.asarray(norm)))[:, 0]
    return p.T_in + temperature_scale(p) * That


def make_evaluator(problem, shooting_result, stride=4):
    from ..reference.metrics import relative_l2

    x = shooting_result.x[::stride]
    T_ref = shooting_result.T[::stride]

    def evaluate(params_dict):
        T_pred = predict_temperature(problem, params_dict, x)
        return {"rel_l2": relative_l2(T_pred, T_ref)}

    return evaluate
