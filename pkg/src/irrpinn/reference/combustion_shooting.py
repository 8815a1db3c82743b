"""Shooting method with bisection eigenvalue search for steady combustion.

Forward-Euler march of (T, dT/dx) from the inlet.  A march that turns
around (dT/dx < 0) means the trial speed is too low (flashback -> raise
the lower bracket); a march that runs away past the cap means it is too
high (blow-off -> lower the upper bracket).  Bisection tightens the
bracket until a full march survives or the bracket width drops under
``eps``; any remaining tail is filled with the equilibrium state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BracketError, DiscriminantError
from ..problems.combustion import CombustionParams

_MAX_BISECTIONS = 200


@dataclass
class ShootingResult:
    s_L_star: float
    x: np.ndarray
    T: np.ndarray
    grad_T: np.ndarray
    u: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    Y_F: np.ndarray
    omega: np.ndarray
    bisections: int
    bracket_width: float
    classifications: list


def _march(params: CombustionParams, s_L: float, n_grid: int):
    """One forward march; returns (status, fill_index, arrays).

    status: "ok" full march, "flashback", or "blowoff".
    """
    p = params
    dx = p.L_dom / (n_grid - 1)
    R_g = p.R_g
    T = np.empty(n_grid)
    gT = np.empty(n_grid)
    u = np.empty(n_grid)
    rho = np.empty(n_grid)
    pr = np.empty(n_grid)
    Y = np.empty(n_grid)
    om = np.empty(n_grid)

    T[0] = p.T_in
    gT[0] = p.dTdx_in
    pr[0] = p.p_in
    Y[0] = p.Y_F_in
    rho[0] = p.rho_in
    om[0] = p.A_pre * np.exp(-p.E_a / (p.R_univ * T[0])) * (rho[0] * Y[0]) ** p.nu

    c1 = dx * p.rho_in * p.c_p * s_L / p.lambda_cond
    c2 = dx * p.q_F / p.lambda_cond
    c3 = s_L + R_g * p.T_in / s_L
    u[0] = s_L

    for i in range(1, n_grid):
        gT[i] = gT[i - 1] + c1 * gT[i - 1] - c2 * om[i - 1]
        T[i] = T[i - 1] + dx * gT[i]
        if gT[i] < 0.0:
            return "flashback", i, (T, gT, u, rho, pr, Y, om)
        if T[i] > p.T_max:
            return "blowoff", i, (T, gT, u, rho, pr, Y, om)
        disc = c3**2 - 4.0 * R_g * T[i]
        if disc < 0.0:
            raise DiscriminantError(
                f"c^2 - 4 R_g T < 0 at grid {i} (s_L={s_L}, T={T[i]:.1f})"
            )
        u[i] = (c3 - np.sqrt(disc)) / 2.0
        rho[i] = p.rho_in * s_L / u[i]
        pr[i] = rho[i] * R_g * T[i]
        Y[i] = max(p.Y_F_in + p.c_p * (p.T_in - T[i]) / p.q_F, 0.0)
        om[i] = p.A_pre * np.exp(-p.E_a / (p.R_univ * T[i])) * (rho[i] * Y[i]) ** p.nu
    return "ok", n_grid, (T, gT, u, rho, pr, Y, om)


def shoot_combustion(
    params: CombustionParams | None = None,
    n_grid: int = 1000,
    bracket=(0.05, 5.0),
    eps: float = 1e-6,
) -> ShootingResult:
    params = params or CombustionParams()
    if n_grid < 100:
        raise ValueError("need n_grid >= 100")
    s_lo, s_hi = bracket
    if not s_lo < s_hi:
        raise ValueError("bracket must satisfy s_lo < s_hi")

    # the bracket must straddle the eigenvalue: too-low speeds flash back,
    # too-high speeds blow off; matching endpoint modes give bisection no
    # direction to move
    status_lo, _, _ = _march(params, s_lo, n_grid)
    status_hi, _, _ = _march(params, s_hi, n_grid)
    if status_lo == status_hi and status_lo != "ok":
        raise BracketError(
            f"bracket endpoints both classify as {status_lo}; widen the bracket"
        )

    classifications = []
    s_mid = 0.5 * (s_lo + s_hi)
    result_arrays = None
    fill_from = n_grid
    bisections = 0

    for _ in range(_MAX_BISECTIONS):
        s_mid = 0.5 * (s_lo + s_hi)
        bisections += 1
        status, idx, arrays = _march(params, s_mid, n_grid)
        classifications.append(status)
        result_arrays = arrays
        fill_from = idx
        if status == "flashback":
            s_lo = s_mid
        elif status == "blowoff":
            s_hi = s_mid
        if status == "ok" or (s_hi - s_lo) < eps:
            break
    else:
        raise BracketError("bisection exceeded the iteration budget")

    T, gT, u, rho, pr, Y, om = result_arrays
    if fill_from < n_grid:
        j = fill_from - 1
        T[fill_from:] = T[j]
        gT[fill_from:] = 0.0
        u[fill_from:] = u[j]
        rho[fill_from:] = rho[j]
        pr[fill_from:] = pr[j]
        Y[fill_from:] = Y[j]
        om[fill_from:] = om[j]

    x = np.linspace(0.0, params.L_dom, n_grid)
    return ShootingResult(
        s_L_star=s_mid,
        x=x,
        T=T,
        grad_T=gT,
        u=u,
        rho=rho,
        p=pr,
        Y_F=Y,
        omega=om,
        bisections=bisections,
        bracket_width=s_hi - s_lo,
        classifications=classifications,
    )
