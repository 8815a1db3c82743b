"""Finite-difference reference for the traveling-wave benchmark.

Backward Euler in time, centered second differences in space, Newton
inner solve per step on a tridiagonal Jacobian.  Homogeneous Dirichlet
ends; Gaussian initial profile.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from ..errors import SolverError
from ..problems.fisher import FisherParams, initial_profile
from .gridio import GridSolution


def fd_fisher(
    params: FisherParams | None = None,
    nx: int = 1001,
    dt: float = 0.02,
    newton_tol: float = 1e-10,
    newton_max_iter: int = 50,
    store_every: int = 1,
) -> GridSolution:
    params = params or FisherParams()
    if nx < 3:
        raise ValueError("need nx >= 3")
    if dt <= 0:
        raise ValueError("need dt > 0")
    x = np.linspace(-params.L / 2, params.L / 2, nx)
    dx = x[1] - x[0]
    n_steps = int(round(params.T_end / dt))

    u = initial_profile(params, x)
    u[0] = u[-1] = 0.0

    frames = [u.copy()]
    times = [0.0]
    D, r, a = params.D, params.r, params.alpha
    inv_dt = 1.0 / dt
    lap_main = -2.0 * D / dx**2
    lap_off = D / dx**2

    for step in range(1, n_steps + 1):
        v = u.copy()
        prev = u
        converged = False
        for _ in range(newton_max_iter):
            lap = np.zeros_like(v)
            lap[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx**2
            F = (v - prev) * inv_dt - D * lap - r * v * (1.0 - a * v)
            F[0] = v[0]
            F[-1] = v[-1]
            # tridiagonal Jacobian in banded form
            diag = inv_dt - lap_main - r * (1.0 - 2.0 * a * v)
            upper = np.full(v.shape, -lap_off)
            lower = np.full(v.shape, -lap_off)
            diag[0] = diag[-1] = 1.0
            upper[1] = 0.0  # coupling of row 0 to node 1
            lower[-2] = 0.0  # coupling of row nx-1 to node nx-2
            ab = np.zeros((3, nx))
            ab[0, 1:] = upper[1:]
            ab[1, :] = diag
            ab[2, :-1] = lower[:-1]
            delta = solve_banded((1, 1), ab, F)
            v = v - delta
            if np.max(np.abs(delta)) < newton_tol:
                converged = True
                break
        if not converged:
            raise SolverError(f"Newton failed to converge at step {step}", step_index=step)
        u = v
        if step % store_every == 0:
            frames.append(u.copy())
            times.append(step * dt)

    return GridSolution(
        axes=[("t", np.asarray(times)), ("x", x)],
        fields={"u": np.asarray(frames)},
        meta={"dx": dx, "dt": dt, "scheme": "backward_euler_newton", "store_every": store_every},
    )


def front_position(sol: GridSolution, level: float = 0.5, side: str = "right"):
    """Level-crossing front trajectory; used for the KPP speed check."""
    from .metrics import extract_interface

    x = sol.axis("x")
    t = sol.axis("t")
    u = sol.fields["u"]
    positions = []
    for i in range(len(t)):
        row = u[i]
        if side == "right":
            mask = x >= 0
            positions.append(extract_interface(row[mask], x[mask], level))
        else:
            mask = x <= 0
            positions.append(-extract_interface(row[mask][::-1], -x[mask][::-1], level))
    return t, np.asarray(positions)
