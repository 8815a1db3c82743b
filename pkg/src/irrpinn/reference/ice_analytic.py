"""Closed-form reference for the melting benchmark.

The driven interface recedes linearly, R(t) = R0 - lambda*t, carrying its
equilibrium tanh profile; the curvature correction M*kappa is three
orders of magnitude below the drive at the tabulated parameters, so the
linear law is the reference.
"""

from __future__ import annotations

import numpy as np


def melting_radius(params, t):
    """R(t) = R0 - lambda * t."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > params.T_end):
        raise ValueError("time outside [0, T_end]")
    return params.R0 - params.lambda_melt * t


def analytic_ice(params, t, rho=None):
    """Returns (R(t), radial profile phi(rho, t)).

    ``rho`` defaults to a uniform radial grid spanning the domain.
    """
    radius = melting_radius(params, t)
    if rho is None:
        rho = np.linspace(0.0, params.half_width, 512)
    rho = np.asarray(rho, dtype=np.float64)
    phi = np.tanh((radius - rho) / (np.sqrt(2.0) * params.ell))
    return radius, phi
