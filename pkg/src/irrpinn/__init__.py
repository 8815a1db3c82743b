"""Irreversibility-regularized PINN engine.

Trains physics-informed networks whose loss carries a penalty on the
positive/negative part of a chosen partial derivative of the prediction,
so that solutions respect the one-way character of the underlying process
(fronts that never retreat, interfaces that never heal).  Ships with five
benchmark problems and independently implemented reference solvers.

All numerics run in float64; importing this package switches JAX to x64
mode, which must happen before any JAX arrays are created.
"""

import jax

jax.config.update("jax_enable_x64", True)

from . import autodiff, losses, networks, sampler, trainer  # noqa: E402,F401

__version__ = "0.1.0"
